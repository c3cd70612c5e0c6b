//! Per-command run configurations and their validation.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::Window;
use crate::cdw::{CdwEnsembleSpec, PhaseAverage};
use crate::error::{Error, Result, SchemaIssue};
use crate::exact::FullConfiguration;
use crate::fewbody::{EvolveOptions, TimeGrid};
use crate::model::{ModelSpec, Spin};

fn down() -> Spin {
    Spin::Down
}

/// Ensemble imbalance trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub ensemble: CdwEnsembleSpec,
    #[serde(default = "down")]
    pub spin: Spin,
}

/// Ensemble trace and its Fourier spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub ensemble: CdwEnsembleSpec,
    #[serde(default = "down")]
    pub spin: Spin,
    #[serde(default)]
    pub window: Window,
    /// Frequency band `[lo, hi]` searched for the dominant peak.
    #[serde(default)]
    pub search: Option<[f64; 2]>,
}

/// Values an axis of a sweep runs through. Empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub half_width: Vec<usize>,
    pub k_up: Vec<usize>,
    pub k_down: Vec<usize>,
    pub interaction: Vec<f64>,
    /// Stark tilt (both spins) or quasiperiodic amplitude.
    pub detuning: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ensemble: CdwEnsembleSpec,
    #[serde(default = "down")]
    pub spin: Spin,
    #[serde(default)]
    pub axes: SweepAxes,
    /// Compare every point with the exact ensemble on the same lattice.
    #[serde(default)]
    pub exact_reference: bool,
    /// Time window `[t1, t2]` for steady-state values; the whole trace if absent.
    #[serde(default)]
    pub steady_window: Option<[f64; 2]>,
}

/// Entanglement entropy of one few-body state: a down atom in the middle of
/// a `2 l + 1` site lattice, up atoms at `i0 + 2, i0 - 2, i0 + 4, ...` and
/// extra down atoms at `i0 + 4, i0 - 4, i0 + 8, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EeConfig {
    pub model: ModelSpec,
    pub half_width: usize,
    pub q_up: usize,
    #[serde(default)]
    pub q_down: usize,
    /// The left block is sites `1..=cut`; defaults to `half_width`.
    #[serde(default)]
    pub cut: Option<usize>,
    pub grid: TimeGrid,
    #[serde(default)]
    pub phases: PhaseAverage,
    #[serde(default)]
    pub evolve: EvolveOptions,
}

/// Time- and phase-averaged `|C_{i0, j}|` of one few-body state: a down
/// atom at `origin`, up atoms at `origin + 2, origin + 4, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrConfig {
    pub model: ModelSpec,
    #[serde(default = "one")]
    pub origin: usize,
    pub q_up: usize,
    pub grid: TimeGrid,
    #[serde(default)]
    pub phases: PhaseAverage,
    /// Detuning amplitudes to scan; the model's own if empty.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Sites `[first, last]` averaged into the plateau; the upper half of
    /// the lattice by default.
    #[serde(default)]
    pub plateau: Option<[usize; 2]>,
    #[serde(default)]
    pub evolve: EvolveOptions,
}

fn one() -> usize {
    1
}

/// Approximate ensemble against the exact ensemble on the same lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub ensemble: CdwEnsembleSpec,
    #[serde(default = "down")]
    pub spin: Spin,
}

/// Per-atom occupancy matrices of a pure configuration turned into a
/// canonical parent state at every sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    pub initial: FullConfiguration,
    pub half_width: usize,
    /// Opposite-spin shell size used for each spin's atoms; the same-spin
    /// shell is empty.
    #[serde(default)]
    pub kappa_other: usize,
    pub grid: TimeGrid,
    #[serde(default)]
    pub evolve: EvolveOptions,
}

/// Parse `text` as `T`, reporting the JSON pointer of the first failure.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        let inner = e.into_inner();
        Error::Schema(vec![SchemaIssue::new(pointer, inner.to_string())])
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

/// Collects validation failures under JSON pointers.
#[derive(Default)]
pub(crate) struct Issues(Vec<SchemaIssue>);

impl Issues {
    pub(crate) fn check(&mut self, pointer: &str, r: Result<()>) {
        if let Err(e) = r {
            let message = match e {
                Error::Config(m) | Error::Contract(m) => m,
                other => other.to_string(),
            };
            self.0.push(SchemaIssue::new(pointer, message));
        }
    }

    pub(crate) fn push(&mut self, pointer: &str, message: impl Into<String>) {
        self.0.push(SchemaIssue::new(pointer, message));
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(self.0))
        }
    }
}

fn check_ensemble(issues: &mut Issues, base: &str, e: &CdwEnsembleSpec) {
    let before = issues.0.len();
    issues.check(&format!("{base}/model"), e.model.validate());
    issues.check(&format!("{base}/grid"), e.grid.validate());
    issues.check(&format!("{base}/shells"), e.shells.validate());
    issues.check(&format!("{base}/evolve/dt"), e.grid.steps(e.evolve.dt).map(|_| ()));
    if issues.0.len() == before {
        issues.check(base, e.validate());
    }
}

fn check_grid(issues: &mut Issues, grid: &TimeGrid, evolve: &EvolveOptions) {
    issues.check("/grid", grid.validate());
    issues.check("/evolve/dt", grid.steps(evolve.dt).map(|_| ()));
}

/// Validation beyond the shape of the JSON.
pub trait Validate {
    fn validate(&self) -> Result<()>;
}

impl Validate for TraceConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        check_ensemble(&mut issues, "/ensemble", &self.ensemble);
        issues.finish()
    }
}

impl Validate for SpectrumConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        check_ensemble(&mut issues, "/ensemble", &self.ensemble);
        if let Some([lo, hi]) = self.search {
            if !(lo >= 0.0 && hi > lo) {
                issues.push("/search", "band must satisfy 0 <= lo < hi");
            }
        }
        issues.finish()
    }
}

impl Validate for SweepConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        check_ensemble(&mut issues, "/ensemble", &self.ensemble);
        if let Some([a, b]) = self.steady_window {
            if !(a >= 0.0 && b > a && b <= self.ensemble.grid.t_max + 1e-9) {
                issues.push("/steady_window", "window must lie inside the time grid");
            }
        }
        if self.axes.half_width.contains(&0) {
            issues.push("/axes/half_width", "half widths must be positive");
        }
        if self.exact_reference
            && (self.ensemble.phases.count > 1 || !self.ensemble.hopping_ensemble.is_empty() || self.ensemble.translation_invariant)
        {
            issues.push(
                "/exact_reference",
                "the exact reference needs a single model on the full lattice without averaging",
            );
        }
        issues.finish()
    }
}

impl Validate for EeConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        issues.check("/model", self.model.validate());
        if self.model.sites != 2 * self.half_width + 1 {
            issues.push("/model/sites", format!("must equal 2 * half_width + 1 = {}", 2 * self.half_width + 1));
        }
        if let Some(c) = self.cut {
            if c == 0 || c >= self.model.sites {
                issues.push("/cut", "the cut must leave sites on both sides");
            }
        }
        if self.phases.count == 0 {
            issues.push("/phases/count", "at least one phase");
        }
        check_grid(&mut issues, &self.grid, &self.evolve);
        issues.finish()
    }
}

impl Validate for CorrConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        issues.check("/model", self.model.validate());
        if !self.model.is_aubry_andre() && !self.amplitudes.is_empty() {
            issues.push("/amplitudes", "amplitude scans need a quasiperiodic potential");
        }
        if self.origin == 0 || self.origin > self.model.sites {
            issues.push("/origin", "origin must be a lattice site");
        }
        if let Some([a, b]) = self.plateau {
            if a == 0 || a > b || b > self.model.sites {
                issues.push("/plateau", "plateau sites must satisfy 1 <= first <= last <= L");
            }
        }
        if self.phases.count == 0 {
            issues.push("/phases/count", "at least one phase");
        }
        check_grid(&mut issues, &self.grid, &self.evolve);
        issues.finish()
    }
}

impl Validate for BenchmarkConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        check_ensemble(&mut issues, "/ensemble", &self.ensemble);
        if self.ensemble.phases.count > 1 || !self.ensemble.hopping_ensemble.is_empty() {
            issues.push("/ensemble", "benchmarks compare a single model");
        }
        if self.ensemble.translation_invariant {
            issues.push("/ensemble/translation_invariant", "benchmarks sum over all centres");
        }
        issues.finish()
    }
}

impl Validate for ReconstructConfig {
    fn validate(&self) -> Result<()> {
        let mut issues = Issues::default();
        issues.check("/initial", self.initial.validate());
        if self.kappa_other > 2 * self.half_width {
            issues.push("/kappa_other", "shell larger than the window");
        }
        check_grid(&mut issues, &self.grid, &self.evolve);
        issues.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_reports_pointer() {
        let text = r#"{"ensemble": {"model": {"hopping": 1, "interaction": 0, "potential": {"kind": "stark", "tilt_up": 1, "tilt_down": 1, "bogus": 2}, "sites": 8},
            "filling_up": 0.5, "shells": {"half_width": 2, "kappa_up": 0, "kappa_down": 0}, "grid": {"t_max": 1, "samples": 3}}}"#;
        match parse_config::<TraceConfig>(text) {
            Err(Error::Schema(issues)) => assert_eq!(issues[0].pointer, "/ensemble/model/potential"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_issues_are_collected() {
        let text = r#"{"ensemble": {"model": {"hopping": 1, "interaction": 0, "potential": {"kind": "stark", "tilt_up": 1, "tilt_down": 1}, "sites": 1},
            "filling_up": 0.5, "shells": {"half_width": 1, "kappa_up": 5, "kappa_down": 0}, "grid": {"t_max_over_tau": 1, "n_samples": 1}}}"#;
        let cfg: TraceConfig = parse_config(text).unwrap();
        match cfg.validate() {
            Err(Error::Schema(issues)) => {
                let ptrs: Vec<&str> = issues.iter().map(|i| i.pointer.as_str()).collect();
                assert!(ptrs.contains(&"/ensemble/model"));
                assert!(ptrs.contains(&"/ensemble/grid"));
                assert!(ptrs.contains(&"/ensemble/shells"));
            }
            other => panic!("{other:?}"),
        }
    }
}
