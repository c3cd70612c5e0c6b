//! Imbalance of an incoherent charge-density-wave ensemble.
//!
//! The ensemble is the uniform mixture of every way to place `N_up` up and
//! `N_down` down atoms on the `L / 2` even sites, one atom per site. To
//! first order each atom contributes its own few-body imbalance, and that
//! depends only on which spins occupy the even sites near it. The ensemble
//! average therefore reduces to a weighted sum over the `2^K` spin patterns
//! of the `K` even sites in an atom's neighbourhood, per centre site.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::evolve_batch;
use crate::error::{Error, Result};
use crate::fewbody::{binomial, binomial_signed, EvolveOptions, FewBodySpace, TimeGrid};
use crate::model::{even_neighbourhood, imbalance_sign, kappa_to_k, ModelSpec, ShellSpec, Spin, Sublattice};

/// Observable values on a time grid (times in units of `hbar / J`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl TimeTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len(), "times and values differ in length");
        TimeTrace {
            times,
            values,
            stderr: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Self {
        assert_eq!(stderr.len(), self.values.len(), "stderr length mismatch");
        self.stderr = Some(stderr);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `t_over_tau,value` and `stderr` when present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.stderr.is_some() {
            "t_over_tau,value,stderr\n"
        } else {
            "t_over_tau,value\n"
        });
        for (k, (t, v)) in self.times.iter().zip(&self.values).enumerate() {
            match &self.stderr {
                Some(e) => out.push_str(&format!("{t},{v},{}\n", e[k])),
                None => out.push_str(&format!("{t},{v}\n")),
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::contract("empty CSV"))?;
        let has_err = header.trim() == "t_over_tau,value,stderr";
        if !has_err && header.trim() != "t_over_tau,value" {
            return Err(Error::contract(format!("unexpected CSV header {header:?}")));
        }
        let (mut times, mut values, mut errs) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> Result<f64> {
                cols.get(i)
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| Error::contract(format!("bad CSV row {}", n + 2)))
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
            if has_err {
                errs.push(parse(2)?);
            }
        }
        let trace = TimeTrace::new(times, values);
        Ok(if has_err { trace.with_stderr(errs) } else { trace })
    }

    /// Write `<path>` as CSV and `<path>.json` next to it with the metadata.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())?;
        let sidecar = sidecar_path(csv_path);
        std::fs::write(sidecar, serde_json::to_string_pretty(&self.metadata)? + "\n")?;
        Ok(())
    }
}

/// `data.csv` -> `data.csv.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".json");
    path.with_file_name(name)
}

/// `binom(L/2 - k_sbar - 1, N_sbar - q_sbar)`: the number of ensemble members
/// that share one neighbourhood pattern, counted per centre site.
pub fn config_multiplicity(sites: usize, n_other: usize, k_other: usize, q_other: usize) -> u128 {
    binomial_signed(sites as i64 / 2 - k_other as i64 - 1, n_other as i64 - q_other as i64)
}

/// Number of neighbourhood patterns with `q_same` extra spin-`s` atoms among
/// the nearest `k_same` even sites and `q_other` opposite-spin atoms among
/// the nearest `k_other >= k_same` even sites.
pub fn configuration_count(k_same: usize, k_other: usize, q_same: usize, q_other: usize) -> u128 {
    binomial(k_same as u64, q_same as u64)
        * binomial_signed(
            k_other as i64 - k_same as i64,
            q_other as i64 + q_same as i64 - k_same as i64,
        )
}

/// Sum over centres and patterns of the multiplicities. It equals
/// `N_s * binom(L/2, N_s)` whenever `N_s + N_sbar = L/2`.
pub fn ensemble_weight_total(sites: usize, n_same: usize, k_same: usize, k_other: usize) -> u128 {
    let n_other = sites / 2 - n_same;
    let mut total = 0u128;
    for _ in 0..sites / 2 {
        for q_same in 0..=k_same {
            for q_other in 0..=k_other {
                total += configuration_count(k_same, k_other, q_same, q_other)
                    * config_multiplicity(sites, n_other, k_other, q_other);
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Finite-lattice multiplicities.
    #[default]
    Exact,
    /// Large-lattice limit `lambda^q (1 - lambda)^(K - q)`.
    Stirling,
}

/// Average over `count` evenly spaced detuning phases in `[0, 2 pi)`. With a
/// seed, each phase is moved to a uniformly random point of its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseAverage {
    pub count: usize,
    pub jitter_seed: Option<u64>,
}

impl Default for PhaseAverage {
    fn default() -> Self {
        PhaseAverage {
            count: 1,
            jitter_seed: None,
        }
    }
}

impl PhaseAverage {
    pub fn uniform(count: usize) -> Self {
        PhaseAverage {
            count,
            jitter_seed: None,
        }
    }

    /// The phases to use; a single entry keeps the model's own phase.
    pub fn phases(&self, model_phase: f64) -> Vec<f64> {
        if self.count <= 1 {
            return vec![model_phase];
        }
        let slot = 2.0 * PI / self.count as f64;
        let mut rng = self.jitter_seed.map(ChaCha8Rng::seed_from_u64);
        (0..self.count)
            .map(|p| {
                let jitter = rng.as_mut().map_or(0.0, |r| r.gen::<f64>() * slot);
                p as f64 * slot + jitter
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingSample {
    pub hopping: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdwEnsembleSpec {
    pub model: ModelSpec,
    /// `lambda_up = 2 N_up / L`; the down filling is `1 - lambda_up`.
    pub filling_up: f64,
    pub shells: ShellSpec,
    pub grid: TimeGrid,
    #[serde(default)]
    pub weighting: Weighting,
    /// Evaluate a single bulk centre instead of summing over all centres.
    #[serde(default)]
    pub translation_invariant: bool,
    #[serde(default)]
    pub phases: PhaseAverage,
    /// Weighted average over several hopping strengths; empty means the
    /// model's own.
    #[serde(default)]
    pub hopping_ensemble: Vec<HoppingSample>,
    #[serde(default)]
    pub evolve: EvolveOptions,
}

impl CdwEnsembleSpec {
    pub fn new(model: ModelSpec, filling_up: f64, shells: ShellSpec, grid: TimeGrid) -> Self {
        CdwEnsembleSpec {
            model,
            filling_up,
            shells,
            grid,
            weighting: Weighting::Exact,
            translation_invariant: false,
            phases: PhaseAverage::default(),
            hopping_ensemble: Vec::new(),
            evolve: EvolveOptions::default(),
        }
    }

    pub fn filling(&self, spin: Spin) -> f64 {
        match spin {
            Spin::Up => self.filling_up,
            Spin::Down => 1.0 - self.filling_up,
        }
    }

    /// Atom count of one spin, `lambda L / 2` rounded.
    pub fn atoms(&self, spin: Spin) -> usize {
        (self.filling(spin) * (self.model.sites / 2) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.grid.validate()?;
        self.shells.validate()?;
        if self.model.sites % 2 != 0 {
            return Err(Error::config("a charge-density wave needs an even number of sites"));
        }
        if !(0.0..=1.0).contains(&self.filling_up) {
            return Err(Error::config(format!("filling must lie in [0, 1], got {}", self.filling_up)));
        }
        if self.weighting == Weighting::Exact {
            let n = self.filling_up * (self.model.sites / 2) as f64;
            if (n - n.round()).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "filling {} does not give a whole number of atoms on {} sites",
                    self.filling_up, self.model.sites
                )));
            }
        }
        if self.translation_invariant && (self.model.is_aubry_andre() || self.model.confinement != 0.0) {
            return Err(Error::config(
                "translation invariance needs an untrapped Stark potential",
            ));
        }
        if self.phases.count == 0 {
            return Err(Error::config("phase average needs at least one phase"));
        }
        if self.hopping_ensemble.iter().any(|h| !(h.hopping > 0.0) || !(h.weight >= 0.0))
            || (!self.hopping_ensemble.is_empty() && self.hopping_ensemble.iter().all(|h| h.weight == 0.0))
        {
            return Err(Error::config("hopping ensemble needs positive hoppings and weights"));
        }
        let k = kappa_to_k(self.shells.kappa_up.max(self.shells.kappa_down).min(self.model.sites - 1));
        if k + 1 > self.model.sites / 2 {
            return Err(Error::config("shells reach more even sites than the lattice has"));
        }
        Ok(())
    }
}

/// One spin pattern of a centre's neighbourhood and its weight in the
/// ensemble average.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Spin-`s` atoms kept in the few-body problem, centre included.
    pub same: Vec<usize>,
    /// Opposite-spin atoms kept.
    pub other: Vec<usize>,
    pub weight: f64,
    /// Extra spin-`s` atoms in the `k_s` neighbourhood and opposite-spin
    /// atoms in the `k_sbar` neighbourhood.
    pub q_same: usize,
    pub q_other: usize,
}

/// Neighbourhood sizes actually used on this lattice.
fn neighbourhood_sizes(model: &ModelSpec, shells: &ShellSpec, spin: Spin) -> (usize, usize) {
    let clamp = |kappa: usize| kappa_to_k(kappa.min(model.sites - 1));
    (clamp(shells.kappa(spin)), clamp(shells.kappa(spin.opposite())))
}

/// All `2^K` neighbourhood patterns around `center` with unit weights.
pub fn neighbourhood_patterns(model: &ModelSpec, shells: &ShellSpec, spin: Spin, center: usize) -> Vec<(Placement, usize)> {
    let (k_same, k_other) = neighbourhood_sizes(model, shells, spin);
    let near_same = even_neighbourhood(center, k_same, model.sites, model.boundary);
    let near_other = even_neighbourhood(center, k_other, model.sites, model.boundary);
    let mut union: Vec<usize> = near_same.clone();
    for s in &near_other {
        if !union.contains(s) {
            union.push(*s);
        }
    }
    let window = Sublattice::window(center, shells.half_width, model.sites, model.boundary);
    let k = union.len();
    let mut out = Vec::with_capacity(1 << k);
    for mask in 0u64..(1u64 << k) {
        let is_same = |idx: usize| mask & (1 << idx) != 0;
        let mut same = vec![center];
        let mut other = Vec::new();
        let (mut q_same, mut q_other, mut n_other_union) = (0, 0, 0);
        for (idx, &site) in union.iter().enumerate() {
            if is_same(idx) {
                if near_same.contains(&site) {
                    q_same += 1;
                    if window.contains(site) {
                        same.push(site);
                    }
                }
            } else {
                n_other_union += 1;
                if near_other.contains(&site) {
                    q_other += 1;
                    if window.contains(site) {
                        other.push(site);
                    }
                }
            }
        }
        same.sort_unstable();
        other.sort_unstable();
        out.push((
            Placement {
                same,
                other,
                weight: 1.0,
                q_same,
                q_other,
            },
            n_other_union,
        ));
    }
    out
}

/// Weighted patterns for one centre. Weights over all centres sum to one.
fn weighted_placements(spec: &CdwEnsembleSpec, spin: Spin, center: usize, centers: usize) -> Vec<Placement> {
    let half = spec.model.sites / 2;
    let patterns = neighbourhood_patterns(&spec.model, &spec.shells, spin, center);
    let union = (patterns.len() as f64).log2().round() as usize;
    let n_same = spec.atoms(spin);
    let n_other = half - n_same;
    let lambda_other = spec.filling(spin.opposite());
    // translation invariance stands one centre in for all of them
    let centre_factor = half as f64 / centers as f64;
    patterns
        .into_iter()
        .map(|(mut p, n_other_union)| {
            p.weight = match spec.weighting {
                Weighting::Exact => {
                    let c = binomial_signed(half as i64 - union as i64 - 1, n_other as i64 - n_other_union as i64);
                    let norm = n_same as f64 * binomial(half as u64, n_same as u64) as f64;
                    centre_factor * c as f64 / norm
                }
                Weighting::Stirling => {
                    centre_factor / half as f64
                        * lambda_other.powi(n_other_union as i32)
                        * (1.0 - lambda_other).powi((union - n_other_union) as i32)
                }
            };
            p
        })
        .filter(|p| p.weight != 0.0)
        .collect()
}

/// Centre sites the ensemble sum runs over.
pub fn ensemble_centers(spec: &CdwEnsembleSpec) -> Vec<usize> {
    let l = spec.model.sites;
    if spec.translation_invariant {
        let mid = l / 2;
        vec![if mid % 2 == 0 { mid } else { mid + 1 }]
    } else {
        (1..=l / 2).map(|j| 2 * j).collect()
    }
}

/// Per-placement imbalance traces, evolving placements with equal atom
/// numbers together.
pub fn placement_imbalances(
    model: &ModelSpec,
    spin: Spin,
    center: usize,
    half_width: usize,
    placements: &[Placement],
    grid: &TimeGrid,
    opts: &EvolveOptions,
) -> Result<Vec<Vec<f64>>> {
    let window = Sublattice::window(center, half_width, model.sites, model.boundary);
    let signs: Vec<f64> = window.sites().iter().map(|&s| imbalance_sign(s)).collect();
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, p) in placements.iter().enumerate() {
        groups.entry((p.same.len(), p.other.len())).or_default().push(i);
    }
    let mut out = vec![Vec::new(); placements.len()];
    for ((n_same, n_other), members) in groups {
        let (n_up, n_down) = match spin {
            Spin::Up => (n_same, n_other),
            Spin::Down => (n_other, n_same),
        };
        let space = FewBodySpace::new(window.clone(), n_up, n_down)?;
        let local = |sites: &[usize]| -> Vec<usize> {
            sites.iter().map(|&s| window.local_index(s).expect("placement inside window")).collect()
        };
        let starts = members
            .iter()
            .map(|&i| {
                let p = &placements[i];
                let (up, down) = match spin {
                    Spin::Up => (local(&p.same), local(&p.other)),
                    Spin::Down => (local(&p.other), local(&p.same)),
                };
                space.basis_state(&up, &down)
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = 1.0 / n_same as f64;
        let mut traces = vec![Vec::with_capacity(grid.samples); members.len()];
        evolve_batch(model, &space, &starts, grid, opts, |_, batch| {
            for (b, tr) in traces.iter_mut().enumerate() {
                let dens = space.densities(batch.block(b), spin);
                tr.push(scale * dens.iter().zip(&signs).map(|(d, s)| d * s).sum::<f64>());
            }
            Ok(())
        })?;
        for (i, tr) in members.into_iter().zip(traces) {
            out[i] = tr;
        }
    }
    Ok(out)
}

/// Imbalance of spin `spin` averaged over every neighbourhood pattern of
/// `center` with the given numbers of extra same-spin and opposite-spin
/// atoms.
#[allow(clippy::too_many_arguments)]
pub fn few_body_imbalance(
    model: &ModelSpec,
    center: usize,
    q_same: usize,
    q_other: usize,
    shells: &ShellSpec,
    spin: Spin,
    grid: &TimeGrid,
    opts: &EvolveOptions,
) -> Result<TimeTrace> {
    if center == 0 || center > model.sites || center % 2 != 0 {
        return Err(Error::config(format!("centre {center} is not an even site of the lattice")));
    }
    let placements: Vec<Placement> = neighbourhood_patterns(model, shells, spin, center)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| p.q_same == q_same && p.q_other == q_other)
        .collect();
    if placements.is_empty() {
        return Err(Error::config(format!(
            "no neighbourhood pattern has q = ({q_same}, {q_other})"
        )));
    }
    let traces = placement_imbalances(model, spin, center, shells.half_width, &placements, grid, opts)?;
    let n = traces.len() as f64;
    let values = (0..grid.samples).map(|k| traces.iter().map(|t| t[k]).sum::<f64>() / n).collect();
    Ok(TimeTrace::new(grid.times(), values)
        .with_meta("observable", "imbalance")
        .with_meta("spin", spin)
        .with_meta("center", center)
        .with_meta("q", [q_same, q_other])
        .with_meta("configurations", placements.len()))
}

/// One independent unit of ensemble work.
#[derive(Debug, Clone)]
struct Task {
    ensemble_slot: usize,
    model: ModelSpec,
    center: usize,
    placements: Vec<Placement>,
}

/// Number of distinct few-body evolutions an ensemble run performs.
pub fn distinct_evolutions(spec: &CdwEnsembleSpec, spin: Spin) -> Result<usize> {
    spec.validate()?;
    let centers = ensemble_centers(spec);
    let per_model: usize = centers
        .iter()
        .map(|&c| weighted_placements(spec, spin, c, centers.len()).len())
        .sum();
    Ok(per_model * model_variants(spec).len())
}

/// `(model, weight)` pairs for every hopping strength and phase.
fn model_variants(spec: &CdwEnsembleSpec) -> Vec<(ModelSpec, f64, usize)> {
    let hops: Vec<HoppingSample> = if spec.hopping_ensemble.is_empty() {
        vec![HoppingSample {
            hopping: spec.model.hopping,
            weight: 1.0,
        }]
    } else {
        spec.hopping_ensemble.clone()
    };
    let hop_total: f64 = hops.iter().map(|h| h.weight).sum();
    let base_phase = match spec.model.potential {
        crate::model::Potential::AubryAndre { phase, .. } => phase,
        _ => 0.0,
    };
    let phases = if spec.model.is_aubry_andre() {
        spec.phases.phases(base_phase)
    } else {
        vec![base_phase]
    };
    let mut out = Vec::new();
    for h in &hops {
        for (p, &phi) in phases.iter().enumerate() {
            let mut m = spec.model.clone().with_phase(phi);
            m.hopping = h.hopping;
            out.push((m, h.weight / hop_total, p));
        }
    }
    out
}

/// Ensemble-averaged imbalance of spin `spin`.
pub fn cdw_imbalance_trace(spec: &CdwEnsembleSpec, spin: Spin) -> Result<TimeTrace> {
    spec.validate()?;
    // The large-lattice weights describe a vanishing minority as well, so
    // only finite-lattice weighting needs atoms of the measured spin.
    if spec.weighting == Weighting::Exact && spec.atoms(spin) == 0 {
        return Err(Error::config(format!("the ensemble holds no {spin:?} atoms")));
    }
    let centers = ensemble_centers(spec);
    let variants = model_variants(spec);
    let mut tasks = Vec::new();
    for (slot, (model, _, _)) in variants.iter().enumerate() {
        for &c in &centers {
            let placements = weighted_placements(spec, spin, c, centers.len());
            if !placements.is_empty() {
                tasks.push(Task {
                    ensemble_slot: slot,
                    model: model.clone(),
                    center: c,
                    placements,
                });
            }
        }
    }
    let grid = spec.grid;
    let results: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|task| {
            let traces = placement_imbalances(
                &task.model,
                spin,
                task.center,
                spec.shells.half_width,
                &task.placements,
                &grid,
                &spec.evolve,
            )?;
            let mut acc = vec![0.0; grid.samples];
            for (p, tr) in task.placements.iter().zip(&traces) {
                for (a, v) in acc.iter_mut().zip(tr) {
                    *a += p.weight * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // fixed-order reduction: first per ensemble member, then across members
    let mut per_variant = vec![vec![0.0; grid.samples]; variants.len()];
    for (task, res) in tasks.iter().zip(&results) {
        for (a, v) in per_variant[task.ensemble_slot].iter_mut().zip(res) {
            *a += v;
        }
    }
    let phase_count = variants.iter().map(|v| v.2).max().unwrap_or(0) + 1;
    let mut values = vec![0.0; grid.samples];
    for ((_, w, _), tr) in variants.iter().zip(&per_variant) {
        for (a, v) in values.iter_mut().zip(tr) {
            *a += w * v / phase_count as f64;
        }
    }
    let mut trace = TimeTrace::new(grid.times(), values);
    if phase_count > 1 {
        // spread over phases of the hopping-averaged traces
        let mut by_phase = vec![vec![0.0; grid.samples]; phase_count];
        for ((_, w, p), tr) in variants.iter().zip(&per_variant) {
            for (a, v) in by_phase[*p].iter_mut().zip(tr) {
                *a += w * v;
            }
        }
        let n = phase_count as f64;
        let err = (0..grid.samples)
            .map(|k| {
                let mean = trace.values[k];
                let var = by_phase.iter().map(|t| (t[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            })
            .collect();
        trace = trace.with_stderr(err);
    }
    Ok(trace
        .with_meta("observable", "imbalance")
        .with_meta("spin", spin)
        .with_meta("ensemble", spec)
        .with_meta("few_body_evolutions", results.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_imbalance_trace, FullConfiguration};
    use crate::model::Boundary;
    use proptest::prelude::*;

    #[test]
    fn multiplicity_examples() {
        assert_eq!(config_multiplicity(8, 2, 1, 1), 2);
        assert_eq!(config_multiplicity(8, 2, 1, 3), 0);
    }

    #[test]
    fn pattern_counts() {
        for k_other in 0..=8usize {
            for k_same in 0..=k_other {
                let mut total = 0u128;
                for q_same in 0..=k_same {
                    for q_other in 0..=k_other {
                        total += configuration_count(k_same, k_other, q_same, q_other);
                    }
                }
                assert_eq!(total, 1u128 << k_other, "k = ({k_same}, {k_other})");
            }
        }
    }

    #[test]
    fn weight_totals() {
        for sites in (4..=16).step_by(2) {
            for n_same in 1..=sites / 2 {
                for k_other in 0..sites / 2 {
                    for k_same in 0..=k_other {
                        assert_eq!(
                            ensemble_weight_total(sites, n_same, k_same, k_other),
                            n_same as u128 * binomial((sites / 2) as u64, n_same as u64)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = TimeTrace::new(vec![0.0, 0.5], vec![1.0, -0.25]).with_stderr(vec![0.0, 0.125]);
        let text = t.to_csv();
        assert!(text.starts_with("t_over_tau,value,stderr\n"));
        let back = TimeTrace::from_csv(&text).unwrap();
        assert_eq!((back.times, back.values, back.stderr), (t.times, t.values, t.stderr));
        assert!(TimeTrace::from_csv("a,b\n").is_err());
    }

    #[test]
    fn translation_invariance_needs_a_plain_tilt() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let shells = ShellSpec::new(2, 0, 0).unwrap();
        let mut spec = CdwEnsembleSpec::new(ModelSpec::aubry_andre(20, 1.0, 1.0, 2.0, 0.0), 0.5, shells, grid);
        spec.translation_invariant = true;
        assert!(matches!(cdw_imbalance_trace(&spec, Spin::Down), Err(Error::Config(_))));
        spec.model = ModelSpec::stark(20, 1.0, 1.0, 2.0).with_confinement(0.01);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        spec.model.confinement = 0.0;
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn starts_at_one() {
        let grid = TimeGrid::new(2.0, 3).unwrap();
        let spec = CdwEnsembleSpec::new(ModelSpec::stark(20, 1.0, 3.0, 3.0), 0.5, ShellSpec::from_k(3, 0, 2).unwrap(), grid);
        let t = cdw_imbalance_trace(&spec, Spin::Down).unwrap();
        assert!((t.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interaction_free_traces_do_not_depend_on_neighbours() {
        let model = ModelSpec::stark(30, 1.0, 0.0, 2.0);
        let grid = TimeGrid::new(3.0, 7).unwrap();
        let shells = ShellSpec::from_k(4, 3, 0).unwrap();
        let opts = EvolveOptions::default();
        let base = few_body_imbalance(&model, 16, 0, 0, &shells, Spin::Down, &grid, &opts).unwrap();
        for q in 1..=3 {
            let t = few_body_imbalance(&model, 16, 0, q, &shells, Spin::Down, &grid, &opts).unwrap();
            assert!(crate::analysis::sup_norm_diff(&t.values, &base.values) < 1e-12);
        }
        let mut spec = CdwEnsembleSpec::new(model.clone(), 0.5, shells, grid);
        spec.translation_invariant = true;
        spec.weighting = Weighting::Stirling;
        let ens = cdw_imbalance_trace(&spec, Spin::Down).unwrap();
        assert!(crate::analysis::sup_norm_diff(&ens.values, &base.values) < 1e-12);
    }

    #[test]
    fn full_ring_matches_exact_ensemble() {
        let model = ModelSpec::stark(8, 1.0, 5.0, 3.0).with_boundary(Boundary::Periodic);
        let grid = TimeGrid::new(4.0, 9).unwrap();
        let opts = EvolveOptions::default();
        let shells = ShellSpec::new(4, 8, 8).unwrap();
        let spec = CdwEnsembleSpec::new(model.clone(), 0.5, shells, grid);
        for spin in [Spin::Up, Spin::Down] {
            let approx = cdw_imbalance_trace(&spec, spin).unwrap();
            // all 6 ways to put two up atoms on the four even sites
            let evens = [2usize, 4, 6, 8];
            let mut mean = vec![0.0; grid.samples];
            let mut count = 0.0;
            for a in 0..4 {
                for b in a + 1..4 {
                    let up = vec![evens[a], evens[b]];
                    let down: Vec<usize> = evens.iter().copied().filter(|s| !up.contains(s)).collect();
                    let cfg = FullConfiguration::new(model.clone(), up, down).unwrap();
                    let e = exact_imbalance_trace(&cfg, &grid, &opts, spin).unwrap();
                    for (m, v) in mean.iter_mut().zip(e) {
                        *m += v;
                    }
                    count += 1.0;
                }
            }
            let mean: Vec<f64> = mean.into_iter().map(|v| v / count).collect();
            assert!(crate::analysis::sup_norm_diff(&approx.values, &mean) < 1e-10);
        }
    }

    #[test]
    fn evolution_count() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let mut spec = CdwEnsembleSpec::new(ModelSpec::stark(40, 1.0, 5.0, 3.3), 0.5, ShellSpec::from_k(6, 0, 3).unwrap(), grid);
        spec.translation_invariant = true;
        assert_eq!(distinct_evolutions(&spec, Spin::Down).unwrap(), 8);
        spec.translation_invariant = false;
        assert_eq!(distinct_evolutions(&spec, Spin::Down).unwrap(), 8 * 20);
    }

    #[test]
    fn jittered_phases_are_reproducible() {
        let p = PhaseAverage {
            count: 12,
            jitter_seed: Some(7),
        };
        let a = p.phases(0.0);
        assert_eq!(a, p.phases(0.0));
        assert!(a.iter().enumerate().all(|(i, &x)| x >= i as f64 * PI / 6.0 && x < (i + 1) as f64 * PI / 6.0));
        assert_eq!(PhaseAverage::uniform(4).phases(1.0), vec![0.0, PI / 2.0, PI, 1.5 * PI]);
    }

    proptest! {
        #[test]
        fn stirling_weights_sum_to_one(k_other in 0usize..6, k_same_frac in 0.0f64..=1.0, lambda in 0.0f64..=1.0) {
            let k_same = (k_other as f64 * k_same_frac).floor() as usize;
            let grid = TimeGrid::new(1.0, 2).unwrap();
            let shells = ShellSpec::from_k(8, k_same, k_other).unwrap();
            let mut spec = CdwEnsembleSpec::new(ModelSpec::stark(40, 1.0, 1.0, 1.0), lambda, shells, grid);
            spec.weighting = Weighting::Stirling;
            spec.translation_invariant = true;
            let total: f64 = weighted_placements(&spec, Spin::Down, 20, 1).iter().map(|p| p.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
