//! What each subcommand computes. Every plan returns its files as
//! [`Artifact`]s and leaves writing them to the runner.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::*;
use crate::analysis::{extrapolate_convergence, fourier_spectrum, rms_deviation, steady_state_average, sup_norm_diff};
use crate::approx::{gamma_sigma_r, truncated_problems, PerAtomGamma};
use crate::cdw::{cdw_imbalance_trace, CdwEnsembleSpec, PhaseAverage, TimeTrace};
use crate::error::{Error, Result};
use crate::exact::{exact_cdw_imbalance, exact_observe, FullConfiguration};
use crate::fewbody::{EvolveOptions, TimeGrid};
use crate::model::{k_to_kappa, ModelSpec, Potential, ShellSpec, Spin};
use crate::reconstruct::{canonical_parent, parent_entropy, single_spin_density, SpinSectorDensity};

/// One output file and the metadata that goes into its sidecar.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub body: String,
    pub meta: Value,
}

impl Artifact {
    fn trace(name: &str, trace: &TimeTrace) -> Self {
        Artifact {
            name: name.to_string(),
            body: trace.to_csv(),
            meta: serde_json::to_value(&trace.metadata).unwrap_or(Value::Null),
        }
    }

    fn csv(name: &str, header: &str, rows: impl IntoIterator<Item = String>, meta: Value) -> Self {
        let mut body = format!("{header}\n");
        for r in rows {
            body.push_str(&r);
            body.push('\n');
        }
        Artifact {
            name: name.to_string(),
            body,
            meta,
        }
    }
}

/// Files and a short machine-readable summary.
pub type PlanOutput = (Vec<Artifact>, Value);

fn phase_list(model: &ModelSpec, phases: &PhaseAverage) -> Vec<f64> {
    match model.potential {
        Potential::AubryAndre { phase, .. } => phases.phases(phase),
        Potential::Stark { .. } => vec![0.0],
    }
}

fn mean_and_stderr(samples: &[Vec<f64>]) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = samples.len();
    let len = samples[0].len();
    let mean: Vec<f64> = (0..len).map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n as f64).collect();
    if n < 2 {
        return (mean, None);
    }
    let err = (0..len)
        .map(|k| {
            let var = samples.iter().map(|s| (s[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        })
        .collect();
    (mean, Some(err))
}

pub fn run_trace(cfg: &TraceConfig) -> Result<PlanOutput> {
    let trace = cdw_imbalance_trace(&cfg.ensemble, cfg.spin)?;
    let summary = json!({
        "samples": trace.len(),
        "final_value": trace.values.last(),
        "few_body_evolutions": trace.metadata.get("few_body_evolutions"),
    });
    Ok((vec![Artifact::trace("trace.csv", &trace)], summary))
}

pub fn run_spectrum(cfg: &SpectrumConfig) -> Result<PlanOutput> {
    let trace = cdw_imbalance_trace(&cfg.ensemble, cfg.spin)?;
    let spec = fourier_spectrum(&trace, cfg.window)?;
    let peak = match cfg.search {
        Some([lo, hi]) => spec.dominant_peak_in(lo, hi, &[]),
        None => spec.peak_index(),
    };
    let peak_frequency = peak.map(|k| spec.frequencies[k]);
    let rows = spec.frequencies.iter().zip(&spec.magnitudes).map(|(f, m)| format!("{f},{m}"));
    let meta = json!({"observable": "imbalance spectrum", "window": cfg.window, "resolution": spec.resolution()});
    let summary = json!({"peak_frequency": peak_frequency, "resolution": spec.resolution()});
    Ok((
        vec![
            Artifact::trace("trace.csv", &trace),
            Artifact::csv("spectrum.csv", "frequency,magnitude", rows, meta),
        ],
        summary,
    ))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub half_width: usize,
    pub kappa_up: usize,
    pub kappa_down: usize,
    pub interaction: f64,
    pub detuning: f64,
}

fn detuning_of(model: &ModelSpec) -> f64 {
    match model.potential {
        Potential::Stark { tilt_down, .. } => tilt_down,
        Potential::AubryAndre { amplitude, .. } => amplitude,
    }
}

fn with_detuning(model: &ModelSpec, d: f64) -> ModelSpec {
    let mut m = model.clone();
    m.potential = match m.potential {
        Potential::Stark { .. } => Potential::Stark {
            tilt_up: d,
            tilt_down: d,
        },
        Potential::AubryAndre { beta, phase, .. } => Potential::AubryAndre {
            amplitude: d,
            beta,
            phase,
        },
    };
    m
}

/// Cartesian product of the sweep axes, in row-major order.
pub fn sweep_points(cfg: &SweepConfig) -> Vec<SweepPoint> {
    let base = &cfg.ensemble;
    let or = |v: &[usize], d: usize| if v.is_empty() { vec![d] } else { v.to_vec() };
    let orf = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let hws = or(&cfg.axes.half_width, base.shells.half_width);
    let kus: Vec<usize> = if cfg.axes.k_up.is_empty() {
        vec![base.shells.kappa_up]
    } else {
        cfg.axes.k_up.iter().map(|&k| k_to_kappa(k)).collect()
    };
    let kds: Vec<usize> = if cfg.axes.k_down.is_empty() {
        vec![base.shells.kappa_down]
    } else {
        cfg.axes.k_down.iter().map(|&k| k_to_kappa(k)).collect()
    };
    let us = orf(&cfg.axes.interaction, base.model.interaction);
    let ds = orf(&cfg.axes.detuning, detuning_of(&base.model));
    let mut out = Vec::new();
    for &half_width in &hws {
        for &kappa_up in &kus {
            for &kappa_down in &kds {
                for &interaction in &us {
                    for &detuning in &ds {
                        out.push(SweepPoint {
                            half_width,
                            kappa_up,
                            kappa_down,
                            interaction,
                            detuning,
                        });
                    }
                }
            }
        }
    }
    out
}

fn point_ensemble(base: &CdwEnsembleSpec, p: &SweepPoint) -> Result<CdwEnsembleSpec> {
    let mut e = base.clone();
    e.shells = ShellSpec::new(p.half_width, p.kappa_up, p.kappa_down)?;
    e.model = with_detuning(&base.model, p.detuning);
    e.model.interaction = p.interaction;
    Ok(e)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<PlanOutput> {
    let points = sweep_points(cfg);
    let mut artifacts = Vec::new();
    let mut traces = Vec::with_capacity(points.len());
    let mut references: BTreeMap<(u64, u64), TimeTrace> = BTreeMap::new();
    let mut rows = Vec::new();
    for (n, p) in points.iter().enumerate() {
        let e = point_ensemble(&cfg.ensemble, p)?;
        let trace = cdw_imbalance_trace(&e, cfg.spin)?;
        let steady = match cfg.steady_window {
            Some([a, b]) => steady_state_average(&trace, a, b, trace.len())?,
            None => trace.values.iter().sum::<f64>() / trace.len() as f64,
        };
        let (rms, rms_err) = if cfg.exact_reference {
            let key = (p.interaction.to_bits(), p.detuning.to_bits());
            let reference = match references.entry(key) {
                std::collections::btree_map::Entry::Occupied(o) => o.into_mut(),
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(exact_cdw_imbalance(&e.model, e.atoms(Spin::Up), &e.grid, &e.evolve, cfg.spin)?)
                }
            };
            let (r, err) = rms_deviation(&trace, reference)?;
            (Some(r), Some(err))
        } else {
            (None, None)
        };
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        rows.push(format!(
            "{n},{},{},{},{},{},{steady},{},{}",
            p.half_width,
            crate::model::kappa_to_k(p.kappa_up),
            crate::model::kappa_to_k(p.kappa_down),
            p.interaction,
            p.detuning,
            fmt(rms),
            fmt(rms_err)
        ));
        artifacts.push(Artifact::trace(&format!("point_{n:03}.csv", n = n), &trace));
        traces.push(trace);
    }
    for (key, r) in &references {
        let name = format!("exact_U{}_D{}.csv", f64::from_bits(key.0), f64::from_bits(key.1));
        artifacts.push(Artifact::trace(&name, r));
    }
    artifacts.push(Artifact::csv(
        "summary.csv",
        "point,half_width,k_up,k_down,interaction,detuning,steady,rms,rms_err",
        rows,
        json!({"observable": "sweep summary", "spin": cfg.spin}),
    ));

    // convergence along each shell axis with the other parameters fixed
    let mut conv_rows = Vec::new();
    let mut fit_rows = Vec::new();
    let mut fits = Vec::new();
    for axis in [Spin::Up, Spin::Down] {
        let kappa = |p: &SweepPoint| if axis == Spin::Up { p.kappa_up } else { p.kappa_down };
        let mut groups: BTreeMap<(usize, usize, u64, u64), Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            let other = if axis == Spin::Up { p.kappa_down } else { p.kappa_up };
            groups
                .entry((p.half_width, other, p.interaction.to_bits(), p.detuning.to_bits()))
                .or_default()
                .push(i);
        }
        for (key, members) in groups.into_iter().filter(|(_, m)| m.len() >= 2) {
            for w in members.windows(2) {
                conv_rows.push(format!(
                    "{axis:?},{},{},{},{},{}",
                    key.0,
                    crate::model::kappa_to_k(kappa(&points[w[0]])),
                    crate::model::kappa_to_k(kappa(&points[w[1]])),
                    f64::from_bits(key.2),
                    sup_norm_diff(&traces[w[0]].values, &traces[w[1]].values)
                ));
            }
            let (ks, vals): (Vec<f64>, Vec<f64>) = members
                .iter()
                .map(|&i| (crate::model::kappa_to_k(kappa(&points[i])) as f64, steady_of(&traces[i], cfg)))
                .filter(|(k, _)| *k > 0.0)
                .unzip();
            if ks.len() >= 2 {
                let fit = extrapolate_convergence(&ks, &vals)?;
                fit_rows.push(format!(
                    "{axis:?},{},{},{},{},{},{}",
                    key.0,
                    crate::model::kappa_to_k(key.1),
                    f64::from_bits(key.2),
                    f64::from_bits(key.3),
                    fit.limit,
                    fit.slope
                ));
                fits.push(json!({"axis": axis, "half_width": key.0, "limit": fit.limit, "slope": fit.slope}));
            }
        }
    }
    artifacts.push(Artifact::csv(
        "convergence.csv",
        "axis,half_width,k_from,k_to,interaction,sup_norm_diff",
        conv_rows,
        json!({"observable": "sup-norm difference of consecutive shell sizes"}),
    ));
    artifacts.push(Artifact::csv(
        "extrapolation.csv",
        "axis,half_width,k_other,interaction,detuning,limit,slope",
        fit_rows,
        json!({"model": "steady = limit + slope / k"}),
    ));
    Ok((artifacts, json!({"points": points.len(), "extrapolations": fits})))
}

fn steady_of(trace: &TimeTrace, cfg: &SweepConfig) -> f64 {
    match cfg.steady_window {
        Some([a, b]) => steady_state_average(trace, a, b, trace.len()).unwrap_or(f64::NAN),
        None => trace.values.iter().sum::<f64>() / trace.len() as f64,
    }
}

/// Initial positions of the entanglement recipe on `2 l + 1` sites.
pub fn ee_initial_positions(half_width: usize, q_up: usize, q_down: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let l = 2 * half_width + 1;
    let i0 = half_width as i64 + 1;
    let walk = |step: i64, count: usize| -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        let mut m = 1;
        while out.len() < count {
            for s in [i0 + m * step, i0 - m * step] {
                if out.len() < count {
                    if s < 1 || s > l as i64 {
                        return Err(Error::config(format!("{count} atoms at spacing {step} do not fit on {l} sites")));
                    }
                    out.push(s as usize);
                }
            }
            m += 1;
        }
        Ok(out)
    };
    let mut up = walk(2, q_up)?;
    let mut down = walk(4, q_down)?;
    down.push(i0 as usize);
    up.sort_unstable();
    down.sort_unstable();
    Ok((up, down))
}

/// Phase-averaged bipartite entanglement entropy of the recipe state.
pub fn ee_trace(cfg: &EeConfig) -> Result<TimeTrace> {
    cfg.validate()?;
    let (up, down) = ee_initial_positions(cfg.half_width, cfg.q_up, cfg.q_down)?;
    let cut = cfg.cut.unwrap_or(cfg.half_width);
    let phases = phase_list(&cfg.model, &cfg.phases);
    let runs: Vec<Vec<f64>> = phases
        .par_iter()
        .map(|&phi| {
            let config = FullConfiguration::new(cfg.model.clone().with_phase(phi), up.clone(), down.clone())?;
            let mut values = Vec::with_capacity(cfg.grid.samples);
            let mut split = None;
            exact_observe(&config, &cfg.grid, &cfg.evolve, |_, space, m| {
                if split.is_none() {
                    split = Some(space.cut(cut)?);
                }
                values.push(split.as_ref().expect("cut prepared").entropy(m)?);
                Ok(())
            })?;
            Ok(values)
        })
        .collect::<Result<_>>()?;
    let (mean, err) = mean_and_stderr(&runs);
    let mut trace = TimeTrace::new(cfg.grid.times(), mean)
        .with_meta("observable", "entanglement entropy (nats)")
        .with_meta("cut_after_site", cut)
        .with_meta("up", &up)
        .with_meta("down", &down)
        .with_meta("phases", &phases);
    if let Some(e) = err {
        trace = trace.with_stderr(e);
    }
    Ok(trace)
}

pub fn run_ee(cfg: &EeConfig) -> Result<PlanOutput> {
    let trace = ee_trace(cfg)?;
    let summary = json!({"final_entropy": trace.values.last()});
    Ok((vec![Artifact::trace("ee.csv", &trace)], summary))
}

/// Averaged correlation profile at one detuning amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrProfile {
    pub amplitude: f64,
    /// `mean |C_{i0, j}|` for `j = 1..=L`.
    pub mean_abs: Vec<f64>,
    pub stderr: Vec<f64>,
    pub plateau: f64,
    pub plateau_stderr: f64,
}

fn corr_positions(cfg: &CorrConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let up: Vec<usize> = (1..=cfg.q_up).map(|m| cfg.origin + 2 * m).collect();
    if up.last().is_some_and(|&s| s > cfg.model.sites) {
        return Err(Error::config(format!("{} up atoms do not fit after site {}", cfg.q_up, cfg.origin)));
    }
    Ok((up, vec![cfg.origin]))
}

/// Time- and phase-averaged `|C_{i0, j}|` profiles, one per amplitude.
pub fn correlation_profiles(cfg: &CorrConfig) -> Result<Vec<CorrProfile>> {
    cfg.validate()?;
    let (up, down) = corr_positions(cfg)?;
    let l = cfg.model.sites;
    let [first, last] = cfg.plateau.unwrap_or([l / 2 + 1, l]);
    let amplitudes = if cfg.amplitudes.is_empty() {
        vec![detuning_of(&cfg.model)]
    } else {
        cfg.amplitudes.clone()
    };
    let phases = phase_list(&cfg.model, &cfg.phases);
    let tasks: Vec<(usize, f64)> = (0..amplitudes.len())
        .flat_map(|a| phases.iter().map(move |&p| (a, p)))
        .collect();
    let origin = cfg.origin - 1;
    let profiles: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(a, phi)| {
            let model = with_detuning(&cfg.model, amplitudes[a]).with_phase(phi);
            let config = FullConfiguration::new(model, up.clone(), down.clone())?;
            let mut acc = vec![0.0; l];
            exact_observe(&config, &cfg.grid, &cfg.evolve, |_, space, m| {
                let c = space.density_correlations(m);
                for (j, v) in acc.iter_mut().enumerate() {
                    *v += c[(origin, j)].abs();
                }
                Ok(())
            })?;
            Ok(acc.into_iter().map(|v| v / cfg.grid.samples as f64).collect())
        })
        .collect::<Result<_>>()?;
    let per_amp = phases.len();
    Ok(amplitudes
        .iter()
        .enumerate()
        .map(|(a, &amplitude)| {
            let runs = &profiles[a * per_amp..(a + 1) * per_amp];
            let (mean_abs, err) = mean_and_stderr(runs);
            let plateaus: Vec<Vec<f64>> = runs
                .iter()
                .map(|r| vec![r[first - 1..last].iter().sum::<f64>() / (last - first + 1) as f64])
                .collect();
            let (p, perr) = mean_and_stderr(&plateaus);
            CorrProfile {
                amplitude,
                stderr: err.unwrap_or_else(|| vec![0.0; l]),
                mean_abs,
                plateau: p[0],
                plateau_stderr: perr.map_or(0.0, |e| e[0]),
            }
        })
        .collect())
}

pub fn run_corr(cfg: &CorrConfig) -> Result<PlanOutput> {
    let profiles = correlation_profiles(cfg)?;
    let mut rows = Vec::new();
    for p in &profiles {
        for (j, (m, e)) in p.mean_abs.iter().zip(&p.stderr).enumerate() {
            rows.push(format!("{},{},{m},{e}", p.amplitude, j + 1));
        }
    }
    let plateau_rows = profiles.iter().map(|p| format!("{},{},{}", p.amplitude, p.plateau, p.plateau_stderr));
    let meta = json!({"observable": "time- and phase-averaged |C_{i0,j}|", "origin": cfg.origin, "q_up": cfg.q_up});
    let summary = json!({"plateaus": profiles.iter().map(|p| [p.amplitude, p.plateau]).collect::<Vec<_>>()});
    Ok((
        vec![
            Artifact::csv("correlations.csv", "amplitude,j,mean_abs_c,stderr", rows, meta.clone()),
            Artifact::csv("plateau.csv", "amplitude,plateau,stderr", plateau_rows, meta),
        ],
        summary,
    ))
}

/// Report of an approximate-versus-exact comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkReport {
    pub rms: f64,
    pub rms_err: f64,
    pub sup_norm: f64,
}

pub fn benchmark(cfg: &BenchmarkConfig) -> Result<(TimeTrace, TimeTrace, BenchmarkReport)> {
    cfg.validate()?;
    let e = &cfg.ensemble;
    let approx = cdw_imbalance_trace(e, cfg.spin)?;
    let exact = exact_cdw_imbalance(&e.model, e.atoms(Spin::Up), &e.grid, &e.evolve, cfg.spin)?;
    let (rms, rms_err) = rms_deviation(&approx, &exact)?;
    let sup_norm = sup_norm_diff(&approx.values, &exact.values);
    Ok((approx, exact, BenchmarkReport { rms, rms_err, sup_norm }))
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<PlanOutput> {
    let (approx, exact, r) = benchmark(cfg)?;
    let summary = json!({"rms": r.rms, "rms_err": r.rms_err, "sup_norm": r.sup_norm});
    Ok((
        vec![
            Artifact::trace("approx.csv", &approx),
            Artifact::trace("exact.csv", &exact),
        ],
        summary,
    ))
}

fn per_atom_history(cfg: &ReconstructConfig, spin: Spin) -> Result<Vec<Vec<PerAtomGamma>>> {
    let shells = match spin {
        Spin::Up => ShellSpec::new(cfg.half_width, 0, cfg.kappa_other)?,
        Spin::Down => ShellSpec::new(cfg.half_width, cfg.kappa_other, 0)?,
    };
    let problems = truncated_problems(&cfg.initial, spin, &shells)?;
    let per_problem: Vec<Vec<PerAtomGamma>> = problems
        .par_iter()
        .map(|p| gamma_sigma_r(p, &cfg.initial.model, &cfg.grid, &cfg.evolve))
        .collect::<Result<_>>()?;
    Ok((0..cfg.grid.samples)
        .map(|k| per_problem.iter().map(|g| g[k].clone()).collect())
        .collect())
}

fn density_at(history: &[Vec<PerAtomGamma>], k: usize, sites: usize) -> Result<SpinSectorDensity> {
    if history.is_empty() || history[k].is_empty() {
        let one = faer::Mat::from_fn(1, 1, |_, _| crate::Complex64::new(1.0, 0.0));
        return SpinSectorDensity::new(sites, 0, one);
    }
    single_spin_density(&history[k])
}

pub fn run_reconstruct(cfg: &ReconstructConfig) -> Result<PlanOutput> {
    cfg.validate()?;
    let sites = cfg.initial.model.sites;
    let up = if cfg.initial.up.is_empty() { Vec::new() } else { per_atom_history(cfg, Spin::Up)? };
    let down = if cfg.initial.down.is_empty() { Vec::new() } else { per_atom_history(cfg, Spin::Down)? };
    let times = cfg.grid.times();
    let mut rows = Vec::with_capacity(times.len());
    let mut last = None;
    for (k, t) in times.iter().enumerate() {
        let parent = canonical_parent(&density_at(&up, k, sites)?, &density_at(&down, k, sites)?)?;
        rows.push(format!("{t},{},{}", parent_entropy(&parent), parent.rank()));
        last = Some(parent);
    }
    let parent = last.expect("grid has samples");
    let summary = json!({"final_entropy": parent_entropy(&parent), "final_layers": parent.rank()});
    Ok((
        vec![
            Artifact::csv(
                "entropy.csv",
                "t_over_tau,entropy,layers",
                rows,
                json!({"observable": "von Neumann entropy of the canonical parent (nats)"}),
            ),
            Artifact {
                name: "parent_final.json".into(),
                body: parent.to_json()? + "\n",
                meta: json!({"time": times.last()}),
            },
        ],
        summary,
    ))
}

/// Step size recorded in provenance for a grid and options pair.
pub(crate) fn effective_dt(grid: &TimeGrid, opts: &EvolveOptions) -> Option<f64> {
    grid.steps(opts.dt).ok().map(|(_, dt)| dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ee_recipe_positions() {
        let (up, down) = ee_initial_positions(7, 4, 0).unwrap();
        assert_eq!((up, down), (vec![4, 6, 10, 12], vec![8]));
        let (up, down) = ee_initial_positions(7, 3, 1).unwrap();
        assert_eq!((up, down), (vec![6, 10, 12], vec![8, 12]));
        assert!(ee_initial_positions(2, 3, 0).is_err());
    }

    #[test]
    fn single_atom_entropy_at_start_is_zero() {
        let cfg = EeConfig {
            model: ModelSpec::aubry_andre(5, 1.0, 5.0, 8.0, 0.0),
            half_width: 2,
            q_up: 1,
            q_down: 0,
            cut: None,
            grid: TimeGrid::new(1.0, 3).unwrap(),
            phases: PhaseAverage::uniform(2),
            evolve: EvolveOptions::default(),
        };
        let t = ee_trace(&cfg).unwrap();
        assert!(t.values[0].abs() < 1e-14);
        assert!(t.values[2] > 0.0);
        assert!(t.stderr.is_some());
    }

    #[test]
    fn correlation_profile_of_lone_atom() {
        let cfg = CorrConfig {
            model: ModelSpec::aubry_andre(7, 1.0, 0.0, 8.0, 0.0),
            origin: 1,
            q_up: 0,
            grid: TimeGrid::new(2.0, 5).unwrap(),
            phases: PhaseAverage::uniform(1),
            amplitudes: vec![1.0, 8.0],
            plateau: None,
            evolve: EvolveOptions::default(),
        };
        let p = correlation_profiles(&cfg).unwrap();
        assert_eq!(p.len(), 2);
        // the plateau covers sites 4..=7
        let expect: f64 = p[0].mean_abs[3..7].iter().sum::<f64>() / 4.0;
        assert!((p[0].plateau - expect).abs() < 1e-15);
    }
}
