//! Brute-force reference: the few-body engine applied to the whole lattice.

use std::sync::Arc;

use faer::MatRef;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdw::TimeTrace;
use crate::error::{Error, Result};
use crate::fewbody::{
    check_budget, evolve_on_grid, EvolveOptions, FewBodySpace, FewBodyState, PropagatorBundle, StateBatch, TimeGrid,
};
use crate::model::{imbalance_sign, ModelSpec, Spin, Sublattice};

/// A pure product initial state on the full lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullConfiguration {
    pub model: ModelSpec,
    /// Occupied sites (1-based, strictly increasing) of each spin.
    pub up: Vec<usize>,
    pub down: Vec<usize>,
}

impl FullConfiguration {
    pub fn new(model: ModelSpec, up: Vec<usize>, down: Vec<usize>) -> Result<Self> {
        let c = FullConfiguration { model, up, down };
        c.validate()?;
        Ok(c)
    }

    /// Alternating up/down atoms on the even sites, starting with `first`.
    pub fn neel(model: ModelSpec, first: Spin) -> Result<Self> {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (k, site) in (2..=model.sites).step_by(2).enumerate() {
            if k % 2 == 0 {
                a.push(site);
            } else {
                b.push(site);
            }
        }
        let (up, down) = match first {
            Spin::Up => (a, b),
            Spin::Down => (b, a),
        };
        Self::new(model, up, down)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        for (name, list) in [("up", &self.up), ("down", &self.down)] {
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::config(format!("{name} positions must be strictly increasing")));
            }
            if list.iter().any(|&s| s == 0 || s > self.model.sites) {
                return Err(Error::config(format!(
                    "{name} positions must lie in 1..={}",
                    self.model.sites
                )));
            }
        }
        Ok(())
    }

    pub fn positions(&self, spin: Spin) -> &[usize] {
        match spin {
            Spin::Up => &self.up,
            Spin::Down => &self.down,
        }
    }
}

/// Space, bundle and initial batch of a full-lattice problem.
pub fn prepare(config: &FullConfiguration, grid: &TimeGrid, opts: &EvolveOptions) -> Result<(Arc<FewBodySpace>, PropagatorBundle, StateBatch)> {
    config.validate()?;
    grid.validate()?;
    let sub = Sublattice::full(config.model.sites, config.model.boundary);
    let space = FewBodySpace::new(sub, config.up.len(), config.down.len())?;
    let (du, dd) = space.dims();
    check_budget(du, dd, 1, opts.budget_bytes)?;
    let dt = grid.steps(opts.dt)?.1;
    let bundle = PropagatorBundle::new(&config.model, &space.sublattice, &space.up, &space.down, dt, opts.splitting)?;
    let local = |sites: &[usize]| sites.iter().map(|s| s - 1).collect::<Vec<_>>();
    let start = space.basis_state(&local(&config.up), &local(&config.down))?;
    let batch = StateBatch::from_basis_states(du, dd, &[start]);
    Ok((Arc::new(space), bundle, batch))
}

/// Stream the evolved amplitude matrix to `observe` at every grid time.
pub fn exact_observe<F>(config: &FullConfiguration, grid: &TimeGrid, opts: &EvolveOptions, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &FewBodySpace, MatRef<'_, C64>) -> Result<()>,
{
    let (space, bundle, mut batch) = prepare(config, grid, opts)?;
    evolve_on_grid(&mut batch, &bundle, grid, |k, b| observe(k, &space, b.block(0)))
}

/// Full-lattice states at every grid time.
pub fn exact_evolve(config: &FullConfiguration, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Vec<FewBodyState>> {
    let (space, bundle, mut batch) = prepare(config, grid, opts)?;
    let mut out = Vec::with_capacity(grid.samples);
    evolve_on_grid(&mut batch, &bundle, grid, |_, b| {
        out.push(FewBodyState {
            space: space.clone(),
            amplitudes: b.block(0).to_owned(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Normalised even-minus-odd occupation of one spin on the full lattice.
pub fn state_imbalance(space: &FewBodySpace, m: MatRef<'_, C64>, spin: Spin) -> f64 {
    let n = space.basis(spin).particles();
    if n == 0 {
        return 0.0;
    }
    let dens = space.densities(m, spin);
    let sites = space.sublattice.sites();
    dens.iter().zip(sites).map(|(d, &s)| d * imbalance_sign(s)).sum::<f64>() / n as f64
}

pub fn exact_imbalance_trace(config: &FullConfiguration, grid: &TimeGrid, opts: &EvolveOptions, spin: Spin) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.samples);
    exact_observe(config, grid, opts, |_, space, m| {
        out.push(state_imbalance(space, m, spin));
        Ok(())
    })?;
    Ok(out)
}

/// Site densities of one spin at every grid time.
pub fn exact_densities(config: &FullConfiguration, grid: &TimeGrid, opts: &EvolveOptions, spin: Spin) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(grid.samples);
    exact_observe(config, grid, opts, |_, space, m| {
        out.push(space.densities(m, spin));
        Ok(())
    })?;
    Ok(out)
}

/// Every way to put `n_up` up and the rest down atoms on the even sites,
/// in lexicographic order of the up positions.
pub fn cdw_configurations(model: &ModelSpec, n_up: usize) -> Result<Vec<FullConfiguration>> {
    let evens: Vec<usize> = (2..=model.sites).step_by(2).collect();
    if n_up > evens.len() {
        return Err(Error::config(format!("{n_up} up atoms do not fit on {} even sites", evens.len())));
    }
    let basis = crate::fewbody::SectorBasis::new(evens.len(), n_up)?;
    (0..basis.dim())
        .map(|k| {
            let chosen = basis.occupied(k);
            let up: Vec<usize> = chosen.iter().map(|&p| evens[p]).collect();
            let down: Vec<usize> = evens.iter().copied().filter(|s| !up.contains(s)).collect();
            FullConfiguration::new(model.clone(), up, down)
        })
        .collect()
}

/// Imbalance of `spin` averaged uniformly over all charge-density-wave
/// configurations with `n_up` up atoms.
pub fn exact_cdw_imbalance(model: &ModelSpec, n_up: usize, grid: &TimeGrid, opts: &EvolveOptions, spin: Spin) -> Result<TimeTrace> {
    let configs = cdw_configurations(model, n_up)?;
    let traces: Vec<Vec<f64>> = configs
        .par_iter()
        .map(|c| exact_imbalance_trace(c, grid, opts, spin))
        .collect::<Result<_>>()?;
    let n = traces.len() as f64;
    let values = (0..grid.samples).map(|k| traces.iter().map(|t| t[k]).sum::<f64>() / n).collect();
    Ok(TimeTrace::new(grid.times(), values)
        .with_meta("observable", "imbalance")
        .with_meta("method", "exact")
        .with_meta("spin", spin)
        .with_meta("configurations", configs.len()))
}

/// A reference number produced by this module, with what is needed to
/// regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenValue {
    pub description: String,
    pub config: FullConfiguration,
    pub spin: Spin,
    pub time: f64,
    pub dt: f64,
    pub grid: TimeGrid,
    pub value: f64,
    /// Change of the value when the step is doubled.
    pub halving_difference: f64,
    pub config_hash: String,
    pub version: String,
}

/// Imbalance of `spin` at `grid.t_max`, computed at `dt` and at `2 dt`.
pub fn golden_imbalance(description: &str, config: &FullConfiguration, grid: TimeGrid, dt: f64, spin: Spin) -> Result<GoldenValue> {
    let at = |step: f64| -> Result<f64> {
        let opts = EvolveOptions {
            dt: step,
            ..EvolveOptions::default()
        };
        Ok(*exact_imbalance_trace(config, &grid, &opts, spin)?.last().expect("grid has samples"))
    };
    let fine = at(dt)?;
    let coarse = at(2.0 * dt)?;
    Ok(GoldenValue {
        description: description.to_string(),
        config: config.clone(),
        spin,
        time: grid.t_max,
        dt,
        grid,
        value: fine,
        halving_difference: (fine - coarse).abs(),
        config_hash: crate::provenance::content_hash(config)?,
        version: crate::provenance::VERSION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::bessel_occupancy;
    use crate::fewbody::single_particle_hamiltonian;
    use crate::linalg::real_to_complex;
    use crate::model::Boundary;

    #[test]
    fn initial_state() {
        let cfg = FullConfiguration::neel(ModelSpec::stark(8, 1.0, 5.0, 3.0), Spin::Up).unwrap();
        assert_eq!((cfg.up.clone(), cfg.down.clone()), (vec![2, 6], vec![4, 8]));
        let states = exact_evolve(&cfg, &TimeGrid::new(1.0, 3).unwrap(), &EvolveOptions::default()).unwrap();
        assert_eq!(states.len(), 3);
        assert!((states[0].norm() - 1.0).abs() < 1e-15);
        assert!((state_imbalance(&states[0].space, states[0].amplitudes.as_ref(), Spin::Down) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configurations() {
        let m = ModelSpec::stark(6, 1.0, 0.0, 1.0);
        assert!(FullConfiguration::new(m.clone(), vec![4, 2], vec![]).is_err());
        assert!(FullConfiguration::new(m.clone(), vec![7], vec![]).is_err());
        let big = FullConfiguration::new(ModelSpec::stark(20, 1.0, 0.0, 1.0), (1..=10).collect(), (11..=20).collect()).unwrap();
        let opts = EvolveOptions {
            budget_bytes: 1 << 20,
            ..EvolveOptions::default()
        };
        let err = exact_evolve(&big, &TimeGrid::new(1.0, 2).unwrap(), &opts).unwrap_err();
        assert!(matches!(err, Error::Resource { dimension, .. } if dimension == 184_756u128 * 184_756));
    }

    #[test]
    fn single_atom_follows_bessel_occupancy() {
        let delta = 2.0;
        let model = ModelSpec::stark(30, 1.0, 0.0, delta);
        let cfg = FullConfiguration::new(model, vec![], vec![15]).unwrap();
        let grid = TimeGrid::new(4.0, 9).unwrap();
        let opts = EvolveOptions {
            dt: 1.0 / 50.0,
            ..EvolveOptions::default()
        };
        let dens = exact_densities(&cfg, &grid, &opts, Spin::Down).unwrap();
        for (t, d) in grid.times().iter().zip(&dens) {
            for (i, &v) in d.iter().enumerate() {
                let b = bessel_occupancy(i as i64 + 1, 15, *t, 1.0, delta).unwrap();
                assert!((v - b).abs() < 1e-10, "t={t} i={i} {v} {b}");
            }
        }
    }

    #[test]
    fn noninteracting_energy_is_conserved() {
        let model = ModelSpec::stark(8, 1.0, 0.0, 1.0).with_boundary(Boundary::Periodic);
        let cfg = FullConfiguration::neel(model.clone(), Spin::Up).unwrap();
        let h = real_to_complex(
            single_particle_hamiltonian(&model, &Sublattice::full(8, Boundary::Periodic), Spin::Up).unwrap().as_ref(),
        );
        let mut energies = Vec::new();
        exact_observe(&cfg, &TimeGrid::new(100.0, 11).unwrap(), &EvolveOptions::default(), |_, space, m| {
            energies.push(space.energy(m, h.as_ref(), h.as_ref(), 0.0));
            Ok(())
        })
        .unwrap();
        let drift = energies.iter().map(|e| (e - energies[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn cdw_configuration_list() {
        let cs = cdw_configurations(&ModelSpec::stark(10, 1.0, 0.0, 1.0), 2).unwrap();
        assert_eq!(cs.len(), 10);
        assert_eq!((cs[0].up.clone(), cs[0].down.clone()), (vec![2, 4], vec![6, 8, 10]));
        assert!(cs.iter().all(|c| c.up.len() + c.down.len() == 5));
    }
}
