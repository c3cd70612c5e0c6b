use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::SectorBasis;
use super::hamiltonian::{interaction_table, sector_unitary_from_single, single_particle_hamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, real_to_complex, ONE};
use crate::model::{ModelSpec, Spin, Sublattice};

/// Default Trotter step, in units of `hbar / J`.
pub const DEFAULT_DT: f64 = 1.0 / 200.0;

/// Default memory ceiling for a single propagation.
pub const DEFAULT_BUDGET_BYTES: u128 = 2 << 30;

/// Step size, splitting and memory ceiling of a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    pub dt: f64,
    pub splitting: Splitting,
    pub budget_bytes: u128,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: DEFAULT_DT,
            splitting: Splitting::FirstOrder,
            budget_bytes: DEFAULT_BUDGET_BYTES,
        }
    }
}

impl EvolveOptions {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }
}

/// Uniform sampling grid `0, dt_s, ..., t_max` with `samples` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(alias = "t_max_over_tau")]
    pub t_max: f64,
    #[serde(alias = "n_samples")]
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, samples: usize) -> Result<Self> {
        let g = TimeGrid { t_max, samples };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::config("a time grid needs at least 2 samples"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::config(format!("t_max must be positive, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / (self.samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.samples).map(|k| k as f64 * h).collect()
    }

    /// Trotter steps per sample interval and the matching step, which is
    /// the largest step not above `dt` that tiles the interval exactly.
    pub fn steps(&self, dt: f64) -> Result<(usize, f64)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        let h = self.spacing();
        let n = (h / dt - 1e-9).ceil().max(1.0) as usize;
        Ok((n, h / n as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Hopping of both spins, then the interaction phase.
    #[default]
    FirstOrder,
    /// Half interaction phase on either side of the hopping step.
    Strang,
}

/// Everything needed to advance amplitude matrices of one sector pair by one
/// Trotter step.
#[derive(Debug, Clone)]
pub struct PropagatorBundle {
    pub u_up: Mat<C64>,
    /// Transposed down-spin sector propagator, applied from the right.
    pub u_down_t: Mat<C64>,
    pub phase: Mat<C64>,
    half_phase: Option<Mat<C64>>,
    pub dt: f64,
    pub splitting: Splitting,
}

impl PropagatorBundle {
    pub fn new(
        spec: &ModelSpec,
        sub: &Sublattice,
        up: &SectorBasis,
        down: &SectorBasis,
        dt: f64,
        splitting: Splitting,
    ) -> Result<Self> {
        let h_up = real_to_complex(single_particle_hamiltonian(spec, sub, Spin::Up)?.as_ref());
        let h_down = real_to_complex(single_particle_hamiltonian(spec, sub, Spin::Down)?.as_ref());
        Self::from_single(h_up.as_ref(), h_down.as_ref(), spec.interaction, up, down, dt, splitting)
    }

    /// Bundle from arbitrary Hermitian single-particle matrices.
    pub fn from_single(
        h_up: MatRef<'_, C64>,
        h_down: MatRef<'_, C64>,
        interaction: f64,
        up: &SectorBasis,
        down: &SectorBasis,
        dt: f64,
        splitting: Splitting,
    ) -> Result<Self> {
        let u_up = sector_unitary_from_single(expm_hermitian(h_up, dt)?.as_ref(), up)?;
        let u_down = sector_unitary_from_single(expm_hermitian(h_down, dt)?.as_ref(), down)?;
        let v = interaction_table(up, down, interaction);
        let phase_of = |scale: f64| {
            Mat::from_fn(v.nrows(), v.ncols(), |a, b| C64::from_polar(1.0, -scale * dt * v[(a, b)]))
        };
        let half_phase = match splitting {
            Splitting::FirstOrder => None,
            Splitting::Strang => Some(phase_of(0.5)),
        };
        Ok(PropagatorBundle {
            u_up,
            u_down_t: u_down.transpose().to_owned(),
            phase: phase_of(1.0),
            half_phase,
            dt,
            splitting,
        })
    }

    pub fn d_up(&self) -> usize {
        self.u_up.nrows()
    }

    pub fn d_down(&self) -> usize {
        self.u_down_t.nrows()
    }

    /// Largest deviation from unitarity of the two sector propagators.
    pub fn unitarity_defect(&self) -> f64 {
        crate::linalg::unitarity_defect(self.u_up.as_ref())
            .max(crate::linalg::unitarity_defect(self.u_down_t.as_ref()))
    }
}

/// Bytes needed to propagate `blocks` amplitude matrices of the given sector
/// dimensions, including both propagators and the phase table.
pub fn propagation_bytes(d_up: usize, d_down: usize, blocks: usize) -> u128 {
    let (du, dd, b) = (d_up as u128, d_down as u128, blocks.max(1) as u128);
    16 * (2 * b * du * dd + 2 * du * dd + du * du + dd * dd)
}

pub fn check_budget(d_up: usize, d_down: usize, blocks: usize, budget_bytes: u128) -> Result<()> {
    let bytes = propagation_bytes(d_up, d_down, blocks);
    if bytes > budget_bytes {
        return Err(Error::Resource {
            dimension: d_up as u128 * d_down as u128,
            bytes,
            budget: budget_bytes,
        });
    }
    Ok(())
}

fn hadamard(mut m: MatMut<'_, C64>, p: MatRef<'_, C64>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= p[(i, j)];
        }
    }
}

/// One Trotter step on a single amplitude matrix:
/// `M <- P o (U_up M U_down^T)`, or the symmetric variant.
pub fn trotter_step(m: &mut Mat<C64>, bundle: &PropagatorBundle) {
    let mut batch = StateBatch::from_matrices(std::slice::from_ref(m));
    batch.advance(bundle, 1);
    *m = batch.block(0).to_owned();
}

/// Stacking direction of several amplitude matrices that share a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `d_up x (n d_down)`: one wide product with `U_up`.
    Wide,
    /// `(n d_up) x d_down`: one tall product with `U_down^T`.
    Tall,
}

/// Several amplitude matrices of the same sector pair, stored side by side
/// so the larger of the two hopping products runs as a single matrix
/// multiplication.
#[derive(Debug, Clone)]
pub struct StateBatch {
    layout: Layout,
    blocks: usize,
    d_up: usize,
    d_down: usize,
    data: Mat<C64>,
    scratch: Mat<C64>,
}

impl StateBatch {
    pub fn zeros(d_up: usize, d_down: usize, blocks: usize) -> Self {
        let layout = if d_up >= d_down { Layout::Wide } else { Layout::Tall };
        let (r, c) = match layout {
            Layout::Wide => (d_up, blocks * d_down),
            Layout::Tall => (blocks * d_up, d_down),
        };
        StateBatch {
            layout,
            blocks,
            d_up,
            d_down,
            data: Mat::zeros(r, c),
            scratch: Mat::zeros(r, c),
        }
    }

    /// One basis state `(a, b)` per block, amplitude 1.
    pub fn from_basis_states(d_up: usize, d_down: usize, states: &[(usize, usize)]) -> Self {
        let mut batch = Self::zeros(d_up, d_down, states.len());
        for (k, &(a, b)) in states.iter().enumerate() {
            batch.block_mut(k)[(a, b)] = ONE;
        }
        batch
    }

    pub fn from_matrices(ms: &[Mat<C64>]) -> Self {
        let (du, dd) = ms.first().map_or((0, 0), |m| (m.nrows(), m.ncols()));
        let mut batch = Self::zeros(du, dd, ms.len());
        for (k, m) in ms.iter().enumerate() {
            batch.block_mut(k).copy_from(m.as_ref());
        }
        batch
    }

    pub fn len(&self) -> usize {
        self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks == 0
    }

    pub fn block(&self, k: usize) -> MatRef<'_, C64> {
        match self.layout {
            Layout::Wide => self.data.as_ref().submatrix(0, k * self.d_down, self.d_up, self.d_down),
            Layout::Tall => self.data.as_ref().submatrix(k * self.d_up, 0, self.d_up, self.d_down),
        }
    }

    pub fn block_mut(&mut self, k: usize) -> MatMut<'_, C64> {
        let (du, dd) = (self.d_up, self.d_down);
        match self.layout {
            Layout::Wide => self.data.as_mut().submatrix_mut(0, k * dd, du, dd),
            Layout::Tall => self.data.as_mut().submatrix_mut(k * du, 0, du, dd),
        }
    }

    fn apply_phase(&mut self, p: &Mat<C64>) {
        for k in 0..self.blocks {
            hadamard(self.block_mut(k), p.as_ref());
        }
    }

    fn kinetic(&mut self, bundle: &PropagatorBundle) {
        let (du, dd) = (self.d_up, self.d_down);
        match self.layout {
            Layout::Wide => {
                matmul(self.scratch.as_mut(), Accum::Replace, bundle.u_up.as_ref(), self.data.as_ref(), ONE, Par::Seq);
                for k in 0..self.blocks {
                    let src = self.scratch.as_ref().submatrix(0, k * dd, du, dd);
                    let dst = self.data.as_mut().submatrix_mut(0, k * dd, du, dd);
                    matmul(dst, Accum::Replace, src, bundle.u_down_t.as_ref(), ONE, Par::Seq);
                }
            }
            Layout::Tall => {
                matmul(self.scratch.as_mut(), Accum::Replace, self.data.as_ref(), bundle.u_down_t.as_ref(), ONE, Par::Seq);
                for k in 0..self.blocks {
                    let src = self.scratch.as_ref().submatrix(k * du, 0, du, dd);
                    let dst = self.data.as_mut().submatrix_mut(k * du, 0, du, dd);
                    matmul(dst, Accum::Replace, bundle.u_up.as_ref(), src, ONE, Par::Seq);
                }
            }
        }
    }

    /// Apply `steps` Trotter steps. Adjacent half phases of the symmetric
    /// splitting are merged into full ones.
    pub fn advance(&mut self, bundle: &PropagatorBundle, steps: usize) {
        assert_eq!((bundle.d_up(), bundle.d_down()), (self.d_up, self.d_down), "bundle shape mismatch");
        if steps == 0 || self.blocks == 0 {
            return;
        }
        match (&bundle.half_phase, bundle.splitting) {
            (Some(half), Splitting::Strang) => {
                self.apply_phase(half);
                for s in 0..steps {
                    self.kinetic(bundle);
                    self.apply_phase(if s + 1 == steps { half } else { &bundle.phase });
                }
            }
            _ => {
                for _ in 0..steps {
                    self.kinetic(bundle);
                    self.apply_phase(&bundle.phase);
                }
            }
        }
    }

    /// Squared norm of every block.
    pub fn norms_sqr(&self) -> Vec<f64> {
        (0..self.blocks)
            .map(|k| {
                let b = self.block(k);
                let mut acc = 0.0;
                for j in 0..b.ncols() {
                    for i in 0..b.nrows() {
                        acc += b[(i, j)].norm_sqr();
                    }
                }
                acc
            })
            .collect()
    }
}

/// Propagate a batch across `grid`, calling `observe(sample, batch)` at every
/// grid time including `t = 0`. The bundle step must tile the sample spacing.
pub fn evolve_on_grid<F>(batch: &mut StateBatch, bundle: &PropagatorBundle, grid: &TimeGrid, mut observe: F) -> Result<()>
where
    F: FnMut(usize, &StateBatch) -> Result<()>,
{
    let (steps, dt) = grid.steps(bundle.dt)?;
    if (dt - bundle.dt).abs() > 1e-12 * dt {
        return Err(Error::contract(format!(
            "bundle step {} does not tile the grid spacing {}",
            bundle.dt,
            grid.spacing()
        )));
    }
    observe(0, batch)?;
    for sample in 1..grid.samples {
        batch.advance(bundle, steps);
        observe(sample, batch)?;
    }
    Ok(())
}

/// The step a bundle should use to cover `grid` with steps no longer than `dt`.
pub fn grid_step(grid: &TimeGrid, dt: f64) -> Result<f64> {
    Ok(grid.steps(dt)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fewbody::hamiltonian::product_hamiltonian;
    use crate::linalg::{expm_hermitian, frobenius_norm};
    use crate::model::Boundary;

    fn setup(splitting: Splitting, dt: f64) -> (SectorBasis, SectorBasis, PropagatorBundle, ModelSpec) {
        let spec = ModelSpec::stark(9, 1.0, 5.0, 1.3);
        let sub = Sublattice::window(5, 2, 9, Boundary::Open);
        let up = SectorBasis::new(5, 2).unwrap();
        let down = SectorBasis::new(5, 1).unwrap();
        let b = PropagatorBundle::new(&spec, &sub, &up, &down, dt, splitting).unwrap();
        (up, down, b, spec)
    }

    #[test]
    fn grid_steps_tile_spacing() {
        let g = TimeGrid::new(10.0, 11).unwrap();
        assert_eq!(g.steps(0.005).unwrap().0, 200);
        let (n, dt) = g.steps(0.3).unwrap();
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let (up, down, b, _) = setup(Splitting::FirstOrder, 0.0);
        let mut m = Mat::from_fn(up.dim(), down.dim(), |i, j| C64::new(i as f64, j as f64 - 0.5));
        let before = m.clone();
        trotter_step(&mut m, &b);
        assert!(crate::linalg::max_abs_diff(m.as_ref(), before.as_ref()) < 1e-14);
    }

    #[test]
    fn bundle_is_unitary_with_unit_phases() {
        let (_, _, b, _) = setup(Splitting::Strang, 0.01);
        assert!(b.unitarity_defect() < 1e-12);
        for j in 0..b.phase.ncols() {
            for i in 0..b.phase.nrows() {
                assert!((b.phase[(i, j)].norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn batch_layouts_agree_with_single_steps() {
        for (nu, nd) in [(2, 1), (1, 2)] {
            let spec = ModelSpec::aubry_andre(6, 1.0, 3.0, 2.0, 0.3);
            let sub = Sublattice::full(6, Boundary::Open);
            let up = SectorBasis::new(6, nu).unwrap();
            let down = SectorBasis::new(6, nd).unwrap();
            let b = PropagatorBundle::new(&spec, &sub, &up, &down, 0.05, Splitting::FirstOrder).unwrap();
            let states = [(0, 1), (3, 2), (up.dim() - 1, 0)];
            let mut batch = StateBatch::from_basis_states(up.dim(), down.dim(), &states);
            batch.advance(&b, 7);
            for (k, &(a, c)) in states.iter().enumerate() {
                let mut m = Mat::<C64>::zeros(up.dim(), down.dim());
                m[(a, c)] = ONE;
                for _ in 0..7 {
                    trotter_step(&mut m, &b);
                }
                assert!(crate::linalg::max_abs_diff(m.as_ref(), batch.block(k)) < 1e-13);
            }
        }
    }

    #[test]
    fn trotter_matches_dense_exponential() {
        // 5 sites, one up and one down atom
        let spec = ModelSpec::stark(5, 1.0, 5.0, 0.0);
        let sub = Sublattice::full(5, Boundary::Open);
        let up = SectorBasis::new(5, 1).unwrap();
        let down = SectorBasis::new(5, 1).unwrap();
        let h1 = real_to_complex(single_particle_hamiltonian(&spec, &sub, Spin::Up).unwrap().as_ref());
        let hfull = product_hamiltonian(&up, &down, h1.as_ref(), h1.as_ref(), 5.0);
        let exact = expm_hermitian(hfull.as_ref(), 1.0).unwrap();
        let (a0, b0) = (up.index_of(0b00010).unwrap(), down.index_of(0b01000).unwrap());
        let col = a0 * down.dim() + b0;
        let mut errors = Vec::new();
        for dt in [1.0 / 200.0, 1.0 / 400.0] {
            let b = PropagatorBundle::new(&spec, &sub, &up, &down, dt, Splitting::FirstOrder).unwrap();
            let mut batch = StateBatch::from_basis_states(up.dim(), down.dim(), &[(a0, b0)]);
            batch.advance(&b, (1.0 / dt).round() as usize);
            let m = batch.block(0);
            let mut err = 0.0f64;
            for a in 0..up.dim() {
                for c in 0..down.dim() {
                    err = err.max((m[(a, c)] - exact[(a * down.dim() + c, col)]).norm());
                }
            }
            errors.push(err);
        }
        assert!(errors[0] <= 1e-1, "{errors:?}");
        let ratio = errors[0] / errors[1];
        assert!((1.8..2.2).contains(&ratio), "{errors:?}");
    }

    #[test]
    fn norm_survives_many_steps() {
        let (up, down, b, _) = setup(Splitting::FirstOrder, 0.005);
        let mut batch = StateBatch::from_basis_states(up.dim(), down.dim(), &[(3, 2)]);
        batch.advance(&b, 100_000);
        let n = frobenius_norm(batch.block(0));
        assert!((n - 1.0).abs() < 1e-10, "{n}");
    }

    #[test]
    fn budget() {
        assert!(check_budget(10, 10, 1, 1 << 20).is_ok());
        let err = check_budget(1 << 20, 1 << 10, 1, 1 << 30).unwrap_err();
        assert!(matches!(err, Error::Resource { dimension, .. } if dimension == 1 << 30));
    }
}
