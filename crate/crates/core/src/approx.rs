//! Shell truncation and per-atom occupancy matrices.
//!
//! For every atom `r` of spin `s` the many-body problem is replaced by a
//! small one: same-spin atoms outside a shell of `kappa_s` sites around the
//! atom become holes, opposite-spin atoms outside a shell of `kappa_sbar`
//! sites become holes, and the lattice is cut down to `2 l + 1` sites around
//! the atom. The spin-`s` occupancy matrix of that few-body state, divided
//! by the number of spin-`s` atoms it holds, is the atom's contribution to
//! the full occupancy matrix.

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::FullConfiguration;
use crate::fewbody::{
    check_budget, evolve_on_grid, EvolveOptions, FewBodySpace, PropagatorBundle, StateBatch, TimeGrid,
};
use crate::linalg::{mul, trace};
use crate::model::{imbalance_sign, shell_sites, ModelSpec, ShellSpec, Spin, Sublattice};

/// The few-body problem that stands in for one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedProblem {
    pub spin: Spin,
    pub center: usize,
    pub sublattice: Sublattice,
    /// Surviving spin-`s` atoms, centre included (absolute sites, ascending).
    pub same: Vec<usize>,
    /// Surviving opposite-spin atoms (absolute sites, ascending).
    pub other: Vec<usize>,
    /// Lattice size of the parent problem.
    pub lattice: usize,
}

impl TruncatedProblem {
    pub fn q_same(&self) -> usize {
        self.same.len() - 1
    }

    pub fn q_other(&self) -> usize {
        self.other.len()
    }

    pub fn positions(&self, spin: Spin) -> &[usize] {
        if spin == self.spin {
            &self.same
        } else {
            &self.other
        }
    }

    /// Local (0-based, sublattice) positions of one spin.
    pub fn local_positions(&self, spin: Spin) -> Vec<usize> {
        self.positions(spin)
            .iter()
            .map(|&s| self.sublattice.local_index(s).expect("survivors lie in the window"))
            .collect()
    }
}

/// Truncate `initial` around its `r`-th atom of spin `spin`.
///
/// Shell sizes larger than the lattice allows are clamped to `L - 1`. The
/// opposite-spin shell also covers the centre site itself.
pub fn apply_approximations(
    initial: &FullConfiguration,
    r: usize,
    spin: Spin,
    shells: &ShellSpec,
) -> Result<TruncatedProblem> {
    shells.validate()?;
    let positions = initial.positions(spin);
    let center = *positions.get(r).ok_or_else(|| {
        Error::contract(format!("atom index {r} out of range for {} atoms", positions.len()))
    })?;
    let l = initial.model.sites;
    let boundary = initial.model.boundary;
    let sublattice = Sublattice::window(center, shells.half_width, l, boundary);
    let same_shell = shell_sites(center, shells.kappa(spin).min(l - 1), l, boundary)?;
    let mut other_shell = shell_sites(center, shells.kappa(spin.opposite()).min(l - 1), l, boundary)?;
    other_shell.push(center);
    let keep = |atoms: &[usize], shell: &[usize]| -> Vec<usize> {
        atoms
            .iter()
            .copied()
            .filter(|s| shell.contains(s) && sublattice.contains(*s))
            .collect()
    };
    let mut same = keep(positions, &same_shell);
    same.push(center);
    same.sort_unstable();
    let other = keep(initial.positions(spin.opposite()), &other_shell);
    Ok(TruncatedProblem {
        spin,
        center,
        sublattice,
        same,
        other,
        lattice: l,
    })
}

/// One atom's share of the occupancy matrix, stored as a dense block over
/// the atom's window.
#[derive(Debug, Clone, PartialEq)]
pub struct PerAtomGamma {
    /// Absolute sites of the block rows and columns.
    pub sites: Vec<usize>,
    pub block: Mat<C64>,
    /// Lattice size of the frame the block embeds into.
    pub lattice: usize,
    /// Initial sites of the spin-`s` atoms the few-body state contained.
    pub members: Vec<usize>,
}

impl PerAtomGamma {
    pub fn embed(&self) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.lattice, self.lattice);
        for (a, &i) in self.sites.iter().enumerate() {
            for (b, &j) in self.sites.iter().enumerate() {
                out[(i - 1, j - 1)] = self.block[(a, b)];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        trace(self.block.as_ref()).re
    }

    /// `Tr(Gamma I)` with `I` the imbalance operator.
    pub fn imbalance(&self) -> f64 {
        self.sites
            .iter()
            .enumerate()
            .map(|(a, &s)| imbalance_sign(s) * self.block[(a, a)].re)
            .sum()
    }
}

/// Evolve a set of initial product states that share one sector pair on one
/// sublattice, observing the whole batch at each grid time.
pub(crate) fn evolve_batch<F>(
    model: &ModelSpec,
    space: &FewBodySpace,
    starts: &[(usize, usize)],
    grid: &TimeGrid,
    opts: &EvolveOptions,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, &StateBatch) -> Result<()>,
{
    let (du, dd) = space.dims();
    check_budget(du, dd, starts.len(), opts.budget_bytes)?;
    let dt = grid.steps(opts.dt)?.1;
    let bundle = PropagatorBundle::new(model, &space.sublattice, &space.up, &space.down, dt, opts.splitting)?;
    let mut batch = StateBatch::from_basis_states(du, dd, starts);
    evolve_on_grid(&mut batch, &bundle, grid, |k, b| observe(k, b))
}

fn problem_space(problem: &TruncatedProblem) -> Result<FewBodySpace> {
    FewBodySpace::new(
        problem.sublattice.clone(),
        problem.positions(Spin::Up).len(),
        problem.positions(Spin::Down).len(),
    )
}

/// Per-atom occupancy matrix at every time of `grid`.
pub fn gamma_sigma_r(problem: &TruncatedProblem, model: &ModelSpec, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Vec<PerAtomGamma>> {
    let space = problem_space(problem)?;
    let start = space.basis_state(&problem.local_positions(Spin::Up), &problem.local_positions(Spin::Down))?;
    let scale = 1.0 / problem.same.len() as f64;
    let mut out = Vec::with_capacity(grid.samples);
    evolve_batch(model, &space, &[start], grid, opts, |_, batch| {
        let mut block = space.occupancy_matrix(batch.block(0), problem.spin);
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                block[(i, j)] *= scale;
            }
        }
        out.push(PerAtomGamma {
            sites: problem.sublattice.sites().to_vec(),
            block,
            lattice: problem.lattice,
            members: problem.same.clone(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Per-atom imbalance `Tr(Gamma^{s,r} I)` at every grid time. Only the
/// diagonal is formed.
pub fn per_atom_imbalance(problem: &TruncatedProblem, model: &ModelSpec, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Vec<f64>> {
    let space = problem_space(problem)?;
    let start = space.basis_state(&problem.local_positions(Spin::Up), &problem.local_positions(Spin::Down))?;
    let signs: Vec<f64> = problem.sublattice.sites().iter().map(|&s| imbalance_sign(s)).collect();
    let scale = 1.0 / problem.same.len() as f64;
    let mut out = Vec::with_capacity(grid.samples);
    evolve_batch(model, &space, &[start], grid, opts, |_, batch| {
        let dens = space.densities(batch.block(0), problem.spin);
        out.push(scale * dens.iter().zip(&signs).map(|(d, s)| d * s).sum::<f64>());
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    First = 1,
    Second = 2,
    Third = 3,
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            3 => Ok(Order::Third),
            _ => Err(Error::config(format!("expansion order must be 1, 2 or 3, got {v}"))),
        }
    }
}

fn shares_members(a: &PerAtomGamma, b: &PerAtomGamma) -> bool {
    a.members.iter().any(|m| b.members.contains(m))
}

fn windows_overlap(a: &PerAtomGamma, b: &PerAtomGamma) -> bool {
    a.sites.iter().any(|s| b.sites.contains(s))
}

/// Occupancy matrix of one spin from its per-atom pieces.
///
/// Order 1 is the plain sum. Orders 2 and 3 subtract the ordered sum of
/// distinct pairwise products and add the ordered sum over distinct
/// triples, then rescale so the trace equals the number of atoms. Products
/// of two pieces whose few-body states contained a common atom are left
/// out, since they would count that atom twice.
pub fn assemble_gamma(per_atom: &[PerAtomGamma], order: Order) -> Result<Mat<C64>> {
    let first = per_atom.first().ok_or_else(|| Error::contract("no per-atom matrices to assemble"))?;
    let l = first.lattice;
    if per_atom.iter().any(|g| g.lattice != l) {
        return Err(Error::contract("per-atom matrices embed into different lattices"));
    }
    let full: Vec<Mat<C64>> = per_atom.iter().map(PerAtomGamma::embed).collect();
    let mut total = Mat::<C64>::zeros(l, l);
    for g in &full {
        total += g;
    }
    if order == Order::First || per_atom.len() == 1 {
        return Ok(total);
    }
    let n = per_atom.len();
    let pair_ok = |a: usize, b: usize| a != b && !shares_members(&per_atom[a], &per_atom[b]);
    let mut pairs = Mat::<C64>::zeros(l, l);
    for a in 0..n {
        for b in 0..n {
            if pair_ok(a, b) && windows_overlap(&per_atom[a], &per_atom[b]) {
                pairs += mul(full[a].as_ref(), full[b].as_ref());
            }
        }
    }
    total -= &pairs;
    if order == Order::Third {
        let mut triples = Mat::<C64>::zeros(l, l);
        for a in 0..n {
            for b in 0..n {
                if !pair_ok(a, b) || !windows_overlap(&per_atom[a], &per_atom[b]) {
                    continue;
                }
                let ab = mul(full[a].as_ref(), full[b].as_ref());
                for c in 0..n {
                    if pair_ok(a, c) && pair_ok(b, c) && windows_overlap(&per_atom[b], &per_atom[c]) {
                        triples += mul(ab.as_ref(), full[c].as_ref());
                    }
                }
            }
        }
        total += &triples;
    }
    let tr = trace(total.as_ref()).re;
    if !(tr.abs() > 1e-12) {
        return Err(Error::Numerical(format!("cannot normalise an occupancy matrix of trace {tr}")));
    }
    let eta = n as f64 / tr;
    Ok(Mat::from_fn(l, l, |i, j| total[(i, j)] * eta))
}

/// All truncated problems of one spin for a pure initial configuration.
pub fn truncated_problems(initial: &FullConfiguration, spin: Spin, shells: &ShellSpec) -> Result<Vec<TruncatedProblem>> {
    (0..initial.positions(spin).len())
        .map(|r| apply_approximations(initial, r, spin, shells))
        .collect()
}

/// Assembled occupancy matrix of `spin` at every grid time for a pure
/// initial configuration.
pub fn approx_gamma_trace(
    initial: &FullConfiguration,
    spin: Spin,
    shells: &ShellSpec,
    grid: &TimeGrid,
    opts: &EvolveOptions,
    order: Order,
) -> Result<Vec<Mat<C64>>> {
    let problems = truncated_problems(initial, spin, shells)?;
    if problems.is_empty() {
        return Err(Error::config(format!("no {spin:?} atoms to evolve")));
    }
    let per_problem: Vec<Vec<PerAtomGamma>> = problems
        .par_iter()
        .map(|p| gamma_sigma_r(p, &initial.model, grid, opts))
        .collect::<Result<_>>()?;
    (0..grid.samples)
        .map(|k| {
            let at: Vec<PerAtomGamma> = per_problem.iter().map(|g| g[k].clone()).collect();
            assemble_gamma(&at, order)
        })
        .collect()
}

/// First-order imbalance of `spin` for a pure initial configuration:
/// the mean of the per-atom imbalances.
pub fn approx_imbalance_trace(
    initial: &FullConfiguration,
    spin: Spin,
    shells: &ShellSpec,
    grid: &TimeGrid,
    opts: &EvolveOptions,
) -> Result<Vec<f64>> {
    let problems = truncated_problems(initial, spin, shells)?;
    if problems.is_empty() {
        return Err(Error::config(format!("no {spin:?} atoms to evolve")));
    }
    let traces: Vec<Vec<f64>> = problems
        .par_iter()
        .map(|p| per_atom_imbalance(p, &initial.model, grid, opts))
        .collect::<Result<_>>()?;
    let n = traces.len() as f64;
    Ok((0..grid.samples)
        .map(|k| traces.iter().map(|t| t[k]).sum::<f64>() / n)
        .collect())
}

/// Diagonal of an occupancy matrix.
pub fn diagonal(g: &Mat<C64>) -> Vec<f64> {
    (0..g.nrows()).map(|i| g[(i, i)].re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_evolve, exact_imbalance_trace};
    use crate::linalg::{hermiticity_defect, max_abs_diff, ZERO};
    use crate::model::Boundary;

    fn neel(l: usize, boundary: Boundary) -> FullConfiguration {
        FullConfiguration::neel(ModelSpec::stark(l, 1.0, 5.0, 3.0).with_boundary(boundary), Spin::Up).unwrap()
    }

    #[test]
    fn truncation_example() {
        // up atoms on 2, 6, 10, ...; down atoms on 4, 8, 12, ...
        let cfg = neel(16, Boundary::Open);
        let r = cfg.down.iter().position(|&s| s == 8).unwrap();
        let p = apply_approximations(&cfg, r, Spin::Down, &ShellSpec::new(3, 4, 0).unwrap()).unwrap();
        assert_eq!(p.sublattice.sites(), &[5, 6, 7, 8, 9, 10, 11]);
        assert_eq!(p.same, vec![8]);
        assert_eq!(p.other, vec![6, 10]);
        assert_eq!((p.q_same(), p.q_other()), (0, 2));
    }

    #[test]
    fn empty_shells_leave_one_atom() {
        let cfg = neel(16, Boundary::Open);
        let p = apply_approximations(&cfg, 1, Spin::Up, &ShellSpec::new(4, 0, 0).unwrap()).unwrap();
        assert_eq!((p.same.clone(), p.other.len(), p.sublattice.len()), (vec![6], 0, 9));
    }

    #[test]
    fn full_shells_on_a_ring_keep_everything() {
        let cfg = neel(8, Boundary::Periodic);
        let p = apply_approximations(&cfg, 0, Spin::Up, &ShellSpec::new(4, 8, 8).unwrap()).unwrap();
        assert_eq!(p.same, cfg.up);
        assert_eq!(p.other, cfg.down);
        assert!(p.sublattice.is_closed() && p.sublattice.len() == 8);
    }

    #[test]
    fn per_atom_gamma_properties() {
        let cfg = neel(12, Boundary::Open);
        let grid = TimeGrid::new(3.0, 4).unwrap();
        let opts = EvolveOptions::default().with_dt(0.01);
        let p = apply_approximations(&cfg, 1, Spin::Up, &ShellSpec::new(3, 4, 4).unwrap()).unwrap();
        let gs = gamma_sigma_r(&p, &cfg.model, &grid, &opts).unwrap();
        let start = &gs[0];
        for (a, &s) in start.sites.iter().enumerate() {
            let expect = if p.same.contains(&s) { 1.0 / p.same.len() as f64 } else { 0.0 };
            assert!((start.block[(a, a)].re - expect).abs() < 1e-15);
        }
        for g in &gs {
            assert!((g.trace() - 1.0).abs() < 1e-10);
            let e = g.embed();
            assert!(hermiticity_defect(e.as_ref()) < 1e-13);
            for i in 0..12 {
                for j in 0..12 {
                    if !(g.sites.contains(&(i + 1)) && g.sites.contains(&(j + 1))) {
                        assert_eq!(e[(i, j)], ZERO);
                    }
                }
            }
        }
        let imb = per_atom_imbalance(&p, &cfg.model, &grid, &opts).unwrap();
        for (g, v) in gs.iter().zip(imb) {
            assert!((g.imbalance() - v).abs() < 1e-13);
        }
    }

    #[test]
    fn single_atom_gamma_is_unchanged_by_order() {
        let cfg = FullConfiguration::new(ModelSpec::stark(10, 1.0, 0.0, 2.0), vec![], vec![4]).unwrap();
        let shells = ShellSpec::new(3, 0, 0).unwrap();
        let grid = TimeGrid::new(2.0, 3).unwrap();
        let opts = EvolveOptions::default();
        let g1 = approx_gamma_trace(&cfg, Spin::Down, &shells, &grid, &opts, Order::First).unwrap();
        let g3 = approx_gamma_trace(&cfg, Spin::Down, &shells, &grid, &opts, Order::Third).unwrap();
        for (a, b) in g1.iter().zip(&g3) {
            assert!(max_abs_diff(a.as_ref(), b.as_ref()) < 1e-14);
        }
        assert!(assemble_gamma(&[], Order::First).is_err());
    }

    #[test]
    fn exact_limit_on_a_ring() {
        let cfg = neel(8, Boundary::Periodic);
        let shells = ShellSpec::new(4, 8, 8).unwrap();
        let grid = TimeGrid::new(5.0, 11).unwrap();
        let opts = EvolveOptions::default();
        for spin in [Spin::Up, Spin::Down] {
            let a = approx_imbalance_trace(&cfg, spin, &shells, &grid, &opts).unwrap();
            let e = exact_imbalance_trace(&cfg, &grid, &opts, spin).unwrap();
            assert!(crate::analysis::sup_norm_diff(&a, &e) < 1e-12);
        }
        let states = exact_evolve(&cfg, &grid, &opts).unwrap();
        let g = approx_gamma_trace(&cfg, Spin::Up, &shells, &grid, &opts, Order::First).unwrap();
        for (st, gamma) in states.iter().zip(&g) {
            let e = st.occupancy_matrix(Spin::Up);
            assert!(max_abs_diff(e.as_ref(), gamma.as_ref()) < 1e-12);
        }
    }

    #[test]
    fn higher_orders_keep_trace_and_hermiticity() {
        let cfg = FullConfiguration::neel(ModelSpec::stark(12, 1.0, 2.0, 4.0), Spin::Up).unwrap();
        let shells = ShellSpec::from_k(3, 0, 2).unwrap();
        let grid = TimeGrid::new(4.0, 3).unwrap();
        let opts = EvolveOptions::default().with_dt(0.01);
        for order in [Order::First, Order::Second, Order::Third] {
            for g in approx_gamma_trace(&cfg, Spin::Up, &shells, &grid, &opts, order).unwrap() {
                assert!((trace(g.as_ref()).re - 3.0).abs() < 1e-10);
                assert!(hermiticity_defect(g.as_ref()) < 1e-12);
            }
        }
    }
}
