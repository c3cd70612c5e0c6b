use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use super::basis::{HopTable, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, ONE, ZERO};
use crate::model::{Spin, Sublattice};

/// Basis pair of a few-body problem on a sublattice, with lazily built
/// lookup tables for observables.
#[derive(Debug)]
pub struct FewBodySpace {
    pub sublattice: Sublattice,
    pub up: SectorBasis,
    pub down: SectorBasis,
    hops_up: OnceLock<HopTable>,
    hops_down: OnceLock<HopTable>,
}

impl FewBodySpace {
    pub fn new(sublattice: Sublattice, n_up: usize, n_down: usize) -> Result<Self> {
        let sites = sublattice.len();
        Ok(FewBodySpace {
            up: SectorBasis::new(sites, n_up)?,
            down: SectorBasis::new(sites, n_down)?,
            sublattice,
            hops_up: OnceLock::new(),
            hops_down: OnceLock::new(),
        })
    }

    pub fn sites(&self) -> usize {
        self.sublattice.len()
    }

    pub fn basis(&self, spin: Spin) -> &SectorBasis {
        match spin {
            Spin::Up => &self.up,
            Spin::Down => &self.down,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.up.dim(), self.down.dim())
    }

    fn hops(&self, spin: Spin) -> &HopTable {
        match spin {
            Spin::Up => self.hops_up.get_or_init(|| HopTable::new(&self.up)),
            Spin::Down => self.hops_down.get_or_init(|| HopTable::new(&self.down)),
        }
    }

    /// Amplitude matrix of the product basis state with the given local
    /// occupations (0-based positions within the sublattice).
    pub fn basis_state(&self, up: &[usize], down: &[usize]) -> Result<(usize, usize)> {
        let a = self
            .up
            .index_of(super::basis::mask_from_positions(up))
            .ok_or_else(|| Error::contract(format!("up occupation {up:?} is not in the sector")))?;
        let b = self
            .down
            .index_of(super::basis::mask_from_positions(down))
            .ok_or_else(|| Error::contract(format!("down occupation {down:?} is not in the sector")))?;
        Ok((a, b))
    }

    fn check_shape(&self, m: MatRef<'_, C64>) {
        assert_eq!((m.nrows(), m.ncols()), self.dims(), "amplitude matrix shape mismatch");
    }

    /// `Gamma_ij = <c_i^dag c_j>` for one spin, over local sites.
    pub fn occupancy_matrix(&self, m: MatRef<'_, C64>, spin: Spin) -> Mat<C64> {
        self.check_shape(m);
        let n = self.sites();
        let mut g = Mat::<C64>::zeros(n, n);
        match spin {
            Spin::Up => {
                for e in &self.hops(Spin::Up).entries {
                    let (src, dst) = (e.source as usize, e.target as usize);
                    let mut acc = ZERO;
                    for b in 0..m.ncols() {
                        acc += m[(dst, b)].conj() * m[(src, b)];
                    }
                    g[(e.i as usize, e.j as usize)] += acc * e.sign;
                }
            }
            Spin::Down => {
                for e in &self.hops(Spin::Down).entries {
                    let (src, dst) = (e.source as usize, e.target as usize);
                    let cs = m.col(src);
                    let cd = m.col(dst);
                    let mut acc = ZERO;
                    for a in 0..m.nrows() {
                        acc += cd[a].conj() * cs[a];
                    }
                    g[(e.i as usize, e.j as usize)] += acc * e.sign;
                }
            }
        }
        g
    }

    /// `<n_i>` for one spin; the diagonal of [`Self::occupancy_matrix`].
    pub fn densities(&self, m: MatRef<'_, C64>, spin: Spin) -> Vec<f64> {
        self.check_shape(m);
        let (basis, weights) = match spin {
            Spin::Up => (&self.up, row_weights(m)),
            Spin::Down => (&self.down, col_weights(m)),
        };
        let mut n = vec![0.0; self.sites()];
        for (k, w) in weights.into_iter().enumerate() {
            for p in super::basis::bits(basis.state(k)) {
                n[p] += w;
            }
        }
        n
    }

    /// Connected density-density correlator of the total (both spin) site
    /// occupations, as a `sites x sites` matrix.
    pub fn density_correlations(&self, m: MatRef<'_, C64>) -> Mat<f64> {
        self.check_shape(m);
        let l = self.sites();
        let (du, dd) = self.dims();
        let p = Mat::<f64>::from_fn(du, dd, |a, b| m[(a, b)].norm_sqr());
        let occ = |basis: &SectorBasis| {
            Mat::<f64>::from_fn(basis.dim(), l, |k, i| ((basis.state(k) >> i) & 1) as f64)
        };
        let (oa, ob) = (occ(&self.up), occ(&self.down));
        let rows: Vec<f64> = (0..du).map(|a| (0..dd).map(|b| p[(a, b)]).sum()).collect();
        let cols: Vec<f64> = (0..dd).map(|b| (0..du).map(|a| p[(a, b)]).sum()).collect();
        // sum_ab P_ab a_i b_j
        let pb = &p * &ob;
        let cross = oa.transpose() * &pb;
        let mut nn = Mat::<f64>::zeros(l, l);
        let mut n = vec![0.0; l];
        for i in 0..l {
            for j in 0..l {
                let mut same = 0.0;
                for (a, &w) in rows.iter().enumerate() {
                    same += w * oa[(a, i)] * oa[(a, j)];
                }
                for (b, &w) in cols.iter().enumerate() {
                    same += w * ob[(b, i)] * ob[(b, j)];
                }
                nn[(i, j)] = same + cross[(i, j)] + cross[(j, i)];
            }
            n[i] = (0..du).map(|a| rows[a] * oa[(a, i)]).sum::<f64>()
                + (0..dd).map(|b| cols[b] * ob[(b, i)]).sum::<f64>();
        }
        Mat::from_fn(l, l, |i, j| nn[(i, j)] - n[i] * n[j])
    }

    pub fn density_correlator(&self, m: MatRef<'_, C64>, i: usize, j: usize) -> f64 {
        self.density_correlations(m)[(i, j)]
    }

    /// `<H>` for the given single-particle matrices and interaction.
    pub fn energy(&self, m: MatRef<'_, C64>, h_up: MatRef<'_, C64>, h_down: MatRef<'_, C64>, interaction: f64) -> f64 {
        let mut e = 0.0;
        for (spin, h) in [(Spin::Up, h_up), (Spin::Down, h_down)] {
            let g = self.occupancy_matrix(m, spin);
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    e += (h[(i, j)] * g[(i, j)]).re;
                }
            }
        }
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                let overlap = (self.up.state(a) & self.down.state(b)).count_ones();
                if overlap > 0 {
                    e += interaction * overlap as f64 * m[(a, b)].norm_sqr();
                }
            }
        }
        e
    }

    /// Grouping of amplitudes needed for entanglement entropies at a cut
    /// after local site `cut` (left part = first `cut` sites).
    pub fn cut(&self, cut: usize) -> Result<EntanglementCut> {
        EntanglementCut::new(self, cut)
    }

    pub fn bipartite_ee(&self, m: MatRef<'_, C64>, cut: usize) -> Result<f64> {
        self.cut(cut)?.entropy(m)
    }
}

fn row_weights(m: MatRef<'_, C64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|a| (0..m.ncols()).map(|b| m[(a, b)].norm_sqr()).sum())
        .collect()
}

fn col_weights(m: MatRef<'_, C64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|b| (0..m.nrows()).map(|a| m[(a, b)].norm_sqr()).sum())
        .collect()
}

/// For each fixed pair of left-part particle numbers, the map from
/// amplitudes `(a, b)` to a (left configuration, right configuration)
/// matrix. The fermionic reordering sign is constant inside such a block,
/// so it does not affect singular values.
#[derive(Debug, Clone)]
pub struct EntanglementCut {
    shape: (usize, usize),
    blocks: Vec<CutBlock>,
}

#[derive(Debug, Clone)]
struct CutBlock {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, u32, u32)>,
}

impl EntanglementCut {
    fn new(space: &FewBodySpace, cut: usize) -> Result<Self> {
        if cut > space.sites() {
            return Err(Error::contract(format!(
                "cut after site {cut} outside a sublattice of {} sites",
                space.sites()
            )));
        }
        let left = if cut == 64 { u64::MAX } else { (1u64 << cut) - 1 };
        type Key = (u32, u32);
        let mut block_of: HashMap<Key, usize> = HashMap::new();
        let mut blocks: Vec<CutBlock> = Vec::new();
        let mut row_index: Vec<HashMap<(u64, u64), u32>> = Vec::new();
        let mut col_index: Vec<HashMap<(u64, u64), u32>> = Vec::new();
        for (a, &ma) in space.up.states().iter().enumerate() {
            for (b, &mb) in space.down.states().iter().enumerate() {
                let key = ((ma & left).count_ones(), (mb & left).count_ones());
                let k = *block_of.entry(key).or_insert_with(|| {
                    blocks.push(CutBlock {
                        rows: 0,
                        cols: 0,
                        entries: Vec::new(),
                    });
                    row_index.push(HashMap::new());
                    col_index.push(HashMap::new());
                    blocks.len() - 1
                });
                let blk = &mut blocks[k];
                let r = *row_index[k].entry((ma & left, mb & left)).or_insert_with(|| {
                    blk.rows += 1;
                    blk.rows as u32 - 1
                });
                let c = *col_index[k].entry((ma & !left, mb & !left)).or_insert_with(|| {
                    blk.cols += 1;
                    blk.cols as u32 - 1
                });
                blk.entries.push((a as u32, b as u32, r, c));
            }
        }
        Ok(EntanglementCut {
            shape: space.dims(),
            blocks,
        })
    }

    /// Von Neumann entropy (nats) of the left part.
    pub fn entropy(&self, m: MatRef<'_, C64>) -> Result<f64> {
        assert_eq!((m.nrows(), m.ncols()), self.shape, "amplitude matrix shape mismatch");
        let mut s = 0.0;
        for blk in &self.blocks {
            let mut x = Mat::<C64>::zeros(blk.rows, blk.cols);
            let mut weight = 0.0;
            for &(a, b, r, c) in &blk.entries {
                let v = m[(a as usize, b as usize)];
                x[(r as usize, c as usize)] = v;
                weight += v.norm_sqr();
            }
            if weight == 0.0 {
                continue;
            }
            let sv = if blk.rows == 1 || blk.cols == 1 {
                vec![weight.sqrt()]
            } else {
                singular_values(x.as_ref())?
            };
            for v in sv {
                let p = v * v;
                if p > 1e-300 {
                    s -= p * p.ln();
                }
            }
        }
        Ok(s)
    }
}

/// An amplitude matrix together with the space it lives in.
#[derive(Debug, Clone)]
pub struct FewBodyState {
    pub space: Arc<FewBodySpace>,
    pub amplitudes: Mat<C64>,
}

impl FewBodyState {
    /// Product basis state with local 0-based occupations.
    pub fn basis_state(space: Arc<FewBodySpace>, up: &[usize], down: &[usize]) -> Result<Self> {
        let (a, b) = space.basis_state(up, down)?;
        let (du, dd) = space.dims();
        let mut amplitudes = Mat::<C64>::zeros(du, dd);
        amplitudes[(a, b)] = ONE;
        Ok(FewBodyState { space, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::frobenius_norm(self.amplitudes.as_ref())
    }

    pub fn occupancy_matrix(&self, spin: Spin) -> Mat<C64> {
        self.space.occupancy_matrix(self.amplitudes.as_ref(), spin)
    }

    pub fn bipartite_ee(&self, cut: usize) -> Result<f64> {
        self.space.bipartite_ee(self.amplitudes.as_ref(), cut)
    }

    pub fn density_correlator(&self, i: usize, j: usize) -> f64 {
        self.space.density_correlator(self.amplitudes.as_ref(), i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fewbody::propagate::{PropagatorBundle, Splitting, StateBatch};
    use crate::linalg::{expm_hermitian, hermiticity_defect, max_abs_diff, real_to_complex, trace};
    use crate::model::{Boundary, ModelSpec};
    use crate::fewbody::hamiltonian::single_particle_hamiltonian;

    fn space(sites: usize, nu: usize, nd: usize) -> Arc<FewBodySpace> {
        Arc::new(FewBodySpace::new(Sublattice::full(sites, Boundary::Open), nu, nd).unwrap())
    }

    #[test]
    fn single_atom_occupancy() {
        let s = space(5, 0, 1);
        let st = FewBodyState::basis_state(s, &[], &[2]).unwrap();
        let g = st.occupancy_matrix(Spin::Down);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if (i, j) == (2, 2) { 1.0 } else { 0.0 };
                assert_eq!(g[(i, j)], C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn two_level_entanglement() {
        let s = space(2, 1, 0);
        let mut st = FewBodyState::basis_state(s, &[0], &[]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        st.amplitudes[(0, 0)] = C64::new(h, 0.0);
        st.amplitudes[(1, 0)] = C64::new(h, 0.0);
        assert!((st.bipartite_ee(1).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert_eq!(st.bipartite_ee(0).unwrap(), 0.0);
        let product = FewBodyState::basis_state(space(6, 2, 1), &[1, 3], &[4]).unwrap();
        assert_eq!(product.bipartite_ee(3).unwrap(), 0.0);
    }

    #[test]
    fn correlator_of_single_atom() {
        let s = space(3, 1, 0);
        let mut st = FewBodyState::basis_state(s, &[0], &[]).unwrap();
        st.amplitudes[(0, 0)] = C64::new(0.6, 0.0);
        st.amplitudes[(1, 0)] = C64::new(0.0, 0.8);
        let n0 = 0.36;
        assert!((st.density_correlator(0, 0) - (n0 - n0 * n0)).abs() < 1e-15);
        assert!((st.density_correlator(0, 1) + 0.36 * 0.64).abs() < 1e-15);
        let far = FewBodyState::basis_state(space(6, 1, 1), &[0], &[5]).unwrap();
        assert_eq!(far.density_correlator(0, 5), 0.0);
    }

    #[test]
    fn evolved_occupancy_is_physical() {
        let spec = ModelSpec::aubry_andre(6, 1.0, 4.0, 2.0, 0.2);
        let sp = space(6, 2, 2);
        let bundle = PropagatorBundle::new(&spec, &sp.sublattice, &sp.up, &sp.down, 0.01, Splitting::Strang).unwrap();
        let (a, b) = sp.basis_state(&[1, 3], &[0, 4]).unwrap();
        let mut batch = StateBatch::from_basis_states(sp.up.dim(), sp.down.dim(), &[(a, b)]);
        batch.advance(&bundle, 300);
        for spin in [Spin::Up, Spin::Down] {
            let g = sp.occupancy_matrix(batch.block(0), spin);
            assert!(hermiticity_defect(g.as_ref()) < 1e-13);
            assert!((trace(g.as_ref()).re - 2.0).abs() < 1e-12);
            let (vals, _) = crate::linalg::hermitian_eigen(g.as_ref()).unwrap();
            assert!(vals.iter().all(|&v| v > -1e-12 && v < 1.0 + 1e-12));
            let dens = sp.densities(batch.block(0), spin);
            for i in 0..6 {
                assert!((dens[i] - g[(i, i)].re).abs() < 1e-13);
            }
        }
        let c = sp.density_correlations(batch.block(0));
        for i in 0..6 {
            for j in 0..6 {
                assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-13 && c[(i, j)].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn noninteracting_occupancy_is_sum_of_projectors() {
        let spec = ModelSpec::stark(7, 1.0, 0.0, 0.8);
        let sp = space(7, 2, 0);
        let h = real_to_complex(single_particle_hamiltonian(&spec, &sp.sublattice, Spin::Up).unwrap().as_ref());
        let t = 2.3;
        let bundle = PropagatorBundle::new(&spec, &sp.sublattice, &sp.up, &sp.down, t / 50.0, Splitting::FirstOrder).unwrap();
        let (a, b) = sp.basis_state(&[1, 4], &[]).unwrap();
        let mut batch = StateBatch::from_basis_states(sp.up.dim(), 1, &[(a, b)]);
        batch.advance(&bundle, 50);
        let g = sp.occupancy_matrix(batch.block(0), Spin::Up);
        let u = expm_hermitian(h.as_ref(), t).unwrap();
        // Gamma_ij = sum_r conj(psi_r(i)) psi_r(j)
        let expect = Mat::from_fn(7, 7, |i, j| {
            [1, 4].iter().map(|&r| u[(i, r)].conj() * u[(j, r)]).sum::<C64>()
        });
        assert!(max_abs_diff(g.as_ref(), expect.as_ref()) < 1e-12);
    }

    #[test]
    fn energy_of_basis_state() {
        let spec = ModelSpec::stark(4, 1.0, 3.0, 1.0);
        let sp = space(4, 1, 1);
        let st = FewBodyState::basis_state(sp.clone(), &[2], &[2]).unwrap();
        let h = real_to_complex(single_particle_hamiltonian(&spec, &sp.sublattice, Spin::Up).unwrap().as_ref());
        let e = sp.energy(st.amplitudes.as_ref(), h.as_ref(), h.as_ref(), 3.0);
        assert!((e - (3.0 + 3.0 + 3.0)).abs() < 1e-14);
    }
}
