use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use super::basis::{bits, hop, SectorBasis};
use crate::error::{Error, Result};
use crate::linalg::{det_in_place, ZERO};
use crate::model::{ModelSpec, Spin, Sublattice};

/// Hopping plus on-site matrix for one spin on a piece of the lattice.
/// Consecutive entries of the sublattice are bonded; a closed sublattice
/// also bonds its last and first site.
pub fn single_particle_hamiltonian(spec: &ModelSpec, sub: &Sublattice, spin: Spin) -> Result<Mat<f64>> {
    let n = sub.len();
    let potential = spec.build_potential(spin, sub.sites())?;
    let mut h = Mat::<f64>::zeros(n, n);
    for (i, v) in potential.into_iter().enumerate() {
        h[(i, i)] = v;
    }
    for i in 0..n.saturating_sub(1) {
        h[(i, i + 1)] = -spec.hopping;
        h[(i + 1, i)] = -spec.hopping;
    }
    if sub.is_closed() && n > 2 {
        h[(0, n - 1)] = -spec.hopping;
        h[(n - 1, 0)] = -spec.hopping;
    }
    Ok(h)
}

/// Many-fermion propagator on a sector: element `(a, b)` is the determinant
/// of the single-particle matrix restricted to rows `a` and columns `b`.
pub fn sector_unitary_from_single(single: MatRef<'_, C64>, basis: &SectorBasis) -> Result<Mat<C64>> {
    if single.nrows() != basis.sites() || single.ncols() != basis.sites() {
        return Err(Error::contract(format!(
            "single-particle matrix is {}x{}, sector has {} modes",
            single.nrows(),
            single.ncols(),
            basis.sites()
        )));
    }
    let n = basis.particles();
    let d = basis.dim();
    let occupied: Vec<Vec<usize>> = (0..d).map(|k| basis.occupied(k)).collect();
    let mut out = Mat::<C64>::zeros(d, d);
    let mut buf = vec![ZERO; n * n];
    for (b, cols) in occupied.iter().enumerate() {
        for (a, rows) in occupied.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                for (r, &row) in rows.iter().enumerate() {
                    buf[c * n + r] = single[(row, col)];
                }
            }
            out[(a, b)] = det_in_place(&mut buf, n);
        }
    }
    Ok(out)
}

/// `U * |a & b|` for every pair of up and down basis states.
pub fn interaction_table(up: &SectorBasis, down: &SectorBasis, interaction: f64) -> Mat<f64> {
    Mat::from_fn(up.dim(), down.dim(), |a, b| {
        interaction * (up.state(a) & down.state(b)).count_ones() as f64
    })
}

/// Second-quantised one-body operator `sum_ij h_ij c_i^dag c_j` on a sector.
pub fn sector_operator(single: MatRef<'_, C64>, basis: &SectorBasis) -> Mat<C64> {
    let d = basis.dim();
    let mut out = Mat::<C64>::zeros(d, d);
    for (src, &mask) in basis.states().iter().enumerate() {
        for j in bits(mask) {
            for i in 0..basis.sites() {
                let hij = single[(i, j)];
                if hij == ZERO {
                    continue;
                }
                if let Some((m, sign)) = hop(mask, i, j) {
                    let dst = basis.index_of(m).expect("hop stays in sector");
                    out[(dst, src)] += hij * sign;
                }
            }
        }
    }
    out
}

/// Full two-species Hamiltonian on the product space, with the vectorised
/// index `a * d_down + b` matching a row-major flattening of the amplitude
/// matrix.
pub fn product_hamiltonian(
    up: &SectorBasis,
    down: &SectorBasis,
    h_up: MatRef<'_, C64>,
    h_down: MatRef<'_, C64>,
    interaction: f64,
) -> Mat<C64> {
    let (du, dd) = (up.dim(), down.dim());
    let hu = sector_operator(h_up, up);
    let hd = sector_operator(h_down, down);
    let v = interaction_table(up, down, interaction);
    let mut out = Mat::<C64>::zeros(du * dd, du * dd);
    for a in 0..du {
        for a2 in 0..du {
            let x = hu[(a, a2)];
            if x != ZERO {
                for b in 0..dd {
                    out[(a * dd + b, a2 * dd + b)] += x;
                }
            }
        }
        for b in 0..dd {
            for b2 in 0..dd {
                out[(a * dd + b, a * dd + b2)] += hd[(b, b2)];
            }
            out[(a * dd + b, a * dd + b)] += v[(a, b)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, max_abs_diff, real_to_complex, unitarity_defect};
    use crate::model::{Boundary, ModelSpec};

    #[test]
    fn two_site_hamiltonian() {
        let spec = ModelSpec::stark(2, 1.0, 0.0, 0.0);
        let h = single_particle_hamiltonian(&spec, &Sublattice::full(2, Boundary::Open), Spin::Up).unwrap();
        assert_eq!((h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]), (0.0, -1.0, -1.0, 0.0));
        let (values, _) = crate::linalg::hermitian_eigen(real_to_complex(h.as_ref()).as_ref()).unwrap();
        assert!((values[0] + 1.0).abs() < 1e-14 && (values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_site_stark() {
        let spec = ModelSpec::stark(10, 1.0, 0.0, 2.0);
        let sub = Sublattice::window(2, 1, 10, Boundary::Open);
        let h = single_particle_hamiltonian(&spec, &sub, Spin::Down).unwrap();
        assert_eq!([h[(0, 0)], h[(1, 1)], h[(2, 2)]], [2.0, 4.0, 6.0]);
        assert_eq!([h[(0, 1)], h[(1, 2)], h[(0, 2)]], [-1.0, -1.0, 0.0]);
    }

    #[test]
    fn periodic_corner_only_on_closed_ring() {
        let spec = ModelSpec::stark(5, 1.0, 0.0, 0.0).with_boundary(Boundary::Periodic);
        let ring = single_particle_hamiltonian(&spec, &Sublattice::full(5, Boundary::Periodic), Spin::Up).unwrap();
        assert_eq!(ring[(0, 4)], -1.0);
        let window = Sublattice::window(3, 1, 5, Boundary::Periodic);
        let open = single_particle_hamiltonian(&spec, &window, Spin::Up).unwrap();
        assert_eq!(open[(0, 2)], 0.0);
    }

    #[test]
    fn sector_unitary_trivial_cases() {
        let spec = ModelSpec::stark(4, 1.0, 0.0, 0.7);
        let h = single_particle_hamiltonian(&spec, &Sublattice::full(4, Boundary::Open), Spin::Up).unwrap();
        let u = expm_hermitian(real_to_complex(h.as_ref()).as_ref(), 0.3).unwrap();
        let one = sector_unitary_from_single(u.as_ref(), &SectorBasis::new(4, 1).unwrap()).unwrap();
        assert!(max_abs_diff(one.as_ref(), u.as_ref()) < 1e-15);
        let vac = sector_unitary_from_single(u.as_ref(), &SectorBasis::new(4, 0).unwrap()).unwrap();
        assert_eq!((vac.nrows(), vac[(0, 0)]), (1, C64::new(1.0, 0.0)));
        assert!(sector_unitary_from_single(u.as_ref(), &SectorBasis::new(5, 1).unwrap()).is_err());
    }

    #[test]
    fn sector_unitary_matches_dense_exponential() {
        let spec = ModelSpec::aubry_andre(4, 1.0, 0.0, 2.5, 0.4);
        let h = single_particle_hamiltonian(&spec, &Sublattice::full(4, Boundary::Open), Spin::Up).unwrap();
        let hc = real_to_complex(h.as_ref());
        let basis = SectorBasis::new(4, 2).unwrap();
        let dt = 0.37;
        let u1 = expm_hermitian(hc.as_ref(), dt).unwrap();
        let from_dets = sector_unitary_from_single(u1.as_ref(), &basis).unwrap();
        let dense = expm_hermitian(sector_operator(hc.as_ref(), &basis).as_ref(), dt).unwrap();
        assert!(max_abs_diff(from_dets.as_ref(), dense.as_ref()) < 1e-12);
        assert!(unitarity_defect(from_dets.as_ref()) < 1e-12);
    }

    #[test]
    fn interaction_examples() {
        let up = SectorBasis::new(3, 2).unwrap();
        let down = SectorBasis::new(3, 1).unwrap();
        let v = interaction_table(&up, &down, 2.0);
        // {1,3} against {3}
        assert_eq!(v[(up.index_of(0b101).unwrap(), down.index_of(0b100).unwrap())], 2.0);
        assert_eq!(v[(up.index_of(0b011).unwrap(), down.index_of(0b100).unwrap())], 0.0);
        let full = SectorBasis::new(3, 3).unwrap();
        assert_eq!(interaction_table(&full, &full, 1.5)[(0, 0)], 4.5);
    }
}
