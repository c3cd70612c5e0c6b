//! Thin dense helpers over `faer` shared by the propagation and
//! reconstruction code. Everything runs sequentially so results do not depend
//! on the number of worker threads.

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatRef, Par, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `dst = lhs * rhs`.
pub fn mul_into<L, R>(dst: &mut Mat<C64>, lhs: MatRef<'_, L>, rhs: MatRef<'_, R>)
where
    L: Conjugate<Canonical = C64>,
    R: Conjugate<Canonical = C64>,
{
    matmul(dst.as_mut(), Accum::Replace, lhs, rhs, ONE, Par::Seq);
}

pub fn mul<L, R>(lhs: MatRef<'_, L>, rhs: MatRef<'_, R>) -> Mat<C64>
where
    L: Conjugate<Canonical = C64>,
    R: Conjugate<Canonical = C64>,
{
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    mul_into(&mut out, lhs, rhs);
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: MatRef<'_, C64>, t: f64) -> Result<Mat<C64>> {
    let n = h.nrows();
    let (values, vectors) = hermitian_eigen(h)?;
    let scaled = Mat::from_fn(n, n, |i, k| vectors[(i, k)] * C64::from_polar(1.0, -t * values[k]));
    Ok(mul(scaled.as_ref(), vectors.adjoint()))
}

pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))
}

pub fn real_to_complex(a: MatRef<'_, f64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn frobenius_norm(a: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn trace(a: MatRef<'_, C64>) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Largest entry of `|U^dagger U - 1|`.
pub fn unitarity_defect(u: MatRef<'_, C64>) -> f64 {
    let prod = mul(u.adjoint(), u);
    let id = Mat::<C64>::identity(u.ncols(), u.ncols());
    max_abs_diff(prod.as_ref(), id.as_ref())
}

/// Largest entry of `|A - A^dagger|`.
pub fn hermiticity_defect(a: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Determinant of the `n x n` column-major matrix stored in `buf`, which is
/// overwritten by its LU factors.
pub fn det_in_place(buf: &mut [C64], n: usize) -> C64 {
    debug_assert_eq!(buf.len(), n * n);
    let mut det = ONE;
    for col in 0..n {
        let mut pivot = col;
        let mut best = buf[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = buf[col * n + row].norm_sqr();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return ZERO;
        }
        if pivot != col {
            for c in col..n {
                buf.swap(c * n + col, c * n + pivot);
            }
            det = -det;
        }
        let d = buf[col * n + col];
        det *= d;
        let inv = ONE / d;
        for row in col + 1..n {
            let factor = buf[col * n + row] * inv;
            if factor == ZERO {
                continue;
            }
            for c in col + 1..n {
                let upd = factor * buf[c * n + col];
                buf[c * n + row] -= upd;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_matches_cofactor_expansion() {
        // [[1, 2, 0], [3, 1, i], [0, 2, 4]] column-major
        let m = [
            C64::new(1.0, 0.0),
            C64::new(3.0, 0.0),
            ZERO,
            C64::new(2.0, 0.0),
            ONE,
            C64::new(2.0, 0.0),
            ZERO,
            C64::new(0.0, 1.0),
            C64::new(4.0, 0.0),
        ];
        // 1*(1*4 - i*2) - 2*(3*4 - i*0) + 0 = 4 - 2i - 24
        let expected = C64::new(-20.0, -2.0);
        let mut buf = m;
        let det = det_in_place(&mut buf, 3);
        assert!((det - expected).norm() < 1e-12, "{det}");
    }

    #[test]
    fn singular_determinant_is_zero() {
        let mut buf = [ONE, ONE, ONE, ONE];
        assert_eq!(det_in_place(&mut buf, 2), ZERO);
        let mut empty: [C64; 0] = [];
        assert_eq!(det_in_place(&mut empty, 0), ONE);
    }

    #[test]
    fn exponential_of_pauli_x() {
        let h = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let t = 0.7;
        let u = expm_hermitian(h.as_ref(), t).unwrap();
        assert!((u[(0, 0)] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - C64::new(0.0, -t.sin())).norm() < 1e-14);
        assert!(unitarity_defect(u.as_ref()) < 1e-14);
    }
}
