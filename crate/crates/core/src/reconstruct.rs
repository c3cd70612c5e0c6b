//! A canonical many-body state built from per-atom occupancy matrices.
//!
//! For each spin the per-atom matrices are antisymmetrised into a density
//! matrix on the `N_s`-particle sector. A mixed parent on the product space
//! is then peeled off in layers: diagonalise both remainders, pair their
//! eigenvalues in decreasing order and move `min(lambda_up, lambda_down)` of
//! each pair into a pure layer `sum_i sqrt(m_i) |a_i> |b_i>`.

use std::cmp::Ordering;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::approx::PerAtomGamma;
use crate::error::{Error, Result};
use crate::fewbody::SectorBasis;
use crate::linalg::{det_in_place, hermitian_eigen, hermiticity_defect, mul, trace};

/// Largest sector dimension accepted for dense density matrices.
pub const DENSITY_DIMENSION_LIMIT: usize = 4096;

/// Eigenvalues below this fraction of the initial trace count as zero.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// Negative eigenvalues of a remainder beyond this fraction of the initial
/// trace abort the construction.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Many-particle density matrix of one spin species on the lexicographic
/// `N`-particle basis of `sites` modes.
#[derive(Debug, Clone)]
pub struct SpinSectorDensity {
    pub sites: usize,
    pub particles: usize,
    pub matrix: Mat<C64>,
}

impl SpinSectorDensity {
    pub fn new(sites: usize, particles: usize, matrix: Mat<C64>) -> Result<Self> {
        let d = SectorBasis::new(sites, particles)?.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::contract(format!(
                "density is {}x{}, sector dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SpinSectorDensity {
            sites,
            particles,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Checks Hermiticity, positivity and unit trace.
    pub fn validate(&self) -> Result<()> {
        let herm = hermiticity_defect(self.matrix.as_ref());
        if herm > 1e-10 {
            return Err(Error::Numerical(format!("density is not Hermitian (defect {herm:.3e})")));
        }
        let tr = trace(self.matrix.as_ref()).re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("density has trace {tr}")));
        }
        let (values, _) = hermitian_eigen(self.matrix.as_ref())?;
        if values.first().is_some_and(|&v| v < -1e-12) {
            return Err(Error::Numerical(format!("density has eigenvalue {}", values[0])));
        }
        Ok(())
    }

    /// Spectrum in decreasing order.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let (mut v, _) = hermitian_eigen(self.matrix.as_ref())?;
        v.reverse();
        Ok(v)
    }
}

/// All permutations of `0..n` with their signs.
fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), sign));
            return;
        }
        // choosing the k-th unused value moves it past k earlier ones
        let mut rank = 0;
        for v in 0..n {
            if used[v] {
                continue;
            }
            used[v] = true;
            prefix.push(v);
            rec(prefix, used, if rank % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            used[v] = false;
            rank += 1;
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], 1.0, &mut out);
    out
}

/// Antisymmetrised product of the per-atom occupancy matrices of one spin,
/// normalised to unit trace. Meaningful when each atom was evolved without
/// same-spin neighbours.
pub fn single_spin_density(per_atom: &[PerAtomGamma]) -> Result<SpinSectorDensity> {
    let n = per_atom.len();
    let lattice = per_atom
        .first()
        .map(|g| g.lattice)
        .ok_or_else(|| Error::contract("no per-atom matrices"))?;
    if per_atom.iter().any(|g| g.lattice != lattice) {
        return Err(Error::contract("per-atom matrices live on different lattices"));
    }
    let dim = crate::fewbody::binomial(lattice as u64, n as u64);
    if dim > DENSITY_DIMENSION_LIMIT as u128 {
        return Err(Error::Resource {
            dimension: dim,
            bytes: dim * dim * 16,
            budget: (DENSITY_DIMENSION_LIMIT * DENSITY_DIMENSION_LIMIT * 16) as u128,
        });
    }
    let basis = SectorBasis::new(lattice, n)?;
    let gammas: Vec<Mat<C64>> = per_atom.iter().map(|g| g.embed()).collect();
    let perms = signed_permutations(n);
    let occ: Vec<Vec<usize>> = (0..basis.dim()).map(|k| basis.occupied(k)).collect();
    let d = basis.dim();
    let mut rho = Mat::<C64>::zeros(d, d);
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    // rho_ab = sum_mu' sgn(mu') det_{r,c}( Gamma^r[i_{mu'(r)}, j_c] )
    for a in 0..d {
        for b in a..d {
            let mut acc = C64::new(0.0, 0.0);
            for (perm, sign) in &perms {
                for r in 0..n {
                    for c in 0..n {
                        buf[c * n + r] = gammas[r][(occ[a][perm[r]], occ[b][c])];
                    }
                }
                acc += *sign * det_in_place(&mut buf, n);
            }
            rho[(a, b)] = acc;
            rho[(b, a)] = acc.conj();
        }
    }
    let tr = trace(rho.as_ref()).re;
    if !(tr > 0.0) {
        return Err(Error::Numerical(format!("antisymmetrised product has trace {tr}")));
    }
    let eta = 1.0 / tr;
    SpinSectorDensity::new(lattice, n, Mat::from_fn(d, d, |i, j| rho[(i, j)] * eta))
}

/// One pure layer `psi = sum_i sqrt(m_i) |a_i> (x) |b_i>`, stored as a
/// `d_up x d_down` amplitude matrix.
#[derive(Debug, Clone)]
pub struct ParentLayer {
    pub amplitudes: Mat<C64>,
    pub weight: f64,
}

/// Ranks and traces of the two remainders after each layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderStep {
    pub rank_up: usize,
    pub rank_down: usize,
    pub trace_up: f64,
    pub trace_down: f64,
}

#[derive(Debug, Clone)]
pub struct ParentState {
    pub d_up: usize,
    pub d_down: usize,
    pub layers: Vec<ParentLayer>,
    pub history: Vec<RemainderStep>,
}

#[derive(Serialize, Deserialize)]
struct ParentJson {
    d_up: usize,
    d_down: usize,
    weights: Vec<f64>,
    /// Row-major `[re, im]` pairs of each layer's amplitude matrix.
    vectors: Vec<Vec<[f64; 2]>>,
    history: Vec<RemainderStep>,
}

impl ParentState {
    pub fn weights(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.weight).collect()
    }

    pub fn rank(&self) -> usize {
        self.layers.len()
    }

    /// `Tr_down rho*`.
    pub fn reduced_up(&self) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.d_up, self.d_up);
        for l in &self.layers {
            out += mul(l.amplitudes.as_ref(), l.amplitudes.adjoint());
        }
        out
    }

    /// `Tr_up rho*`.
    pub fn reduced_down(&self) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.d_down, self.d_down);
        for l in &self.layers {
            out += mul(l.amplitudes.transpose(), l.amplitudes.conjugate());
        }
        out
    }

    /// Dense `rho*` on the product space, index `a * d_down + b`.
    pub fn density_matrix(&self) -> Mat<C64> {
        let d = self.d_up * self.d_down;
        let mut out = Mat::<C64>::zeros(d, d);
        for l in &self.layers {
            let v = |k: usize| l.amplitudes[(k / self.d_down, k % self.d_down)];
            for i in 0..d {
                let vi = v(i);
                for j in 0..d {
                    out[(i, j)] += vi * v(j).conj();
                }
            }
        }
        out
    }

    /// `<psi_i|psi_j>` for all layer pairs.
    pub fn overlaps(&self) -> Mat<C64> {
        let r = self.layers.len();
        Mat::from_fn(r, r, |i, j| {
            let (a, b) = (&self.layers[i].amplitudes, &self.layers[j].amplitudes);
            let mut s = C64::new(0.0, 0.0);
            for c in 0..self.d_down {
                for row in 0..self.d_up {
                    s += a[(row, c)].conj() * b[(row, c)];
                }
            }
            s
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ParentJson {
            d_up: self.d_up,
            d_down: self.d_down,
            weights: self.weights(),
            vectors: self
                .layers
                .iter()
                .map(|l| {
                    let m = &l.amplitudes;
                    (0..self.d_up)
                        .flat_map(|i| (0..self.d_down).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
                        .collect()
                })
                .collect(),
            history: self.history.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ParentJson = serde_json::from_str(text)?;
        if doc.weights.len() != doc.vectors.len() {
            return Err(Error::contract("weights and vectors differ in number"));
        }
        let layers = doc
            .vectors
            .iter()
            .zip(&doc.weights)
            .map(|(v, &w)| {
                if v.len() != doc.d_up * doc.d_down {
                    return Err(Error::contract("vector length does not match the dimensions"));
                }
                Ok(ParentLayer {
                    amplitudes: Mat::from_fn(doc.d_up, doc.d_down, |i, j| {
                        let [re, im] = v[i * doc.d_down + j];
                        C64::new(re, im)
                    }),
                    weight: w,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ParentState {
            d_up: doc.d_up,
            d_down: doc.d_down,
            layers,
            history: doc.history,
        })
    }
}

/// Von Neumann entropy (nats) of the parent, from its layer weights.
pub fn parent_entropy(parent: &ParentState) -> f64 {
    parent
        .layers
        .iter()
        .map(|l| l.weight)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum()
}

/// Eigenpairs in decreasing order. Eigenvalues closer than `tie` are
/// ordered by their phase-fixed eigenvectors, compared lexicographically.
fn sorted_eigen(a: MatRef<'_, C64>, tie: f64) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let (values, vectors) = hermitian_eigen(a)?;
    let n = values.len();
    let columns: Vec<Vec<C64>> = (0..n)
        .map(|k| {
            let col: Vec<C64> = (0..n).map(|i| vectors[(i, k)]).collect();
            // make the first sizeable component real and positive
            let anchor = col.iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(C64::new(1.0, 0.0));
            let phase = anchor.conj() / anchor.norm();
            col.into_iter().map(|z| z * phase).collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let lex = |x: &[C64], y: &[C64]| -> Ordering {
        for (p, q) in x.iter().zip(y) {
            for (u, v) in [(p.re, q.re), (p.im, q.im)] {
                if (u - v).abs() > 1e-10 {
                    return v.partial_cmp(&u).unwrap_or(Ordering::Equal);
                }
            }
        }
        Ordering::Equal
    };
    order.sort_by(|&i, &j| {
        if (values[i] - values[j]).abs() <= tie {
            lex(&columns[i], &columns[j])
        } else {
            values[j].partial_cmp(&values[i]).unwrap_or(Ordering::Equal)
        }
    });
    Ok((
        order.iter().map(|&k| values[k]).collect(),
        order.into_iter().map(|k| columns[k].clone()).collect(),
    ))
}

fn projector_sum(d: usize, pairs: &[(f64, &Vec<C64>)]) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(d, d);
    for (w, v) in pairs {
        for i in 0..d {
            let vi = v[i] * *w;
            for j in 0..d {
                out[(i, j)] += vi * v[j].conj();
            }
        }
    }
    out
}

/// Layered mixed parent whose partial traces reproduce both inputs.
pub fn canonical_parent(up: &SpinSectorDensity, down: &SpinSectorDensity) -> Result<ParentState> {
    up.validate()?;
    down.validate()?;
    let (du, dd) = (up.dim(), down.dim());
    let scale = trace(up.matrix.as_ref()).re;
    let zero = RANK_THRESHOLD * scale;
    let mut rem_up = up.matrix.clone();
    let mut rem_down = down.matrix.clone();
    let mut layers = Vec::new();
    let mut history = Vec::new();
    for _ in 0..=du + dd {
        let (lu, vu) = sorted_eigen(rem_up.as_ref(), zero)?;
        let (ld, vd) = sorted_eigen(rem_down.as_ref(), zero)?;
        for (name, l) in [("up", &lu), ("down", &ld)] {
            if let Some(&min) = l.last() {
                if min < -PSD_TOLERANCE * scale {
                    return Err(Error::Numerical(format!("{name} remainder has eigenvalue {min:.3e}")));
                }
            }
        }
        let rank = |l: &[f64]| l.iter().filter(|&&v| v > zero).count();
        if rank(&lu) == 0 || rank(&ld) == 0 {
            break;
        }
        let mut amplitudes = Mat::<C64>::zeros(du, dd);
        let mut taken_up = Vec::new();
        let mut taken_down = Vec::new();
        let mut weight = 0.0;
        for i in 0..du.min(dd) {
            let m = lu[i].min(ld[i]);
            if m <= zero {
                continue;
            }
            let s = m.sqrt();
            for a in 0..du {
                let x = vu[i][a] * s;
                for b in 0..dd {
                    amplitudes[(a, b)] += x * vd[i][b];
                }
            }
            taken_up.push((m, &vu[i]));
            taken_down.push((m, &vd[i]));
            weight += m;
        }
        rem_up -= projector_sum(du, &taken_up);
        rem_down -= projector_sum(dd, &taken_down);
        layers.push(ParentLayer { amplitudes, weight });
        let (tu, td) = (trace(rem_up.as_ref()).re, trace(rem_down.as_ref()).re);
        let (eu, _) = hermitian_eigen(rem_up.as_ref())?;
        let (ed, _) = hermitian_eigen(rem_down.as_ref())?;
        history.push(RemainderStep {
            rank_up: rank(&eu),
            rank_down: rank(&ed),
            trace_up: tu,
            trace_down: td,
        });
        if tu.abs() < zero && td.abs() < zero {
            return Ok(ParentState {
                d_up: du,
                d_down: dd,
                layers,
                history,
            });
        }
    }
    let last = history.last().copied();
    match last {
        Some(step) if step.trace_up.abs().max(step.trace_down.abs()) < 1e-10 * scale => Ok(ParentState {
            d_up: du,
            d_down: dd,
            layers,
            history,
        }),
        _ => Err(Error::Numerical(format!(
            "remainder did not vanish (last step {last:?})"
        ))),
    }
}
