//! Post-processing of time traces: spectra, error metrics, convergence
//! extrapolation, steady states and closed-form references.
//!
//! Frequencies are angular and measured in units of `J / hbar`, which is the
//! same as ordinary frequency in units of `J / h`. A trace `cos(D t)` with
//! `t` in units of `hbar / J` therefore peaks at `nu = D`.

use std::f64::consts::PI;
use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cdw::TimeTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    /// `|X_k| / N` of the (windowed) mean-subtracted trace.
    pub magnitudes: Vec<f64>,
    /// Number of samples that went into the transform.
    pub samples: usize,
}

impl Spectrum {
    /// Frequency spacing `2 pi / (N dt)`.
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            f64::INFINITY
        }
    }

    /// Index of the largest magnitude, ignoring the zero-frequency bin.
    pub fn peak_index(&self) -> Option<usize> {
        (1..self.magnitudes.len()).max_by(|&a, &b| self.magnitudes[a].total_cmp(&self.magnitudes[b]))
    }

    pub fn peak_frequency(&self) -> Option<f64> {
        self.peak_index().map(|k| self.frequencies[k])
    }

    /// Bins that are strict local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let m = &self.magnitudes;
        (1..m.len().saturating_sub(1))
            .filter(|&k| m[k] > m[k - 1] && m[k] >= m[k + 1])
            .collect()
    }

    /// Highest local maximum with frequency in `[lo, hi]`, skipping bins
    /// that fall inside any of the `exclude` intervals.
    pub fn dominant_peak_in(&self, lo: f64, hi: f64, exclude: &[(f64, f64)]) -> Option<usize> {
        self.local_maxima()
            .into_iter()
            .filter(|&k| {
                let f = self.frequencies[k];
                f >= lo && f <= hi && !exclude.iter().any(|&(a, b)| f >= a && f <= b)
            })
            .max_by(|&a, &b| self.magnitudes[a].total_cmp(&self.magnitudes[b]))
    }

    /// Magnitude at the bin closest to `frequency`.
    pub fn magnitude_at(&self, frequency: f64) -> f64 {
        let k = (frequency / self.resolution()).round().max(0.0) as usize;
        self.magnitudes.get(k).copied().unwrap_or(0.0)
    }

    /// Largest magnitude within `width` of `frequency`.
    pub fn peak_height_near(&self, frequency: f64, width: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.magnitudes)
            .filter(|(f, _)| (**f - frequency).abs() <= width)
            .map(|(_, m)| *m)
            .fold(0.0, f64::max)
    }
}

/// Spacing of a uniform grid, or an error when the grid is not uniform.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::contract("need at least two samples"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::contract("times must increase"));
    }
    for (k, &t) in times.iter().enumerate() {
        if (t - times[0] - k as f64 * dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::contract(format!("grid is not uniform at sample {k}")));
        }
    }
    Ok(dt)
}

/// Discrete Fourier magnitudes of the mean-subtracted trace.
pub fn fourier_spectrum(trace: &TimeTrace, window: Window) -> Result<Spectrum> {
    spectrum_of(&trace.values, uniform_spacing(&trace.times)?, window)
}

pub fn spectrum_of(values: &[f64], dt: f64, window: Window) -> Result<Spectrum> {
    let n = values.len();
    if n < 2 {
        return Err(Error::contract("need at least two samples"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = match window {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos(),
            };
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let step = 2.0 * PI / (n as f64 * dt);
    Ok(Spectrum {
        frequencies: (0..half).map(|k| k as f64 * step).collect(),
        magnitudes: buf[..half].iter().map(|c| c.norm() / n as f64).collect(),
        samples: n,
    })
}

/// Root-mean-square deviation of `a` from a reference `b`, with the
/// uncertainty propagated from the reference's standard errors:
/// `d(rms) = sum |a - b| db / (n rms)` (zero when the traces coincide).
pub fn rms_deviation(a: &TimeTrace, b: &TimeTrace) -> Result<(f64, f64)> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-9) {
        return Err(Error::contract("traces live on different grids"));
    }
    let n = a.values.len() as f64;
    let diffs: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).collect();
    let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    if rms == 0.0 {
        return Ok((0.0, 0.0));
    }
    let err = match &b.stderr {
        Some(s) => diffs.iter().zip(s).map(|(d, e)| d * e).sum::<f64>() / (n * rms),
        None => 0.0,
    };
    Ok((rms, err))
}

/// Least-squares fit `value = a + b / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub limit: f64,
    pub slope: f64,
}

pub fn extrapolate_convergence(ks: &[f64], values: &[f64]) -> Result<ConvergenceFit> {
    if ks.len() != values.len() || ks.len() < 2 {
        return Err(Error::contract("need at least two (k, value) pairs"));
    }
    if ks.contains(&0.0) {
        return Err(Error::contract("k = 0 has no 1/k"));
    }
    let n = ks.len() as f64;
    let xs: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Numerical("singular fit: all k are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(ConvergenceFit {
        limit: my - slope * mx,
        slope,
    })
}

/// Mean of `points` samples nearest to evenly spaced targets in `[t1, t2]`.
pub fn steady_state_average(trace: &TimeTrace, t1: f64, t2: f64, points: usize) -> Result<f64> {
    let (first, last) = match (trace.times.first(), trace.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::contract("empty trace")),
    };
    let slack = 1e-9 * last.abs().max(1.0);
    if t1 > t2 || t1 < first - slack || t2 > last + slack || points == 0 {
        return Err(Error::contract(format!("window [{t1}, {t2}] outside the trace [{first}, {last}]")));
    }
    let mut acc = 0.0;
    for p in 0..points {
        let target = if points == 1 {
            0.5 * (t1 + t2)
        } else {
            t1 + (t2 - t1) * p as f64 / (points - 1) as f64
        };
        let k = trace
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
            .map(|(k, _)| k)
            .expect("nonempty");
        acc += trace.values[k];
    }
    Ok(acc / points as f64)
}

/// Second-order estimate of the interaction side peaks of a tilted chain,
/// `D -+ 4 J^2 U / (D^2 - U^2)`.
pub fn perturbative_side_peak(hopping: f64, interaction: f64, tilt: f64) -> Result<(f64, f64)> {
    let denom = tilt * tilt - interaction * interaction;
    if denom.abs() <= 1e-12 * tilt.abs().max(interaction.abs()).max(1.0).powi(2) {
        return Err(Error::Numerical(format!(
            "perturbative side peak diverges at |U| = |D| = {}",
            tilt.abs()
        )));
    }
    let offset = 4.0 * hopping * hopping * interaction / denom;
    Ok((tilt - offset, tilt + offset))
}

/// Integer-order Bessel function of the first kind by downward recurrence,
/// normalised with `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j(order: i64, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let reflect = |v: f64, neg: bool| if neg && n % 2 == 1 { -v } else { v };
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ax = x.abs();
    let top = n.max(ax as usize);
    let mut m = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let (mut jp, mut j) = (0.0f64, 1e-300f64);
    let mut wanted = if n == m { j } else { 0.0 };
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            wanted *= 1e-250;
            norm *= 1e-250;
        }
        if k - 1 == n {
            wanted = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    let v = wanted / norm;
    // J_n(-x) = (-1)^n J_n(x) and J_{-n}(x) = (-1)^n J_n(x)
    reflect(reflect(v, x < 0.0), order < 0)
}

/// Probability that a single atom started at site `j` of an infinite tilted
/// chain sits at site `i` after time `t`:
/// `|J_{i-j}((4 J / D) sin(D t / 2))|^2`.
pub fn bessel_occupancy(i: i64, j: i64, t: f64, hopping: f64, tilt: f64) -> Result<f64> {
    if tilt == 0.0 {
        return Err(Error::contract("the tilted-chain closed form needs a nonzero tilt"));
    }
    let arg = 4.0 * hopping / tilt * (0.5 * tilt * t).sin();
    Ok(bessel_j(i - j, arg).powi(2))
}

/// Mean of `values[range]`.
pub fn plateau_correlation(values: &[f64], range: Range<usize>) -> Result<f64> {
    if range.start >= range.end || range.end > values.len() {
        return Err(Error::contract(format!(
            "plateau range {range:?} outside {} values",
            values.len()
        )));
    }
    Ok(values[range.clone()].iter().sum::<f64>() / range.len() as f64)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Value at `x` of the polynomial through the points `(xs, ys)`.
pub fn lagrange_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                w *= (x - xj) / (xi - xj);
            }
        }
        acc += w * yi;
    }
    acc
}

/// Largest absolute pointwise difference of two equally long sequences.
pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(times: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeTrace {
        let values = times.iter().map(|&t| f(t)).collect();
        TimeTrace::new(times, values)
    }

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn constant_trace_has_flat_spectrum() {
        let s = fourier_spectrum(&trace(grid(64, 0.5), |_| 0.7), Window::Rectangular).unwrap();
        assert!(s.magnitudes.iter().all(|&m| m < 1e-15));
    }

    #[test]
    fn cosine_peaks_at_its_frequency() {
        let n = 1000;
        let dt = 0.2;
        // choose a frequency on the grid: k = 30
        let d = 2.0 * PI * 30.0 / (n as f64 * dt);
        let s = fourier_spectrum(&trace(grid(n, dt), |t| (d * t).cos()), Window::Rectangular).unwrap();
        assert!((s.peak_frequency().unwrap() - d).abs() < 1e-12);
        assert!((s.magnitudes[30] - 0.5).abs() < 1e-12);
        let hann = fourier_spectrum(&trace(grid(n, dt), |t| (3.0 * t).cos()), Window::Hann).unwrap();
        assert!((hann.peak_frequency().unwrap() - 3.0).abs() <= hann.resolution());
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let t = TimeTrace::new(vec![0.0, 1.0, 3.0], vec![0.0; 3]);
        assert!(fourier_spectrum(&t, Window::Rectangular).is_err());
    }

    #[test]
    fn parseval() {
        let n = 257;
        let values: Vec<f64> = (0..n).map(|k| ((k * 7919) % 97) as f64 / 97.0 + (0.3 * k as f64).sin()).collect();
        let s = spectrum_of(&values, 0.1, Window::Rectangular).unwrap();
        let mean = values.iter().sum::<f64>() / n as f64;
        let energy: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        // one-sided bins k >= 1 stand for two conjugate bins when N is odd
        let spec: f64 = s.magnitudes.iter().skip(1).map(|m| 2.0 * (m * n as f64).powi(2)).sum::<f64>() / n as f64;
        assert!((energy - spec).abs() < 1e-10 * energy, "{energy} {spec}");
    }

    #[test]
    fn rms_examples() {
        let a = trace(grid(5, 1.0), |t| t);
        assert_eq!(rms_deviation(&a, &a).unwrap(), (0.0, 0.0));
        let b = trace(grid(5, 1.0), |t| t + 0.25);
        assert!((rms_deviation(&a, &b).unwrap().0 - 0.25).abs() < 1e-15);
        // residuals 1, -1, 2 with reference errors 0.1, 0.2, 0.3
        let x = TimeTrace::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0]);
        let y = TimeTrace::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).with_stderr(vec![0.1, 0.2, 0.3]);
        let (rms, err) = rms_deviation(&x, &y).unwrap();
        let expect = (6.0f64 / 3.0).sqrt();
        assert!((rms - expect).abs() < 1e-15);
        assert!((err - (0.1 + 0.2 + 0.6) / (3.0 * expect)).abs() < 1e-15);
        let short = TimeTrace::new(vec![0.0, 1.0], vec![0.0, 0.0]);
        assert!(rms_deviation(&x, &short).is_err());
    }

    #[test]
    fn extrapolation() {
        let ks = [2.0, 3.0, 4.0, 5.0];
        let vals: Vec<f64> = ks.iter().map(|k| 0.3 - 0.4 / k).collect();
        let fit = extrapolate_convergence(&ks, &vals).unwrap();
        assert!((fit.limit - 0.3).abs() < 1e-12 && (fit.slope + 0.4).abs() < 1e-12);
        let flat = extrapolate_convergence(&ks, &[0.5; 4]).unwrap();
        assert!((flat.limit - 0.5).abs() < 1e-15 && flat.slope.abs() < 1e-15);
        assert!(extrapolate_convergence(&[2.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn steady_state() {
        let c = trace(grid(400, 1.0), |_| 0.42);
        assert!((steady_state_average(&c, 300.0, 330.0, 10).unwrap() - 0.42).abs() < 1e-15);
        let ramp = trace(grid(401, 0.5), |t| 2.0 * t);
        assert!((steady_state_average(&ramp, 100.0, 120.0, 10).unwrap() - 220.0).abs() < 1e-12);
        assert!(steady_state_average(&ramp, 150.0, 250.0, 10).is_err());
    }

    #[test]
    fn side_peaks() {
        assert_eq!(perturbative_side_peak(1.0, 0.0, 3.0).unwrap(), (3.0, 3.0));
        let (lo, hi) = perturbative_side_peak(1.0, 1.0, 3.0).unwrap();
        assert!((lo - 2.5).abs() < 1e-15 && (hi - 3.5).abs() < 1e-15);
        assert!(perturbative_side_peak(1.0, 3.0, 3.0).is_err());
        let u = 1e6;
        let (lo, _) = perturbative_side_peak(1.0, u, 3.0).unwrap();
        assert!(((3.0 - lo) - (-4.0 / u)).abs() < 1e-9 / u);
    }

    #[test]
    fn bessel_values() {
        // reference values
        let table = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (2, 1.5, 0.232_087_672_144_214_75),
            (0, 10.0, -0.245_935_764_451_348_3),
            (5, 10.0, -0.234_061_528_186_793_7),
            (30, 10.0, 1.551_096_078_257_474_5e-12),
        ];
        for (n, x, v) in table {
            let got = bessel_j(n, x);
            assert!((got - v).abs() < 1e-12 * v.abs().max(1e-3), "J_{n}({x}) = {got}, want {v}");
        }
        assert!((bessel_j(-1, 1.0) + 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(1, -1.0) + 0.440_050_585_744_933_5).abs() < 1e-15);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn bessel_occupancy_revives() {
        let d = 3.0;
        assert_eq!(bessel_occupancy(4, 4, 0.0, 1.0, d).unwrap(), 1.0);
        let period = 2.0 * PI / d;
        assert!((bessel_occupancy(4, 4, period, 1.0, d).unwrap() - 1.0).abs() < 1e-12);
        assert!(bessel_occupancy(5, 4, period, 1.0, d).unwrap() < 1e-12);
        assert!(bessel_occupancy(0, 0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn plateau() {
        assert_eq!(plateau_correlation(&[0.0, 1.0, 0.25, 0.25, 0.25], 2..5).unwrap(), 0.25);
        assert_eq!(plateau_correlation(&[1.0, 0.0, 0.0], 1..3).unwrap(), 0.0);
        assert!(plateau_correlation(&[1.0], 0..3).is_err());
    }

    #[test]
    fn interpolation_and_correlation() {
        let xs = [0.0, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x * x).collect();
        assert!((lagrange_eval(&xs, &ys, 0.25) - (1.0 - 0.5 + 0.1875)).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bessel_normalisation(arg in -10.0f64..10.0) {
            let total: f64 = (-50..=50).map(|n| bessel_j(n, arg).powi(2)).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn rms_is_symmetric(v in proptest::collection::vec(-1.0f64..1.0, 2..30), w in proptest::collection::vec(-1.0f64..1.0, 30)) {
            let n = v.len();
            let a = TimeTrace::new(grid(n, 1.0), v.clone());
            let b = TimeTrace::new(grid(n, 1.0), w[..n].to_vec());
            prop_assert!((rms_deviation(&a, &b).unwrap().0 - rms_deviation(&b, &a).unwrap().0).abs() < 1e-15);
        }
    }
}
