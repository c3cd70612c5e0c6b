//! Physical checks that complement the acceptance suite.

use hubbard_shells::analysis::{fourier_spectrum, perturbative_side_peak, Window};
use hubbard_shells::cdw::{cdw_imbalance_trace, CdwEnsembleSpec, Weighting};
use hubbard_shells::fewbody::{EvolveOptions, Splitting, TimeGrid};
use hubbard_shells::model::{ModelSpec, ShellSpec, Spin};

/// Far from resonance (J much smaller than the tilt) the interaction side
/// peaks sit where second-order perturbation theory puts them.
#[test]
fn side_peaks_match_perturbation_theory_at_strong_tilt() {
    let (tilt, u) = (10.0, 3.0);
    let grid = TimeGrid::new(400.0, 8001).unwrap();
    let mut spec = CdwEnsembleSpec::new(ModelSpec::stark(40, 1.0, u, tilt), 0.5, ShellSpec::from_k(4, 1, 0).unwrap(), grid);
    spec.translation_invariant = true;
    spec.weighting = Weighting::Stirling;
    spec.evolve = EvolveOptions::default().with_dt(0.01).with_splitting(Splitting::Strang);
    let spectrum = fourier_spectrum(&cdw_imbalance_trace(&spec, Spin::Down).unwrap(), Window::Hann).unwrap();
    let (lo, hi) = perturbative_side_peak(1.0, u, tilt).unwrap();
    let bin = spectrum.resolution();
    let lower = spectrum.dominant_peak_in(tilt - 0.5, tilt - 3.0 * bin, &[]).unwrap();
    let upper = spectrum.dominant_peak_in(tilt + 3.0 * bin, tilt + 0.5, &[]).unwrap();
    assert!((spectrum.frequencies[lower] - lo).abs() <= 1.5 * bin, "{} vs {lo}", spectrum.frequencies[lower]);
    assert!((spectrum.frequencies[upper] - hi).abs() <= 1.5 * bin, "{} vs {hi}", spectrum.frequencies[upper]);
}
