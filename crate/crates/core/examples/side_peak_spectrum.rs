//! Fourier spectrum of the imbalance: the Bloch line at the tilt and the
//! interaction side peaks next to it, with the perturbative estimate.

use hubbard_shells::analysis::{fourier_spectrum, perturbative_side_peak, Window};
use hubbard_shells::cdw::{cdw_imbalance_trace, CdwEnsembleSpec, Weighting};
use hubbard_shells::fewbody::{EvolveOptions, Splitting, TimeGrid};
use hubbard_shells::model::{ModelSpec, ShellSpec, Spin};

fn main() -> hubbard_shells::Result<()> {
    let (tilt, u) = (6.0, 2.0);
    let mut spec = CdwEnsembleSpec::new(ModelSpec::stark(40, 1.0, u, tilt), 0.5, ShellSpec::from_k(4, 1, 0)?, TimeGrid::new(200.0, 4001)?);
    spec.translation_invariant = true;
    spec.weighting = Weighting::Stirling;
    spec.evolve = EvolveOptions::default().with_dt(0.01).with_splitting(Splitting::Strang);
    let spectrum = fourier_spectrum(&cdw_imbalance_trace(&spec, Spin::Down)?, Window::Hann)?;
    let (lo, hi) = perturbative_side_peak(1.0, u, tilt)?;
    println!("resolution {:.4} J, perturbative side peaks {lo:.4} J and {hi:.4} J", spectrum.resolution());
    let mut peaks: Vec<usize> = spectrum
        .local_maxima()
        .into_iter()
        .filter(|&k| (spectrum.frequencies[k] - tilt).abs() < 1.0)
        .collect();
    peaks.sort_by(|a, b| spectrum.magnitudes[*b].total_cmp(&spectrum.magnitudes[*a]));
    for &k in peaks.iter().take(3) {
        println!("peak at {:.4} J, magnitude {:.3e}", spectrum.frequencies[k], spectrum.magnitudes[k]);
    }
    Ok(())
}
