//! Time-averaged connected density correlations from the first site, for a
//! weak and a strong quasiperiodic potential.

use hubbard_shells::cdw::PhaseAverage;
use hubbard_shells::cli::config::CorrConfig;
use hubbard_shells::cli::plans::correlation_profiles;
use hubbard_shells::fewbody::{EvolveOptions, Splitting, TimeGrid};
use hubbard_shells::model::ModelSpec;

fn main() -> hubbard_shells::Result<()> {
    let profiles = correlation_profiles(&CorrConfig {
        model: ModelSpec::aubry_andre(9, 1.0, 5.0, 1.0, 0.0),
        origin: 1,
        q_up: 2,
        grid: TimeGrid::new(30.0, 31)?,
        phases: PhaseAverage::uniform(4),
        amplitudes: vec![1.0, 8.0],
        plateau: None,
        evolve: EvolveOptions::default().with_dt(0.02).with_splitting(Splitting::Strang),
    })?;
    for p in &profiles {
        let row: Vec<String> = p.mean_abs.iter().map(|c| format!("{c:.2e}")).collect();
        println!("amplitude {}: plateau {:.3e}\n  |C_1j| = {}", p.amplitude, p.plateau, row.join(" "));
    }
    Ok(())
}
