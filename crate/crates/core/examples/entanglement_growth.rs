//! Half-chain entanglement entropy of a few-body state in a quasiperiodic
//! potential, averaged over detuning phases.

use hubbard_shells::cdw::PhaseAverage;
use hubbard_shells::cli::config::EeConfig;
use hubbard_shells::cli::plans::ee_trace;
use hubbard_shells::fewbody::{EvolveOptions, Splitting, TimeGrid};
use hubbard_shells::model::ModelSpec;

fn main() -> hubbard_shells::Result<()> {
    let trace = ee_trace(&EeConfig {
        model: ModelSpec::aubry_andre(11, 1.0, 5.0, 8.0, 0.0),
        half_width: 5,
        q_up: 2,
        q_down: 0,
        cut: None,
        grid: TimeGrid::new(50.0, 51)?,
        phases: PhaseAverage::uniform(4),
        evolve: EvolveOptions::default().with_dt(0.02).with_splitting(Splitting::Strang),
    })?;
    for k in (0..trace.len()).step_by(5) {
        println!("t = {:4.0}  S = {:.5}", trace.times[k], trace.values[k]);
    }
    Ok(())
}
