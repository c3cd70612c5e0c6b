//! Steady-state imbalance against the up-spin shell size, with an
//! `a + b / k` extrapolation of the sequence.

use hubbard_shells::analysis::{extrapolate_convergence, steady_state_average};
use hubbard_shells::cdw::{cdw_imbalance_trace, CdwEnsembleSpec, Weighting};
use hubbard_shells::fewbody::{EvolveOptions, Splitting, TimeGrid};
use hubbard_shells::model::{ModelSpec, ShellSpec, Spin};

fn main() -> hubbard_shells::Result<()> {
    let model = ModelSpec::stark(40, 1.0, 5.0, 1.1);
    let mut ks = Vec::new();
    let mut steady = Vec::new();
    for k_up in 1..=3 {
        let mut spec = CdwEnsembleSpec::new(model.clone(), 0.5, ShellSpec::from_k(4, k_up, 0)?, TimeGrid::new(40.0, 401)?);
        spec.translation_invariant = true;
        spec.weighting = Weighting::Stirling;
        spec.evolve = EvolveOptions::default().with_dt(0.02).with_splitting(Splitting::Strang);
        let value = steady_state_average(&cdw_imbalance_trace(&spec, Spin::Down)?, 30.0, 40.0, 10)?;
        println!("k_up = {k_up}: steady imbalance {value:.5}");
        ks.push(k_up as f64);
        steady.push(value);
    }
    let fit = extrapolate_convergence(&ks, &steady)?;
    println!("extrapolated to k -> infinity: {fit:?}");
    Ok(())
}
