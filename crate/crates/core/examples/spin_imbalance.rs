//! With large-lattice weights and `k_up = 2`, the spin-down imbalance is a
//! quadratic polynomial in the up filling at every time.

use hubbard_shells::analysis::lagrange_eval;
use hubbard_shells::cdw::{cdw_imbalance_trace, CdwEnsembleSpec, Weighting};
use hubbard_shells::fewbody::TimeGrid;
use hubbard_shells::model::{ModelSpec, ShellSpec, Spin};

fn main() -> hubbard_shells::Result<()> {
    let grid = TimeGrid::new(8.0, 9)?;
    let trace = |lambda: f64| -> hubbard_shells::Result<Vec<f64>> {
        let mut spec = CdwEnsembleSpec::new(ModelSpec::stark(40, 1.0, 3.0, 3.0), lambda, ShellSpec::from_k(4, 2, 0)?, grid);
        spec.translation_invariant = true;
        spec.weighting = Weighting::Stirling;
        Ok(cdw_imbalance_trace(&spec, Spin::Down)?.values)
    };
    let nodes = [0.0, 0.5, 1.0];
    let at = nodes.iter().map(|&l| trace(l)).collect::<hubbard_shells::Result<Vec<_>>>()?;
    let direct = trace(0.75)?;
    for (k, t) in grid.times().iter().enumerate() {
        let predicted = lagrange_eval(&nodes, &[at[0][k], at[1][k], at[2][k]], 0.75);
        println!("t = {t:3.0}  lambda=0.75 direct {:+.10}  from quadratic {predicted:+.10}", direct[k]);
    }
    Ok(())
}
