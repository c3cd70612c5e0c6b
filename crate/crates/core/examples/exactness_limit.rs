//! When the window and both shells cover a whole ring, the shell-truncated
//! ensemble reproduces the exact charge-density-wave average.

use hubbard_shells::analysis::sup_norm_diff;
use hubbard_shells::cdw::{cdw_imbalance_trace, CdwEnsembleSpec};
use hubbard_shells::exact::exact_cdw_imbalance;
use hubbard_shells::fewbody::{EvolveOptions, TimeGrid};
use hubbard_shells::model::{Boundary, ModelSpec, ShellSpec, Spin};

fn main() -> hubbard_shells::Result<()> {
    let model = ModelSpec::stark(8, 1.0, 5.0, 3.0).with_boundary(Boundary::Periodic);
    let grid = TimeGrid::new(10.0, 51)?;
    let spec = CdwEnsembleSpec::new(model.clone(), 0.5, ShellSpec::new(4, 8, 8)?, grid);
    let approx = cdw_imbalance_trace(&spec, Spin::Down)?;
    let exact = exact_cdw_imbalance(&model, 2, &grid, &EvolveOptions::default(), Spin::Down)?;
    for k in (0..grid.samples).step_by(10) {
        println!("t = {:5.1}  approx {:+.12}  exact {:+.12}", approx.times[k], approx.values[k], exact.values[k]);
    }
    println!("sup-norm difference {:.2e}", sup_norm_diff(&approx.values, &exact.values));
    Ok(())
}
