//! Canonical parent of two single-spin densities built from per-atom
//! occupancy matrices of a small evolved problem.

use hubbard_shells::approx::{apply_approximations, gamma_sigma_r};
use hubbard_shells::exact::FullConfiguration;
use hubbard_shells::fewbody::{EvolveOptions, TimeGrid};
use hubbard_shells::linalg::max_abs_diff;
use hubbard_shells::model::{ModelSpec, ShellSpec, Spin};
use hubbard_shells::reconstruct::{canonical_parent, parent_entropy, single_spin_density};

fn main() -> hubbard_shells::Result<()> {
    let model = ModelSpec::stark(8, 1.0, 4.0, 1.5);
    let initial = FullConfiguration::neel(model.clone(), Spin::Up)?;
    let grid = TimeGrid::new(3.0, 4)?;
    let shells = ShellSpec::new(3, 0, 2)?;
    let mut densities = Vec::new();
    for spin in [Spin::Up, Spin::Down] {
        let per_atom = (0..initial.positions(spin).len())
            .map(|r| {
                let problem = apply_approximations(&initial, r, spin, &shells)?;
                Ok(gamma_sigma_r(&problem, &model, &grid, &EvolveOptions::default())?.pop().expect("final sample"))
            })
            .collect::<hubbard_shells::Result<Vec<_>>>()?;
        densities.push(single_spin_density(&per_atom)?);
    }
    let parent = canonical_parent(&densities[0], &densities[1])?;
    println!("layers {}, weights {:?}", parent.rank(), parent.weights());
    println!("entropy {:.6} nats", parent_entropy(&parent));
    println!(
        "marginal errors {:.1e} {:.1e}",
        max_abs_diff(parent.reduced_up().as_ref(), densities[0].matrix.as_ref()),
        max_abs_diff(parent.reduced_down().as_ref(), densities[1].matrix.as_ref())
    );
    Ok(())
}
