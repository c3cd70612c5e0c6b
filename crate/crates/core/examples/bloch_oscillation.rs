//! A single atom in a tilted lattice: exact propagation against the Bessel
//! closed form, over two Bloch periods.

use hubbard_shells::analysis::bessel_occupancy;
use hubbard_shells::exact::{exact_densities, FullConfiguration};
use hubbard_shells::fewbody::{EvolveOptions, TimeGrid};
use hubbard_shells::model::{ModelSpec, Spin};

fn main() -> hubbard_shells::Result<()> {
    let tilt = 2.0;
    let period = 2.0 * std::f64::consts::PI / tilt;
    let config = FullConfiguration::new(ModelSpec::stark(21, 1.0, 0.0, tilt), vec![11], vec![])?;
    let grid = TimeGrid::new(2.0 * period, 17)?;
    let densities = exact_densities(&config, &grid, &EvolveOptions::default(), Spin::Up)?;
    println!("{:>8} {:>10} {:>10} {:>10}", "t", "n_11", "n_12", "bessel_12");
    for (t, n) in grid.times().iter().zip(&densities) {
        let closed = bessel_occupancy(11, 12, *t, 1.0, tilt)?;
        println!("{t:8.3} {:10.6} {:10.6} {closed:10.6}", n[10], n[11]);
    }
    Ok(())
}
