//! Regenerate the stored reference imbalance used by the golden test.
//!
//! ```text
//! cargo run --release --example golden [output.json]
//! ```

use hubbard_shells::exact::{golden_imbalance, FullConfiguration};
use hubbard_shells::fewbody::TimeGrid;
use hubbard_shells::model::{ModelSpec, Spin};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_imbalance.json").to_string());
    let config = FullConfiguration::neel(ModelSpec::stark(8, 1.0, 5.0, 3.0), Spin::Up)?;
    let golden = golden_imbalance(
        "spin-down imbalance, L=8 open chain, 2+2 atoms, tilt 3, U=5, at t=10",
        &config,
        TimeGrid::new(10.0, 11)?,
        1.0 / 800.0,
        Spin::Down,
    )?;
    std::fs::write(&out, serde_json::to_string_pretty(&golden)? + "\n")?;
    println!("I_down(10) = {:.15}  (step-doubling change {:.2e})", golden.value, golden.halving_difference);
    println!("wrote {out}");
    Ok(())
}
