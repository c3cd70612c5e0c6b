//! Recompute the stored reference imbalance and compare it bit for bit up
//! to rounding. Regenerate the file with `cargo run --example golden`.

use hubbard_shells::exact::{golden_imbalance, GoldenValue};
use hubbard_shells::provenance::content_hash;

const STORED: &str = include_str!("data/golden_imbalance.json");

#[test]
fn golden_imbalance_is_reproduced() {
    let stored: GoldenValue = serde_json::from_str(STORED).unwrap();
    assert_eq!(stored.config_hash, content_hash(&stored.config).unwrap());
    let fresh = golden_imbalance(&stored.description, &stored.config, stored.grid, stored.dt, stored.spin).unwrap();
    assert!(
        (fresh.value - stored.value).abs() < 1e-12,
        "golden value drifted: {} vs stored {}",
        fresh.value,
        stored.value
    );
    // Halving the step moves the value far less than the digits we rely on.
    assert!(stored.halving_difference < 1e-5);
    assert!((fresh.halving_difference - stored.halving_difference).abs() < 1e-12);
}
