//! Drive the `trace` subcommand from code and list the files it writes.

use hubbard_shells::cli::{run_with_text, Command, RunOptions};

const CONFIG: &str = r#"{"ensemble": {
    "model": {"hopping": 1, "interaction": 5,
              "potential": {"kind": "stark", "tilt_up": 3.3, "tilt_down": 3.3}, "sites": 40},
    "filling_up": 0.5, "weighting": "stirling", "translation_invariant": true,
    "shells": {"half_width": 4, "kappa_up": 2, "kappa_down": 0},
    "grid": {"t_max_over_tau": 20, "n_samples": 201}}}"#;

fn main() -> hubbard_shells::Result<()> {
    let opts = RunOptions {
        out: std::env::temp_dir().join("hubbard-shells-runs"),
        ..RunOptions::default()
    };
    let outcome = run_with_text(Command::Trace, CONFIG, &opts)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary is JSON"));
    Ok(())
}
