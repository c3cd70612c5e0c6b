//! Command-line front end.
//!
//! Each subcommand reads one JSON configuration, runs a plan and writes its
//! files into `<out>/<hash>/`, where `<hash>` is the content hash of the
//! command and the effective configuration. Every data file `x` gets a
//! sidecar `x.json` holding the full configuration and provenance, so it
//! can be regenerated from the sidecar alone.

pub mod config;
pub mod plans;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::provenance::{canonical_json, content_hash, VERSION};
use config::*;
use plans::PlanOutput;

#[derive(Debug, Clone, Parser)]
#[command(name = "hubbard-shells", version, about = "Shell-truncated dynamics of localized Fermi-Hubbard chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: RunOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ensemble imbalance trace.
    Trace,
    /// Ensemble imbalance trace and its Fourier spectrum.
    Spectrum,
    /// Grid over window size, shells, interaction and detuning.
    Sweep,
    /// Entanglement entropy of one few-body state.
    Ee,
    /// Averaged density-density correlations of one few-body state.
    Corr,
    /// Approximate against exact ensemble on a small lattice.
    Benchmark,
    /// Canonical parent state from per-atom occupancy matrices.
    Reconstruct,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Ee => "ee",
            Command::Corr => "corr",
            Command::Benchmark => "benchmark",
            Command::Reconstruct => "reconstruct",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct RunOptions {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parent directory of run folders.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Memory ceiling per propagation in MiB.
    #[arg(long, global = true)]
    pub budget_mib: Option<u64>,
    /// Seed for jittered detuning phases.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Where a run wrote its files and what it found.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

trait Plan: Serialize + DeserializeOwned + Validate + Sync {
    fn overrides(&mut self, opts: &RunOptions);
    fn dt(&self) -> Option<f64>;
    fn execute(&self) -> Result<PlanOutput>;
}

fn budget(opts: &RunOptions, evolve: &mut crate::fewbody::EvolveOptions) {
    if let Some(mib) = opts.budget_mib {
        evolve.budget_bytes = mib as u128 * (1 << 20);
    }
}

fn seed(opts: &RunOptions, phases: &mut crate::cdw::PhaseAverage) {
    if let (Some(s), true) = (opts.seed, phases.count > 1) {
        phases.jitter_seed = Some(s);
    }
}

macro_rules! ensemble_plan {
    ($t:ty, $run:path) => {
        impl Plan for $t {
            fn overrides(&mut self, opts: &RunOptions) {
                budget(opts, &mut self.ensemble.evolve);
                seed(opts, &mut self.ensemble.phases);
            }
            fn dt(&self) -> Option<f64> {
                plans::effective_dt(&self.ensemble.grid, &self.ensemble.evolve)
            }
            fn execute(&self) -> Result<PlanOutput> {
                $run(self)
            }
        }
    };
}

ensemble_plan!(TraceConfig, plans::run_trace);
ensemble_plan!(SpectrumConfig, plans::run_spectrum);
ensemble_plan!(SweepConfig, plans::run_sweep);
ensemble_plan!(BenchmarkConfig, plans::run_benchmark);

impl Plan for EeConfig {
    fn overrides(&mut self, opts: &RunOptions) {
        budget(opts, &mut self.evolve);
        seed(opts, &mut self.phases);
    }
    fn dt(&self) -> Option<f64> {
        plans::effective_dt(&self.grid, &self.evolve)
    }
    fn execute(&self) -> Result<PlanOutput> {
        plans::run_ee(self)
    }
}

impl Plan for CorrConfig {
    fn overrides(&mut self, opts: &RunOptions) {
        budget(opts, &mut self.evolve);
        seed(opts, &mut self.phases);
    }
    fn dt(&self) -> Option<f64> {
        plans::effective_dt(&self.grid, &self.evolve)
    }
    fn execute(&self) -> Result<PlanOutput> {
        plans::run_corr(self)
    }
}

impl Plan for ReconstructConfig {
    fn overrides(&mut self, opts: &RunOptions) {
        budget(opts, &mut self.evolve);
    }
    fn dt(&self) -> Option<f64> {
        plans::effective_dt(&self.grid, &self.evolve)
    }
    fn execute(&self) -> Result<PlanOutput> {
        plans::run_reconstruct(self)
    }
}

fn run_plan<P: Plan>(command: Command, text: &str, opts: &RunOptions) -> Result<RunOutcome> {
    let mut cfg: P = parse_config(text)?;
    cfg.overrides(opts);
    cfg.validate()?;
    let config_value = serde_json::to_value(&cfg)?;
    let hash = content_hash(&json!({"command": command.name(), "config": config_value}))?;
    let provenance = json!({
        "command": command.name(),
        "config_hash": hash,
        "version": VERSION,
        "dt": cfg.dt(),
        "seed": opts.seed,
    });
    let (artifacts, summary) = in_pool(opts.workers, || cfg.execute())?;
    let dir = opts.out.join(&hash[..16]);
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let write = |path: &Path, body: &str, files: &mut Vec<PathBuf>| -> Result<()> {
        std::fs::write(path, body)?;
        files.push(path.to_path_buf());
        Ok(())
    };
    write(&dir.join("config.json"), &(canonical_json(&config_value)? + "\n"), &mut files)?;
    for a in &artifacts {
        let path = dir.join(&a.name);
        write(&path, &a.body, &mut files)?;
        let sidecar = json!({"provenance": provenance, "config": config_value, "file": a.name, "meta": a.meta});
        write(
            &crate::cdw::sidecar_path(&path),
            &(serde_json::to_string_pretty(&sidecar)? + "\n"),
            &mut files,
        )?;
    }
    let summary = json!({"provenance": provenance, "summary": summary});
    write(&dir.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"), &mut files)?;
    Ok(RunOutcome {
        directory: dir,
        files,
        summary,
    })
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let n = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(Error::config("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::config(format!("cannot start {n} workers: {e}")))?;
    pool.install(f)
}

/// Run `command` on the configuration text `text`.
pub fn run_with_text(command: Command, text: &str, opts: &RunOptions) -> Result<RunOutcome> {
    match command {
        Command::Trace => run_plan::<TraceConfig>(command, text, opts),
        Command::Spectrum => run_plan::<SpectrumConfig>(command, text, opts),
        Command::Sweep => run_plan::<SweepConfig>(command, text, opts),
        Command::Ee => run_plan::<EeConfig>(command, text, opts),
        Command::Corr => run_plan::<CorrConfig>(command, text, opts),
        Command::Benchmark => run_plan::<BenchmarkConfig>(command, text, opts),
        Command::Reconstruct => run_plan::<ReconstructConfig>(command, text, opts),
    }
}

/// Run `command` with the configuration named in `opts.config`.
pub fn run(command: Command, opts: &RunOptions) -> Result<RunOutcome> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config <FILE> is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    run_with_text(command, &text, opts)
}

/// Parse `args`, run, report and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command, &cli.options) {
        Ok(outcome) => {
            println!("{}", outcome.directory.display());
            println!("{}", serde_json::to_string_pretty(&outcome.summary["summary"]).unwrap_or_default());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
