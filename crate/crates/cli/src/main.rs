//! `workreal`: run one named experiment and write its CSV and summary.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser};
use serde_json::json;

use config::{Config, ConfigError, Experiment, RawSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] workreal_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(workreal_core::Error::Truncation { .. }) => 3,
            CliError::Check(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "workreal", version, about = "Work statistics and Leggett-Garg sweeps")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
struct Flags {
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `lo:hi:n` or a comma-separated list.
    #[arg(long)]
    grid_spec: Option<String>,
    /// `e` or `2`.
    #[arg(long)]
    entropy_base: Option<String>,
    /// `fine` or `grouped`.
    #[arg(long)]
    degeneracy: Option<String>,
    /// Worker threads; falls back to WORKREAL_THREADS.
    #[arg(long)]
    threads: Option<String>,
}

fn resolve(cli: Cli) -> Result<Config, ConfigError> {
    let mut raw = match &cli.flags.config {
        Some(path) => RawSettings::parse_file(path)?,
        None => RawSettings::default(),
    };
    let f = cli.flags;
    let threads = f.threads.or_else(|| std::env::var("WORKREAL_THREADS").ok());
    for (key, value) in [
        ("out", f.out),
        ("beta", f.beta),
        ("n_max", f.n_max),
        ("seed", f.seed),
        ("grid_spec", f.grid_spec),
        ("entropy_base", f.entropy_base),
        ("degeneracy", f.degeneracy),
        ("threads", threads),
    ] {
        raw.set_flag(key, value);
    }
    Config::resolve(cli.experiment, &raw)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("workreal: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let start = Instant::now();
    let (out, error) = match experiments::run(&config) {
        Ok(out) => {
            let check = out.failed_check.clone().map(CliError::Check);
            (Some(out), check)
        }
        Err(e) => (None, Some(e)),
    };
    let message = error.as_ref().map(|e| e.to_string());
    if let Err(e) = summarize(&config, &start, out.as_ref(), message.as_deref()) {
        eprintln!("workreal: {e}");
        return ExitCode::from(1);
    }
    for f in out.iter().flat_map(|o| &o.files) {
        println!("{}", f.display());
    }
    match error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("workreal: {} failed: {e}", config.experiment.name());
            ExitCode::from(e.exit_code())
        }
    }
}

fn summarize(
    config: &Config,
    start: &Instant,
    out: Option<&experiments::RunOutput>,
    error: Option<&str>,
) -> std::io::Result<PathBuf> {
    let echo: serde_json::Map<String, serde_json::Value> = config
        .echo()
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let record = json!({
        "experiment": config.experiment.name(),
        "version": workreal_core::VERSION,
        "config": echo,
        "threads": rayon::current_num_threads(),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "status": if error.is_some() { "error" } else { "ok" },
        "error": error,
        "files": out.map(|o| o.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>()),
        "results": out.map(|o| &o.results),
    });
    output::append_summary(&config.out, &record)
}
