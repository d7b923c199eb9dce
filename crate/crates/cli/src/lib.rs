//! Batch front end: one TOML run config in, CSV files and a summary out.
//! Exit codes are 0 on success, 2 for invalid input and 3 for numerical
//! failure; failures print one JSON record on stderr.

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::{CliError, ErrorKind};

#[derive(Debug, Clone, Parser)]
#[command(name = "quasidiff", version, about = "Spectral experiments for quasi-differential operators")]
pub struct Args {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads and executes the config at `args.config`.
pub fn run(args: &Args) -> Result<Outcome, CliError> {
    let cfg: RunConfig = config::read_toml(&args.config, "config")?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = match (&args.out, &cfg.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("."),
    };
    let threads = args.threads.or(cfg.threads);
    if threads == Some(0) {
        return Err(CliError::validation("threads", "need at least one thread"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::validation("threads", e.to_string()))?;
    let ctx = commands::Context { base: &base, out: &out };
    pool.install(|| commands::dispatch(&cfg, &ctx))
}

/// Runs and reports; returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    match run(args) {
        Ok(o) => {
            for l in &o.lines {
                println!("{l}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.passed {
                0
            } else {
                let e = CliError::numerical("verify", "one or more checks failed");
                eprintln!("{}", e.to_json());
                e.exit_code()
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
