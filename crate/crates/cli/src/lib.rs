//! `sbm`: run one simulation stage from a TOML configuration and write its
//! tables plus a manifest that reproduces the run.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};

use commands::Command;
use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Clone, Parser)]
#[command(name = "sbm", version, about = "Spin-boson simulations of a defect on a vibrating membrane")]
pub struct Args {
    pub command: Command,

    /// TOML configuration; every key has a default.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Override a key, e.g. `--set membrane.g0=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Run one command end to end: load, validate, compute, write outputs.
pub fn execute(args: &Args) -> Result<(), CliError> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let mut cfg = config::load(&text, &args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    commands::resolve(args.command, &mut cfg);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config("workers", e.to_string()))?;
    let result = pool.install(|| commands::run(args.command, &cfg))?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    for (name, body) in &result.files {
        write(&args.out.join(name), body)?;
    }
    let manifest = manifest(args.command, &cfg, &result.modes.to_table())?;
    write(&args.out.join("manifest.toml"), &manifest)
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

/// Resolved configuration with a provenance header. Feeding it back through
/// `--config` reproduces every output file byte for byte.
fn manifest(command: Command, cfg: &RunConfig, mode_table: &str) -> Result<String, CliError> {
    let body = toml::to_string(cfg).map_err(|e| CliError::Parse(e.to_string()))?;
    let digest = hex::encode(Sha256::digest(mode_table.as_bytes()));
    Ok(format!(
        "# sbm {version}\n# command = {cmd}\n# modes_sha256 = {digest}\n\
         # rerun: sbm {cmd} --config manifest.toml --out <dir>\n\n{body}",
        version = env!("CARGO_PKG_VERSION"),
        cmd = command.name(),
    ))
}
