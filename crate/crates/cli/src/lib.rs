//! Command-line front end for `ising-qaoa`.
//!
//! Each subcommand reads one [`ExperimentConfig`], writes CSV and JSON files
//! into the output directory and finishes with `manifest.json`. Passing that
//! manifest back as `--config` reproduces the run byte for byte.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use manifest::Manifest;

#[derive(Debug, Parser)]
#[command(
    name = "ising-qaoa",
    version,
    about = "QAOA experiments on long-range transverse-field Ising chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON or TOML experiment config, or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config and any manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Largest register to simulate.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Coupling matrix, its fits and, for trap sources, the normal modes.
    Couplings,
    /// Extremal energies and ground-state entropy across fields.
    Spectrum,
    /// Depth-1 energy grid.
    Landscape,
    /// Gradient-descent trace.
    Descend,
    /// Bootstrapped schedules and angle curves up to depth p.
    Bootstrap,
    /// Performance and ground-state overlap against size and depth.
    Scaling,
    /// Noisy samples, bubbles and coarse distances along a γ scan.
    Sample,
    /// Simulated experimental energy along a γ scan.
    NoisyScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Couplings => "couplings",
            Command::Spectrum => "spectrum",
            Command::Landscape => "landscape",
            Command::Descend => "descend",
            Command::Bootstrap => "bootstrap",
            Command::Scaling => "scaling",
            Command::Sample => "sample",
            Command::NoisyScan => "noisy-scan",
        }
    }
}

/// Run one subcommand and return its manifest.
pub fn run(cli: &Cli) -> Result<Manifest> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| error::schema("--config is required"))?;
    let (config, manifest_seed) = ExperimentConfig::load(path)?;
    let seed = cli.seed.or(manifest_seed).or(config.seed).unwrap_or(0);
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(error::schema("--threads must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let ctx = commands::Context {
        config: &config,
        seed,
        cap: cli.cap,
    };
    let mut out = manifest::OutputDir::create(&cli.out)?;
    match cli.command {
        Command::Couplings => commands::couplings(&ctx, &mut out)?,
        Command::Spectrum => commands::spectrum(&ctx, &mut out)?,
        Command::Landscape => commands::landscape(&ctx, &mut out)?,
        Command::Descend => commands::descend(&ctx, &mut out)?,
        Command::Bootstrap => commands::bootstrap(&ctx, &mut out)?,
        Command::Scaling => commands::scaling(&ctx, &mut out)?,
        Command::Sample => commands::sample(&ctx, &mut out)?,
        Command::NoisyScan => commands::noisy_scan(&ctx, &mut out)?,
    }
    out.finish(cli.command.name(), seed, cli.cap, &config)
}
