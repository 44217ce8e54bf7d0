use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::commands::{cmd_detect, cmd_epr, cmd_spinboson, cmd_wavepacket, RunFlags, RunReport};
use super::config::ConfigSource;
use super::output::OutputDir;
use super::{HarnessError, THREADS_ENV};

#[derive(Debug, Parser)]
#[command(name = "catcollapse", version, about = "Photon detection, cat states and spin-boson collapse")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Base seed; run `i` uses `seed + i`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Subcommand mode, e.g. `rabi`, `dephasing`, `scan`, `collapse`.
    #[arg(long, global = true)]
    pub mode: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Gaussian pulse normalization, energy and envelope scan.
    Wavepacket,
    /// Single-detector Born-rule sampling.
    Detect,
    /// Entangled pair scenario ensemble.
    Epr,
    /// Spin-boson trajectories, scans and collapse ensembles.
    Spinboson,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Wavepacket => "wavepacket",
            Command::Detect => "detect",
            Command::Epr => "epr",
            Command::Spinboson => "spinboson",
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    config: String,
    config_sha256: &'a str,
    threads: usize,
    started_unix_s: f64,
    wall_time_s: f64,
    #[serde(flatten)]
    report: &'a RunReport,
}

fn thread_cap() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(HarnessError::Invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs one subcommand and writes `metadata.json` next to its outputs.
pub fn run(cli: &Cli) -> Result<RunReport, HarnessError> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| HarnessError::Invalid("--config <path> is required".into()))?;
    let src = ConfigSource::read(config)?;
    let flags = RunFlags {
        n: cli.n,
        seed: cli.seed,
        out: cli.out.clone(),
        mode: cli.mode.clone(),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Invalid(e.to_string()))?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let report = pool.install(|| match cli.command {
        Command::Wavepacket => cmd_wavepacket(&src, &flags),
        Command::Detect => cmd_detect(&src, &flags),
        Command::Epr => cmd_epr(&src, &flags),
        Command::Spinboson => cmd_spinboson(&src, &flags),
    })?;
    let meta = Metadata {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: display_path(config),
        config_sha256: &src.sha256,
        threads: pool.current_num_threads(),
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        report: &report,
    };
    OutputDir::create(&flags.out)?.json("metadata.json", &meta)?;
    Ok(report)
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}
