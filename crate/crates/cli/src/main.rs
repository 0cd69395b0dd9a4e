//! `openbath` command-line interface.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use openbath::scaling::config_hash;

use crate::config::RunFile;
use crate::output::{Manifest, SCHEMA_VERSION};

/// Errors of a run, mapped to exit codes 2 (configuration) and 3 (numerics).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(openbath::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<openbath::Error> for CliError {
    fn from(e: openbath::Error) -> Self {
        use openbath::Error as E;
        match e {
            E::NonPositiveGamma(_)
            | E::OverlappingEmitters(_)
            | E::BadDimension { .. }
            | E::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Ddos,
    Poles,
    Dynamics,
    Pair,
    G2,
    Sweep,
    Classify,
    OracleCompare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ddos => "ddos",
            Command::Poles => "poles",
            Command::Dynamics => "dynamics",
            Command::Pair => "pair",
            Command::G2 => "g2",
            Command::Sweep => "sweep",
            Command::Classify => "classify",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

/// Pole-search tolerance profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Fast,
    Precise,
}

impl Profile {
    /// Maximum accepted `|G⁻¹|` at a pole.
    pub fn residual_tol(self) -> f64 {
        match self {
            Profile::Fast => 1e-8,
            Profile::Precise => 1e-10,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Profile::Fast => "fast",
            Profile::Precise => "precise",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed_grid: bool,
    pub profile: Profile,
}

#[derive(Debug, Parser)]
#[command(name = "openbath", version, about = "Emitters coupled to dissipative open baths")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV files, manifest.json and summary.txt.
    #[arg(long, default_value = "openbath-out")]
    out_dir: PathBuf,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Also seed the pole search from a lower-half-plane grid.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    seed_grid: bool,
    #[arg(long, value_enum, default_value_t = Profile::Precise)]
    tolerance_profile: Profile,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Dissipative density of states across the band.
    Ddos(Common),
    /// Quasibound-state poles, optionally over a sweep.
    Poles(Common),
    /// Emitter dynamics from the Green function.
    Dynamics(Common),
    /// Two-excitation poles and pair amplitude.
    Pair(Common),
    /// Second-order correlation of the weakly driven emitter.
    G2(Common),
    /// Parameter sweep with exponent fit.
    Sweep(Common),
    /// Band-edge classification of the dissipation band.
    Classify(Common),
    /// Green-function dynamics against finite-ring simulations.
    OracleCompare(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Ddos(c) => (Command::Ddos, c),
            Sub::Poles(c) => (Command::Poles, c),
            Sub::Dynamics(c) => (Command::Dynamics, c),
            Sub::Pair(c) => (Command::Pair, c),
            Sub::G2(c) => (Command::G2, c),
            Sub::Sweep(c) => (Command::Sweep, c),
            Sub::Classify(c) => (Command::Classify, c),
            Sub::OracleCompare(c) => (Command::OracleCompare, c),
        }
    }
}

fn execute(command: Command, common: &Common) -> Result<Vec<String>, CliError> {
    let start = Instant::now();
    let file = RunFile::load(&common.config)?;
    let cfg = file.config()?;
    let hash = config_hash(&cfg);
    let settings = Settings {
        seed_grid: common.seed_grid,
        profile: common.tolerance_profile,
    };
    let outcome = commands::run(command, &file, &settings)?;
    std::fs::create_dir_all(&common.out_dir)?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        files.push(t.write(&common.out_dir, command.name(), &hash)?);
    }
    let mut summary = String::new();
    for (k, v) in &outcome.summary {
        summary.push_str(&format!("{k}: {v}\n"));
    }
    for f in &outcome.failures {
        summary.push_str(&format!("failure: {f}\n"));
    }
    std::fs::write(common.out_dir.join("summary.txt"), &summary)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: command.name().into(),
        generator: openbath::scaling::METHOD_VERSION.into(),
        config_sha256: hash,
        config: serde_json::to_value(&file).unwrap_or_default(),
        tolerance_profile: common.tolerance_profile.name().into(),
        seed_grid: common.seed_grid,
        threads: rayon::current_num_threads(),
        files: files.clone(),
        summary: outcome.summary.clone(),
        failures: outcome.failures.clone(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(common.out_dir.join("manifest.json"), json)?;
    print!("{summary}");
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = cli.command.split();
    if common.threads > 0 {
        // Fails only if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global();
    }
    match execute(command, &common) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{} point(s) failed", failures.len());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("openbath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
