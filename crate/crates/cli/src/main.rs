//! `sfgsim`: run swapping, teleportation, Bell and efficiency experiments on
//! the truncated Fock-space model, or sweep any numeric parameter.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sfgsim::presets::{preset, presets};
use sfgsim::SimError;

use config::RawConfig;
use experiments::Run;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("line {line}: cannot parse `{text}`")]
    Syntax { line: usize, text: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("invalid value for `{key}`: {value}")]
    Value { key: String, value: String },
    #[error("unknown experiment `{0}` (expected swap-sfg, swap-lo, teleport, qfc, bell, keyrate, efficiency or sweep)")]
    UnknownExperiment(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("preset `{0}` carries no bench measurement")]
    NoBench(&'static str),
    #[error("cannot write {path}: {reason}")]
    Write { path: String, reason: String },
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Report,
}

#[derive(Parser, Debug)]
#[command(
    name = "sfgsim",
    version,
    about = "SFG entanglement-swapping, Bell-test and key-rate simulator"
)]
struct Cli {
    /// swap-sfg, swap-lo, teleport, qfc, bell, keyrate, efficiency or sweep.
    /// Overrides `experiment` in the config file.
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter bundle to start from (default paper-tableS1).
    #[arg(long)]
    preset: Option<String>,
    /// Override a key, e.g. `t1_h=0.5` or `sweep.steps=19`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed of the multi-start searches.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format (default: csv for sweeps, report otherwise).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Multiplier on both SFG efficiencies (same as `--set gain=G`).
    #[arg(long)]
    gain_factor: Option<f64>,
    /// Print the available presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for p in presets() {
            println!("{:<14} {}", p.name, p.description);
        }
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Model(e)) => {
            eprintln!("model error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for s in &cli.set {
        cfg.set(s)?;
    }
    if let Some(e) = &cli.experiment {
        cfg.put("experiment", e);
    }
    if let Some(p) = &cli.preset {
        cfg.put("preset", p);
    }
    if let Some(g) = cli.gain_factor {
        cfg.put("params.gain", &g.to_string());
    }
    let name = cfg.get("preset").unwrap_or("paper-tableS1").to_string();
    let bundle = preset(&name).ok_or(ConfigError::UnknownPreset(name))?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.number_or("seed", 1.0)? as u64,
    };
    let jobs = match cli.jobs {
        Some(j) => j,
        None => match cfg.number("jobs")? {
            Some(j) => j as usize,
            None => std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        },
    };
    let format = match (cli.format, cfg.get("format")) {
        (Some(f), _) => Some(f),
        (None, Some(v)) => Some(Format::from_str(v, true).map_err(|_| ConfigError::Value {
            key: "format".into(),
            value: v.into(),
        })?),
        (None, None) => None,
    };
    let out_path = cli
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from));
    let run = Run::resolve(cfg, bundle, jobs, seed)?;
    let output = run.execute()?;
    let text = match format.unwrap_or(if run.experiment == experiments::Experiment::Sweep {
        Format::Csv
    } else {
        Format::Report
    }) {
        Format::Csv => output.csv(),
        Format::Report => output.report(),
    };
    match out_path {
        Some(path) => std::fs::write(&path, text).map_err(|e| ConfigError::Write {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?,
        None => print!("{text}"),
    }
    Ok(())
}
