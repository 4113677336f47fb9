use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aqmsim::cli::{cmd_compare, cmd_gen_dataset, cmd_run, cmd_train};
use aqmsim::config::{load_scenario, load_train_spec, parse_override, ControllerKind, Preset};

#[derive(Parser)]
#[command(
    name = "aqmsim",
    about = "Deterministic discrete-event simulator for bottleneck-queue AQM controllers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file with flat `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Canned scenario shape: desk or paper.
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run seed; wins over any `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its per-second CSV and summary.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run several controllers on the identical scenario and seed.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated controllers to compare.
        #[arg(long, default_value = "red,blue,pi,sam")]
        controllers: String,
        /// Give each controller its own seed (base + index) instead of
        /// the shared default.
        #[arg(long)]
        vary_seeds: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train the pattern classifier and write the model file.
    Train {
        /// Training keys (train.*, policy.*, seed); repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Model file to write.
        #[arg(long, default_value = "sam-model.svm")]
        out: PathBuf,
    },
    /// Generate a labeled utilization-pattern dataset as CSV.
    GenDataset {
        /// Number of patterns.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Policy keys (policy.*, seed); repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dataset file to write.
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },
}

fn collect_overrides(set: &[String], seed: Option<u64>) -> Result<Vec<(String, String)>, String> {
    let mut overrides = Vec::with_capacity(set.len() + 1);
    for s in set {
        overrides.push(parse_override(s).map_err(|e| e.to_string())?);
    }
    if let Some(seed) = seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    Ok(overrides)
}

fn parse_preset(name: &Option<String>) -> Result<Option<Preset>, String> {
    match name {
        None => Ok(None),
        Some(s) => Preset::parse(s)
            .map(Some)
            .ok_or_else(|| format!("unknown preset `{s}` (expected desk or paper)")),
    }
}

fn parse_controllers(list: &str) -> Result<Vec<ControllerKind>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            ControllerKind::parse(s).ok_or_else(|| {
                format!("unknown controller `{s}` (expected droptail, red, blue, pi or sam)")
            })
        })
        .collect()
}

fn real_main() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out } => {
            let overrides = collect_overrides(&scenario.set, scenario.seed)?;
            let preset = parse_preset(&scenario.preset)?;
            let cfg = load_scenario(scenario.config.as_deref(), preset, &overrides)
                .map_err(|e| e.to_string())?;
            cmd_run(&cfg, &out).map_err(|e| e.to_string())?;
        }
        Command::Compare {
            scenario,
            controllers,
            vary_seeds,
            out,
        } => {
            let overrides = collect_overrides(&scenario.set, scenario.seed)?;
            let preset = parse_preset(&scenario.preset)?;
            let cfg = load_scenario(scenario.config.as_deref(), preset, &overrides)
                .map_err(|e| e.to_string())?;
            let list = parse_controllers(&controllers)?;
            cmd_compare(&cfg, &list, vary_seeds, &out).map_err(|e| e.to_string())?;
        }
        Command::Train { set, seed, out } => {
            let overrides = collect_overrides(&set, seed)?;
            let spec = load_train_spec(&overrides).map_err(|e| e.to_string())?;
            cmd_train(&spec, &out).map_err(|e| e.to_string())?;
        }
        Command::GenDataset { n, set, seed, out } => {
            let overrides = collect_overrides(&set, seed)?;
            let spec = load_train_spec(&overrides).map_err(|e| e.to_string())?;
            cmd_gen_dataset(n, &spec, &out).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
