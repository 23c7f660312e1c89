use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use macpir_core::harness::{run, Command, ConfigLayer, Grid};

/// Lattice-based private information retrieval over fading multiple-access
/// channels.
#[derive(Parser, Debug)]
#[command(name = "macpir", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Monte-Carlo rate table: capacity, lattice and compute-and-forward rates.
    Rates(Flags),
    /// Lattice rate against compute-and-forward over a gain grid.
    Heatmap(Flags),
    /// End-to-end retrievals with symbol error rates and traces.
    Simulate(Flags),
    /// Privacy audits; exits with status 2 when an audit fails.
    Audit(Flags),
    /// The two-database leakage example.
    LeakDemo(Flags),
}

/// Every flag mirrors a key of the TOML config file and overrides it.
#[derive(Args, Debug, Clone)]
struct Flags {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// One value or a comma-separated grid.
    #[arg(long)]
    n_dbs: Option<Grid<usize>>,
    #[arg(long)]
    n_msgs: Option<usize>,
    /// One value or a comma-separated grid.
    #[arg(long)]
    power: Option<Grid<f64>>,
    #[arg(long)]
    prime: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    /// exact, diff or random.
    #[arg(long)]
    partition: Option<String>,
    /// pir, spir-cr or spir-nokey.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    a_max: Option<u32>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Channel uses per retrieval.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    noise: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    broken: Option<bool>,
    /// JSONL trace destination (simulate).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    ratio_min: Option<f64>,
    #[arg(long)]
    ratio_max: Option<f64>,
    #[arg(long)]
    h2_min: Option<f64>,
    #[arg(long)]
    h2_max: Option<f64>,
    /// Points per heatmap axis.
    #[arg(long)]
    grid: Option<usize>,
}

impl Flags {
    fn layer(self) -> (Option<PathBuf>, ConfigLayer) {
        let layer = ConfigLayer {
            seed: self.seed,
            trials: self.trials,
            n_dbs: self.n_dbs,
            n_msgs: self.n_msgs,
            power: self.power,
            prime: self.prime,
            dim: self.dim,
            partition: self.partition,
            scheme: self.scheme,
            a_max: self.a_max,
            out: self.out,
            iterations: self.iterations,
            noise: self.noise,
            broken: self.broken,
            trace: self.trace,
            ratio_min: self.ratio_min,
            ratio_max: self.ratio_max,
            h2_min: self.h2_min,
            h2_max: self.h2_max,
            grid: self.grid,
        };
        (self.config, layer)
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (command, flags) = match cli.command {
        Cmd::Rates(f) => (Command::Rates, f),
        Cmd::Heatmap(f) => (Command::Heatmap, f),
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Audit(f) => (Command::Audit, f),
        Cmd::LeakDemo(f) => (Command::LeakDemo, f),
    };
    let (config, flag_layer) = flags.layer();
    let base = match config {
        Some(path) => ConfigLayer::load(&path).with_context(|| format!("reading {}", path.display()))?,
        None => ConfigLayer::default(),
    };
    let cfg = base.overlay(flag_layer).resolve(command)?;
    let report = run(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &report.csv).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(report.csv.as_bytes())?,
    }
    if let (Some(path), Some(trace)) = (&cfg.trace, &report.trace_jsonl) {
        std::fs::write(path, trace).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("audit failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
