//! Command-line front end for the mcflab experiments.
//!
//! Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mcflab::harness::{run_experiment, run_sweep, ExperimentConfig, ExperimentKind, ExperimentSummary};
use mcflab::par::Execution;

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Mean curvature flow experiments for cone-asymptotic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by the config (self-similarity by default).
    Simulate(Common),
    /// Solve and certify expanders, with stability forms.
    Expander(Common),
    /// Gaussian area monotonicity along a flow.
    Entropy(Common),
    /// Expander flow against a perturbed copy.
    Stability(Common),
    /// Cone flow compared with its expander under blow-down.
    Blowdown(Common),
    /// Cartesian sweep over slopes, seeds and resolutions.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config in TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid spacing h.
    #[arg(long, allow_negative_numbers = true)]
    resolution: Option<f64>,
    /// Mirror the run log to stderr.
    #[arg(long)]
    verbose: bool,
}

impl Common {
    fn build(&self, kind: Option<ExperimentKind>) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
                if let Some(k) = kind {
                    if cfg.kind != k {
                        bail!("config kind `{}` does not match this subcommand (`{}`)", cfg.kind.as_str(), k.as_str());
                    }
                }
                cfg
            }
            None => ExperimentConfig::new(kind.unwrap_or(ExperimentKind::SelfSimilarity)),
        };
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.resolution {
            cfg.grid.h = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(s: &ExperimentSummary) {
    println!("{} ({}) -> {}", s.name, s.kind.as_str(), s.out_dir.display());
    for v in &s.verdicts {
        println!("  {:<5} {:<28} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (common, kind) = match &cli.command {
        Command::Simulate(c) => (c, None),
        Command::Expander(c) => (c, Some(ExperimentKind::ExpanderAtlas)),
        Command::Entropy(c) => (c, Some(ExperimentKind::EntropyMonotonicity)),
        Command::Stability(c) => (c, Some(ExperimentKind::ExpanderStability)),
        Command::Blowdown(c) => (c, Some(ExperimentKind::SelfSimilarity)),
        Command::Sweep(c) => {
            let cfg = c.build(None)?;
            let runs = run_sweep(&cfg, Execution::Parallel, c.verbose)?;
            runs.iter().for_each(report);
            println!("sweep table: {}", cfg.out_dir.join("sweep.csv").display());
            return Ok(runs.iter().all(ExperimentSummary::passed));
        }
    };
    let cfg = common.build(kind)?;
    let summary = run_experiment(&cfg, common.verbose)?;
    report(&summary);
    Ok(summary.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
