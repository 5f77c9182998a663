//! `kou-exit`: closed-form exit functionals of the Kou process from the command line.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "kou-exit",
    version,
    about = "Two-sided exit functionals of the Kou jump diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write CSV here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the simulation seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of simulated paths
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Override the diffusion substep
    #[arg(long, global = true)]
    substep: Option<f64>,

    /// Evaluation grid `lo:hi:steps`
    #[arg(long, global = true)]
    grid: Option<Grid>,

    /// Include the Monte Carlo checks in `verify`
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// The four roots of k(r) = s
    Roots,
    /// Killed supremum/infimum densities
    Extrema,
    /// One-sided passage transforms split into creep and jump
    Passage,
    /// Upper, lower and total exit transforms over x for each width T
    Exit,
    /// Upper exit split into creep and jump
    Joint,
    /// Density of the killed position before exit
    Density,
    /// Monte Carlo estimates with standard errors
    Simulate,
    /// Convergence of the prelimit cumulant
    Prelimit,
    /// Run the invariant checks; exit code 1 on any failure
    Verify,
}

/// `lo:hi:steps`, `steps` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err(format!("expected lo:hi:steps, got `{s}`"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let steps: usize = steps.trim().parse().map_err(|e| format!("`{steps}`: {e}"))?;
        if !(lo.is_finite() && hi.is_finite()) || steps == 0 || (steps > 1 && hi <= lo) {
            return Err(format!("invalid grid `{s}`"));
        }
        Ok(Grid { lo, hi, steps })
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.simulation.n_paths = paths;
    }
    if let Some(substep) = cli.substep {
        cfg.simulation.substep = substep;
    }
    cfg.simulation.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let table = match cli.command {
        Command::Roots => commands::roots(&cfg)?,
        Command::Extrema => commands::extrema(&cfg, cli.grid)?,
        Command::Passage => commands::passage(&cfg, cli.grid)?,
        Command::Exit => commands::exit(&cfg, cli.grid)?,
        Command::Joint => commands::joint(&cfg, cli.grid)?,
        Command::Density => commands::density(&cfg, cli.grid)?,
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Prelimit => commands::prelimit(&cfg, cli.grid)?,
        Command::Verify => {
            let (table, failures) = commands::verify(&cfg, cli.full);
            table.emit(out.as_deref())?;
            return if failures == 0 {
                Ok(())
            } else {
                Err(CliError::VerifyFailed(failures))
            };
        }
    };
    table.emit(out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:2:5".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!("1:1:1".parse::<Grid>().unwrap().points(), vec![1.0]);
        for bad in ["0:1", "1:0:5", "0:1:0", "a:1:3"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
