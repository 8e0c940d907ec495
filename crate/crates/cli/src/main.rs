//! `xfpt`: runs hitting-probability experiments from a JSON scenario file and
//! writes CSV tables.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::config::Config;

#[derive(Parser)]
#[command(name = "xfpt", version, about = "Extreme first-passage hitting probabilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario/config JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "XFPT_THREADS")]
    threads: Option<usize>,

    /// Print the effective config (defaults filled in) and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate F and F_k.
    Dist,
    /// Quadrature over the N ladder.
    Extreme,
    /// Large-N law and its values on the ladder.
    Asymptotic {
        /// Accept far targets within 2% of the closest distance.
        #[arg(long)]
        allow_close: bool,
    },
    /// Monte Carlo over the N ladder.
    Mc,
    /// Target distances and decay exponents.
    Bound,
    /// Model integral against its large-N asymptote.
    #[command(name = "verify-p1")]
    VerifyP1,
    /// Short-time fit against the closed-form catalog.
    Fit,
    /// Quadrature, asymptote and relative error side by side.
    Figure {
        #[arg(long, default_value_t = 1)]
        target: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dist => "dist",
            Command::Extreme => "extreme",
            Command::Asymptotic { .. } => "asymptotic",
            Command::Mc => "mc",
            Command::Bound => "bound",
            Command::VerifyP1 => "verify-p1",
            Command::Fit => "fit",
            Command::Figure { .. } => "figure",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let path = cli.config.context("--config <path> is required")?;
    let mut cfg = Config::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.dump_config {
        println!("{}", cfg.canonical());
        return Ok(());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let provenance = format!(
        "config_sha256={} seed={} command={} version={}",
        cfg.hash(),
        cfg.seed,
        cli.command.name(),
        env!("CARGO_PKG_VERSION")
    );
    let r = Run {
        cfg: &cfg,
        out: &cli.out,
        provenance,
    };
    let written = match cli.command {
        Command::Dist => r.dist(),
        Command::Extreme => r.extreme(),
        Command::Asymptotic { allow_close } => r.asymptotic(allow_close),
        Command::Mc => r.mc(),
        Command::Bound => r.bound(),
        Command::VerifyP1 => r.verify_p1(),
        Command::Fit => r.fit(),
        Command::Figure { target } => r.figure(target),
    }?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
