use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use appell_cli::commands::{cmd_gen, cmd_symbol, cmd_verify};
use appell_cli::ExperimentConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "appell", version, about = "Appell systems, chaos expansions and operator symbols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the P-kernel tables and reciprocal Laplace series.
    Gen(Common),
    /// Run the numerical checks and write report.json.
    Verify(Common),
    /// Evaluate an operator symbol on a grid.
    Symbol(Common),
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("APPELL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("APPELL_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("appell-out"))
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let (Command::Gen(common) | Command::Verify(common) | Command::Symbol(common)) = &cli.command;
    let cfg = ExperimentConfig::load(&common.config)?;
    let out = out_dir(common, &cfg);
    match &cli.command {
        Command::Gen(_) => cmd_gen(&cfg, &out).map(|_| true),
        Command::Verify(_) => cmd_verify(&cfg, &out),
        Command::Symbol(_) => {
            let base = common.config.parent().unwrap_or(Path::new("."));
            cmd_symbol(&cfg, base, &out).map(|_| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("appell: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("appell: {e:#}");
            ExitCode::from(2)
        }
    }
}
