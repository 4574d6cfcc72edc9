//! `simulate`: runs the optomechanics experiments from a config file.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optomech::presets::Mode;

mod config;
mod runner;

use config::{ConfigError, Overrides, RunConfig};
use runner::{RunError, Runner};

#[derive(Parser)]
#[command(name = "simulate", version, about = "Driven optomechanics simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every mode selected in the config.
    Run(Common),
    /// Check a config and print dimensions and cost estimates.
    Validate(Common),
    /// Closed-form evolution without drive.
    Undriven(Common),
    /// Drive handled through the β coefficients.
    DrivenAnalytic(Common),
    /// Brute-force integration of the Schrödinger equation.
    DrivenNumeric(Common),
    /// Field and mirror Wigner snapshots.
    Wigner(Common),
    /// Analytic against numeric, raw and filtered.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set, overridden by keys in the config.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write moving-average filtered series.
    #[arg(long)]
    filter: bool,
    /// Field and mirror cutoffs, e.g. `30,335`.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<(usize, usize)>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (f, m) = s.split_once(',').ok_or("expected F,M")?;
    let f = f.trim().parse().map_err(|_| format!("bad field dim {f:?}"))?;
    let m = m.trim().parse().map_err(|_| format!("bad mirror dim {m:?}"))?;
    Ok((f, m))
}

fn load(c: &Common, modes: Option<Vec<Mode>>) -> Result<RunConfig, RunError> {
    let text = match &c.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            field: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None if c.preset.is_some() => String::new(),
        None => {
            return Err(ConfigError { line: None, field: None, message: "either --config or --preset is required".into() }.into())
        }
    };
    let ov = Overrides { preset: c.preset.clone(), output_dir: c.out.clone(), filter: c.filter, dims: c.dims, modes };
    Ok(RunConfig::from_text(&text, &ov)?)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let (common, mode) = match &cli.command {
        Command::Validate(c) => {
            print!("{}", runner::validate_report(&load(c, None)?)?);
            return Ok(());
        }
        Command::Run(c) => (c, None),
        Command::Undriven(c) => (c, Some(Mode::Undriven)),
        Command::DrivenAnalytic(c) => (c, Some(Mode::DrivenAnalytic)),
        Command::DrivenNumeric(c) => (c, Some(Mode::DrivenNumeric)),
        Command::Wigner(c) => (c, Some(Mode::Wigner)),
        Command::Compare(c) => (c, Some(Mode::Compare)),
    };
    let cfg = load(common, mode.map(|m| vec![m]))?;
    Runner::new(&cfg).run()?;
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
