use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use gofair_core::experiment::{emit_csv, run_experiment, ExperimentConfig};

/// Run a battery-depletion experiment sweep and write the results as CSV.
///
/// Settings are applied in order: the preset named by `experiment`, then the
/// config file, then command-line flags.
#[derive(Debug, Parser)]
#[command(name = "gofair", version)]
struct Args {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// var_tbb_strength, attacker_ratio_5, attacker_ratio_10, var_r_strength or custom
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seeds: Option<u32>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    horizon_days: Option<u64>,
    /// Extra key=value overrides, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config as JSON and exit
    #[arg(long)]
    show_config: bool,
}

fn config_text(args: &Args) -> Result<String> {
    let mut text = match &args.config {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    text.push('\n');
    if let Some(e) = &args.experiment {
        text.push_str(&format!("experiment = {e}\n"));
    }
    if let Some(n) = args.seeds {
        text.push_str(&format!("seeds = {n}\n"));
    }
    if let Some(n) = args.seed_base {
        text.push_str(&format!("seed_base = {n}\n"));
    }
    if let Some(n) = args.horizon_days {
        text.push_str(&format!("horizon_days = {n}\n"));
    }
    for kv in &args.overrides {
        text.push_str(kv);
        text.push('\n');
    }
    Ok(text)
}

fn main_inner(args: Args) -> Result<()> {
    let cfg = ExperimentConfig::parse(&config_text(&args)?).context("invalid config")?;
    if args.show_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let rows = run_experiment(&cfg).context("running experiment")?;
    let csv = emit_csv(&rows);
    match &args.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&csv)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gofair: {e:#}");
            ExitCode::from(2)
        }
    }
}
