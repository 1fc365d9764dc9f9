use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use robust_risk::cli::{
    cmd_measure, cmd_select, cmd_simulate, ingest, write_dataset, MarketDataset, Report, RunConfig, UsageError,
};
use robust_risk::Error;

#[derive(Parser)]
#[command(version, about = "Robust risk measurement and risk-forecast backtesting")]
struct Cli {
    /// Flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rolling robust capital against HS benchmarks
    Measure(DataArgs),
    /// Rolling model selection by realized cost and scoring loss
    Select(DataArgs),
    /// Write a synthetic dataset (prices.csv, yield_g.csv, yield_l.csv)
    Simulate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        days: Option<usize>,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    prices: PathBuf,
    #[arg(long = "yield-g")]
    yield_g: PathBuf,
    #[arg(long = "yield-l")]
    yield_l: PathBuf,
    /// Report costs and losses multiplied by 1000
    #[arg(long)]
    scale1000: bool,
    /// Days per year when converting annual yields
    #[arg(long)]
    daycount: Option<f64>,
    /// Compound annual yields instead of dividing by the day count
    #[arg(long)]
    compound: bool,
    #[arg(long)]
    window: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k, v)?;
    }
    if let Command::Measure(a) | Command::Select(a) = &cli.command {
        if let Some(w) = a.window {
            cfg.window = w;
        }
        if let Some(d) = a.daycount {
            cfg.daycount = d;
        }
        cfg.scale1000 |= a.scale1000;
        cfg.compound |= a.compound;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(a: &DataArgs) -> Result<MarketDataset> {
    let ds = ingest(&a.prices, &a.yield_g, &a.yield_l).context("ingesting market data")?;
    info!("loaded {} prices from {} to {}", ds.prices.len(), ds.dates[0], ds.dates[ds.dates.len() - 1]);
    Ok(ds)
}

fn emit(report: &Report, out: &Path) -> Result<()> {
    print!("{}", report.to_text());
    for p in report.write(out)? {
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Measure(a) => emit(&cmd_measure(&load_data(a)?, &cfg)?, &cli.out),
        Command::Select(a) => emit(&cmd_select(&load_data(a)?, &cfg)?, &cli.out),
        Command::Simulate { seed, days } => {
            if let Some(d) = days {
                cfg.sim.days = *d;
            }
            let ds = cmd_simulate(*seed, &cfg.sim)?;
            write_dataset(&cli.out, &ds)?;
            println!("wrote {} days to {}", ds.dates.len(), cli.out.display());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_) | Error::Infeasible(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
