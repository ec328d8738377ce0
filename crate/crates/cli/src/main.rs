//! Command-line front end: simulate, thin, estimate, model spectra, fit and
//! export plot tables.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use failure::Failure;

#[derive(Parser)]
#[command(name = "polyspectra", version, about = "Higher-order spectra of blinking single-photon emitters")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Raise log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only print errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    input: Option<String>,
    #[arg(short, long)]
    output: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Any configuration key, as KEY=VALUE (repeatable).
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a click record of the blinking emitter.
    Simulate(Common),
    /// Keep each click independently with probability alpha.
    Thin(Common),
    /// Estimate spectra of a click record.
    Estimate(Common),
    /// Evaluate model spectra on an estimator grid.
    ModelSpectra(Common),
    /// Fit the emitter model to estimated spectra.
    Fit(Common),
    /// Estimate and fit independent subsets for error bars.
    SubsetErrors(Common),
    /// Write CSV tables for plotting.
    PlotExport(Common),
}

fn resolve(name: &str, defaults: &[(&str, &str)], common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::new(name, defaults);
    if let Some(p) = &common.config {
        cfg.merge_file(p)?;
    }
    for kv in &common.set {
        cfg.merge_assignment(kv)?;
    }
    if let Some(v) = &common.input {
        cfg.set("input", v)?;
    }
    if let Some(v) = &common.output {
        cfg.set("output", v)?;
    }
    if let Some(v) = common.seed {
        cfg.set("seed", &v.to_string())?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot set thread count: {e}")))?;
    }
    let (name, common, defaults, handler): (&str, &Common, Vec<(&str, &str)>, commands::Handler) = match &cli.command {
        Command::Simulate(c) => ("simulate", c, commands::SIMULATE_KEYS.to_vec(), commands::simulate),
        Command::Thin(c) => ("thin", c, commands::THIN_KEYS.to_vec(), commands::thin),
        Command::Estimate(c) => ("estimate", c, commands::estimate_keys(), commands::estimate),
        Command::ModelSpectra(c) => ("model-spectra", c, commands::model_keys(), commands::model_spectra),
        Command::Fit(c) => ("fit", c, commands::fit_keys(), commands::fit),
        Command::SubsetErrors(c) => ("subset-errors", c, commands::subset_keys(), commands::subset_errors),
        Command::PlotExport(c) => ("plot-export", c, commands::PLOT_KEYS.to_vec(), commands::plot_export),
    };
    let cfg = resolve(name, &defaults, common)?;
    handler(&cfg, common.force)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
