use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use widthlab_cli::{export_fixture, parse_suites, run_all, CliError, Fixture, RunConfig, OUT_ENV};

/// Reproducible verification runs for widthlab.
#[derive(Parser)]
#[command(name = "widthlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write JSON reports and CSV tables.
    Run {
        /// `all` or a comma-separated list: widths, comparison, brendle,
        /// varifold, stability, isoperimetric, sweepout-1d.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = OUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tolerance_scale: Option<f64>,
        /// Random samples per dimension pair in the brendle suite.
        #[arg(long)]
        samples: Option<usize>,
        /// Run suites on separate threads.
        #[arg(long)]
        parallel: bool,
    },
    /// Write a fixture file.
    Export {
        /// equatorial-disk, offcenter-disk, doubled-disk, critical-catenoid
        /// or geodesic-disk-hyperbolic.
        fixture: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_config(cmd: &Command) -> Result<RunConfig, CliError> {
    let Command::Run { suite, seed, config, out, resolution, gamma, tolerance_scale, samples, parallel } = cmd else {
        unreachable!()
    };
    let mut cfg = match config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = suite {
        cfg.suites = parse_suites(s)?;
    }
    if let Some(v) = seed {
        cfg.seed = *v;
    }
    if let Some(v) = out {
        cfg.out = v.clone();
    }
    if resolution.is_some() {
        cfg.resolution = *resolution;
    }
    if let Some(v) = gamma {
        cfg.gamma = *v;
    }
    if let Some(v) = tolerance_scale {
        cfg.tolerance_scale = *v;
    }
    if let Some(v) = samples {
        cfg.samples = *v;
    }
    cfg.parallel |= *parallel;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command) -> Result<bool, CliError> {
    match &cmd {
        Command::Run { .. } => {
            let cfg = build_config(&cmd)?;
            let mut all_pass = true;
            for report in run_all(&cfg) {
                report.write(&cfg.out)?;
                let failed = report.failures().count();
                let status = if report.pass { "PASS" } else { "FAIL" };
                println!("{status} {}: {} checks, {failed} failed", report.suite, report.checks.len());
                for c in report.failures() {
                    eprintln!("  {}: {c}", report.suite);
                }
                all_pass &= report.pass;
            }
            Ok(all_pass)
        }
        Command::Export { fixture, resolution, out } => {
            let f: Fixture = fixture.parse()?;
            export_fixture(f, *resolution, out)?;
            println!("wrote {} to {}", f.name(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
