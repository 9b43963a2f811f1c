use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rfde::cli::{run, Command, RunConfig, SystemRef, EXIT_ERROR};
use rfde::Error;

/// Simulate and certify the registered delay systems.
///
/// Commands: simulate, check, falsify, reproduce, envelope. Systems:
/// example-4.8, example-5.2, example-5.4, scalar-contraction. Flags override
/// the configuration file. Exit status 0 when every check passes, 1 when one
/// fails, 2 on configuration or I/O errors.
#[derive(Debug, Parser)]
#[command(name = "rfde", version)]
struct Args {
    /// Command to run; overrides `command` in the configuration.
    command: Option<String>,
    /// Registered system; overrides `system.name` in the configuration.
    system: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `rfde-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute residual tolerance of the sampled checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Samples per sampled check.
    #[arg(long)]
    samples: Option<usize>,
    /// Integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Simulation horizon.
    #[arg(long)]
    horizon: Option<f64>,
}

fn config(args: &Args) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = &args.command {
        cfg.command = Some(c.parse::<Command>()?);
    }
    if let Some(name) = &args.system {
        match &mut cfg.system {
            Some(s) if s.name == *name => {}
            _ => {
                cfg.system = Some(SystemRef {
                    name: name.clone(),
                    params: Default::default(),
                })
            }
        }
    }
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.out = args.out.clone().or(cfg.out);
    cfg.tolerance = args.tolerance.or(cfg.tolerance);
    cfg.samples = args.samples.or(cfg.samples);
    cfg.step = args.step.or(cfg.step);
    cfg.horizon = args.horizon.or(cfg.horizon);
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = config(&args).and_then(|cfg| run(&cfg, None));
    match result {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            println!(
                "{} {}: {} ({})",
                summary.command,
                summary.system,
                if summary.pass { "pass" } else { "fail" },
                summary.out_dir.display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
