//! Command-line harness around the experiment drivers.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical breakdown,
//! 4 fit or eigensolver failure.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tcch::config::RunConfig;
use tcch::experiments;
use tcch::Error;

#[derive(Parser)]
#[command(name = "tcch", about = "Solitary-wave laboratory for a two-component shallow-water system", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the perturbation noise; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra key=value assignment applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a single wave and report shape and speed fidelity.
    Propagate(Common),
    /// Sweep train separations and report localized-energy excesses.
    Monotonicity(Common),
    /// Sweep perturbation sizes and fit the distance scaling exponent.
    Stability(Common),
    /// Certify positivity of the constrained quadratic form per speed.
    Coercivity(Common),
    /// Write the initial train profile without evolving.
    ProfileDump(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidGrid(_)
        | Error::InvalidTrain(_)
        | Error::NoSolitaryWave(_)
        | Error::WeightScaleTooSmall(_)
        | Error::MidpointOutsideGrid(_)
        | Error::Io(_) => 2,
        Error::Breakdown(_) | Error::CflViolation { .. } | Error::TailTruncation { .. } => 3,
        Error::FitFailed(_)
        | Error::DegenerateTrain { .. }
        | Error::EigenFailure(_)
        | Error::WeightAudit(_)
        | Error::NonPositiveWeight => 4,
    }
}

fn load_config(common: &Common) -> tcch::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for assignment in &common.overrides {
        cfg.apply(assignment)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&common.out)?;
    Ok(cfg)
}

fn run(cli: Cli) -> tcch::Result<()> {
    match &cli.command {
        Command::Propagate(common) => {
            let cfg = load_config(common)?;
            let rep = experiments::run_propagation(&cfg, &common.out)?;
            print!("{}", rep.to_text());
        }
        Command::Monotonicity(common) => {
            let cfg = load_config(common)?;
            let rep = experiments::run_monotonicity(&cfg, &common.out)?;
            print!("{}", rep.to_text());
        }
        Command::Stability(common) => {
            let cfg = load_config(common)?;
            let rep = experiments::run_stability(&cfg, &common.out)?;
            print!("{}", rep.to_text());
        }
        Command::Coercivity(common) => {
            let cfg = load_config(common)?;
            let reps = experiments::run_coercivity(&cfg, &common.out)?;
            for r in &reps {
                println!("c={} lambda_min={:.6e}", r.c, r.lambda_min);
            }
        }
        Command::ProfileDump(common) => {
            let cfg = load_config(common)?;
            experiments::run_profile_dump(&cfg, &common.out)?;
            println!("profile written to {}", common.out.join("profile.txt").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
