//! `driftfb`: numerical laboratory for obstacle problems with order-one
//! nonlocal operators and critical drift.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 config error,
//! 3 solver did not converge, 4 analysis/quadrature error.

use clap::{Parser, Subcommand};
use driftfb::config::{load_config, Scenario};
use driftfb::error::Error;
use driftfb::scenario::{resolve_out_dir, run_scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "driftfb",
    about = "Obstacle problems for order-one nonlocal operators with critical drift",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one obstacle problem and analyze its free boundary
    Solve(CommonArgs),
    /// Solve across a list of drifts and aggregate the fitted exponents
    SweepDrift(CommonArgs),
    /// Check the closed-form power-profile identities against the
    /// principal-value oracle
    VerifyIdentity(CommonArgs),
    /// Kernel functional checks: chi, evenness, ellipticity, normalization
    Chi(CommonArgs),
    /// Barrier sign reports and threshold scans on model domains
    Barrier(CommonArgs),
    /// Refinement study across h, h/2, ... plus truncation sensitivity
    Convergence(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration file (key = value lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $DRIFTFB_OUT, then ./driftfb-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots
    #[arg(long)]
    plots: bool,
    /// Worker threads for sweep members
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::UnsupportedDimension(_)
        | Error::GridMismatch(_)
        | Error::MMatrixViolation(_) => 2,
        Error::SolverDiverged(_) => 3,
        Error::Analysis(_) | Error::QuadraturePrecision { .. } => 4,
        Error::Io(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Solve(a) => (Scenario::Solve, a),
        Command::SweepDrift(a) => (Scenario::SweepDrift, a),
        Command::VerifyIdentity(a) => (Scenario::VerifyIdentity, a),
        Command::Chi(a) => (Scenario::Chi, a),
        Command::Barrier(a) => (Scenario::Barrier, a),
        Command::Convergence(a) => (Scenario::Convergence, a),
    };

    let mut cfg = match load_config(&args.config, Some(scenario)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("driftfb: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(w) = args.workers {
        cfg.workers = w.max(1);
    }
    let out_dir = resolve_out_dir(args.out.clone().or_else(|| cfg.out_dir.clone()));

    match run_scenario(&cfg, &out_dir, args.plots) {
        Ok(report) => {
            for v in &report.verdicts {
                println!(
                    "[{}] {}: {}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.detail
                );
            }
            println!(
                "{}: {} check(s), output in {}",
                report.scenario,
                report.verdicts.len(),
                out_dir.display()
            );
            if !report.solver_converged {
                eprintln!("driftfb: solver did not converge (report written)");
                ExitCode::from(3)
            } else if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("driftfb: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
