//! The `olc` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::benchmarks::{best_dac, best_fixed_input, best_steady_state};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::{
    generate_costs, generate_disturbances, run_experiment, run_rng, run_seed, step_size_for,
    ExperimentConfig, Setup,
};
use crate::linalg::spectral_norm;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "olc", version, about = "Online control experiments on linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every seed and write per-run and aggregate CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Horizon `T`.
        #[arg(long)]
        horizon: Option<usize>,
        /// Run seeds one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Solve only the offline benchmarks and print their values.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Print the stability certificate and the derived constants.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    cli_main_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn cli_main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn load(path: &PathBuf) -> std::result::Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(Failure::Config)
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let runtime = Failure::Runtime;
    match command {
        Command::Run {
            config,
            out: out_dir,
            seed,
            runs,
            horizon,
            sequential,
        } => {
            let mut cfg = load(&config)?;
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = runs {
                cfg.n_runs = r;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            cfg.validate().map_err(Failure::Config)?;
            let outcome = run_experiment(&cfg, execution(sequential)).map_err(runtime)?;
            for (rec, report) in &outcome.runs {
                let t = report.olc.cum_cost.len() - 1;
                let _ = writeln!(
                    out,
                    "run {:>3} seed {:>6}: R_u olc {:>12.4} dac {:>12.4} | R_M olc {:>12.4} dac {:>12.4}",
                    rec.index,
                    rec.seed,
                    report.olc.vs_u[t],
                    report.dac.vs_u[t],
                    report.olc.vs_m[t],
                    report.dac.vs_m[t]
                );
            }
            for (k, e) in &outcome.failures {
                let _ = writeln!(out, "run {k:>3} failed: {e}");
            }
            let _ = writeln!(
                out,
                "wrote {} run(s) to {}",
                outcome.runs.len(),
                cfg.output_dir.display()
            );
            Ok(if outcome.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            })
        }
        Command::Bench { config, sequential } => {
            let cfg = load(&config)?;
            let setup = cfg.validate().map_err(Failure::Config)?;
            let rows = execution(sequential).map_indexed(cfg.n_runs, |k| bench_row(&cfg, &setup, k));
            let _ = writeln!(out, "run,seed,bench_u,bench_m,bench_x");
            for row in rows {
                let _ = writeln!(out, "{}", row.map_err(runtime)?);
            }
            Ok(EXIT_OK)
        }
        Command::Check { config } => {
            let cfg = load(&config)?;
            let setup = cfg.validate().map_err(Failure::Config)?;
            let costs = generate_costs(&cfg, &mut run_rng(&cfg, 0)).map_err(runtime)?;
            let (smooth, eta) = step_size_for(&cfg, &setup, &costs).map_err(runtime)?;
            let i_minus_a = spectral_norm(setup.sys.i_minus_a()).map_err(runtime)?;
            let c = &setup.cert;
            let lines = [
                format!("rho_hat    {:.6}", c.radius_estimate),
                format!("gamma      {:.6}", c.gamma),
                format!("kappa      {:.6}", c.kappa),
                format!("|I - A|    {:.6}", i_minus_a),
                format!("D          {:.6}", setup.bound.radius),
                format!("c_bound    {:.6}", setup.c_bound),
                format!("L          {:.6}  (run 0 costs)", smooth.l),
                format!("eta        {:.6e}", eta),
                format!("dac_radius {:.6}", setup.dac_radius),
                format!("dac_eta    {:.6e}", setup.dac_eta),
            ];
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn bench_row(cfg: &ExperimentConfig, setup: &Setup, k: usize) -> Result<String> {
    let mut rng = run_rng(cfg, k);
    let costs = generate_costs(cfg, &mut rng)?;
    let ws = generate_disturbances(cfg, &mut rng);
    let sys = &setup.sys;
    let u = best_fixed_input(sys, &setup.x1, &ws, &costs, &cfg.u_box, &cfg.solver)?;
    let m = best_dac(
        sys,
        &setup.x1,
        &ws,
        &costs,
        cfg.dac.h_mem,
        setup.dac_radius,
        setup.cert.gamma,
        &cfg.solver,
    )?;
    let x = if cfg.disturbances_on {
        String::new()
    } else {
        format!("{:.11e}", best_steady_state(&costs, sys, &cfg.u_box, &cfg.solver)?.value)
    };
    Ok(format!(
        "{k},{},{:.11e},{:.11e},{x}",
        run_seed(cfg, k),
        u.value,
        m.value
    ))
}
