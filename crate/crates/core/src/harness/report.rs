use std::fmt::Write as _;
use std::path::Path;

use crate::benchmarks::{dac_inputs, Optimizer};
use crate::costs::CostOracle;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::config::{ExperimentConfig, Setup};
use crate::harness::run::{run_single, RunRecord};

/// Cumulative cost and regret curves of one controller, indexed by `t − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretCurves {
    pub cum_cost: Vec<f64>,
    /// Against the best fixed input.
    pub vs_u: Vec<f64>,
    /// Against the best disturbance-action policy.
    pub vs_m: Vec<f64>,
    /// Against the best steady state; disturbance-free runs only.
    pub vs_x: Option<Vec<f64>>,
}

impl RegretCurves {
    fn new(costs: &[f64], bench_u: &[f64], bench_m: &[f64], bench_x: Option<&[f64]>) -> Self {
        let cum_cost = prefix_sums(costs.iter().copied());
        let diff = |b: &[f64]| cum_cost.iter().zip(b).map(|(c, b)| c - b).collect::<Vec<_>>();
        RegretCurves {
            vs_u: diff(bench_u),
            vs_m: diff(bench_m),
            vs_x: bench_x.map(diff),
            cum_cost,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub olc: RegretCurves,
    pub dac: RegretCurves,
    /// Prefix costs of the benchmark optimizers' own trajectories.
    pub bench_u_prefix: Vec<f64>,
    pub bench_m_prefix: Vec<f64>,
    pub bench_x_prefix: Option<Vec<f64>>,
}

fn prefix_sums(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Regret curves against each benchmark's full-horizon optimizer, using its
/// prefix costs (not a re-optimization per prefix).
pub fn compute_regret(record: &RunRecord, setup: &Setup) -> Result<RegretReport> {
    let sys = &setup.sys;
    let costs = &record.costs;
    let prefix_of = |states: &[crate::linalg::Vector]| {
        prefix_sums(states.iter().zip(costs).map(|(x, f)| f.value(x)))
    };

    let Optimizer::Input(u_star) = &record.bench_u.optimizer else {
        return Err(Error::InvalidState("fixed-input benchmark has no input optimizer".into()));
    };
    let u_seq = vec![u_star.clone(); record.disturbances.len()];
    let bench_u_prefix = prefix_of(&sys.simulate(&setup.x1, &u_seq, &record.disturbances)?);

    let Optimizer::Blocks(blocks) = &record.bench_m.optimizer else {
        return Err(Error::InvalidState("DAC benchmark has no block optimizer".into()));
    };
    let m_seq = dac_inputs(blocks, &record.disturbances, sys.input_dim());
    let bench_m_prefix = prefix_of(&sys.simulate(&setup.x1, &m_seq, &record.disturbances)?);

    let bench_x_prefix = match &record.bench_x {
        None => None,
        Some(b) => {
            let Optimizer::SteadyState { state, .. } = &b.optimizer else {
                return Err(Error::InvalidState("steady-state benchmark has no state optimizer".into()));
            };
            Some(prefix_sums(costs.iter().map(|f| f.value(state))))
        }
    };
    let x_ref = bench_x_prefix.as_deref();
    Ok(RegretReport {
        olc: RegretCurves::new(&record.olc.costs, &bench_u_prefix, &bench_m_prefix, x_ref),
        dac: RegretCurves::new(&record.dac.costs, &bench_u_prefix, &bench_m_prefix, x_ref),
        bench_u_prefix,
        bench_m_prefix,
        bench_x_prefix,
    })
}

/// Completed runs and per-run failures, both in run order.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub runs: Vec<(RunRecord, RegretReport)>,
    pub failures: Vec<(usize, Error)>,
}

/// Runs every seed of the experiment. Runs are independent and may execute
/// concurrently; the result does not depend on scheduling.
pub fn run_all(cfg: &ExperimentConfig, setup: &Setup, exec: Execution) -> ExperimentOutcome {
    let results = exec.map_indexed(cfg.n_runs, |k| {
        let rec = run_single(cfg, setup, k)?;
        let report = compute_regret(&rec, setup)?;
        Ok::<_, Error>((rec, report))
    });
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => runs.push(v),
            Err(e) => failures.push((k, e)),
        }
    }
    ExperimentOutcome { runs, failures }
}

/// Validates the config, runs everything and writes the CSV files into
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutcome> {
    let setup = cfg.validate()?;
    let outcome = run_all(cfg, &setup, exec);
    write_outputs(cfg, &outcome, &cfg.output_dir)?;
    Ok(outcome)
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn regret_columns(disturbance_free: bool) -> Vec<&'static str> {
    let mut cols = vec!["regret_olc_u", "regret_dac_u", "regret_olc_m", "regret_dac_m"];
    if disturbance_free {
        cols.extend(["regret_olc_x", "regret_dac_x"]);
    }
    cols
}

fn regret_row(report: &RegretReport, t: usize) -> Vec<f64> {
    let mut row = vec![
        report.olc.vs_u[t],
        report.dac.vs_u[t],
        report.olc.vs_m[t],
        report.dac.vs_m[t],
    ];
    if let (Some(o), Some(d)) = (&report.olc.vs_x, &report.dac.vs_x) {
        row.extend([o[t], d[t]]);
    }
    row
}

/// Body of `run_<k>.csv`.
pub fn run_csv(record: &RunRecord, report: &RegretReport) -> String {
    let disturbance_free = report.olc.vs_x.is_some();
    let mut out = String::from("t,cost_olc,cost_dac,cum_olc,cum_dac");
    for c in regret_columns(disturbance_free) {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for t in 0..record.olc.costs.len() {
        let mut fields = vec![
            (t + 1).to_string(),
            num(record.olc.costs[t]),
            num(record.dac.costs[t]),
            num(report.olc.cum_cost[t]),
            num(report.dac.cum_cost[t]),
        ];
        fields.extend(regret_row(report, t).into_iter().map(num));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Per-`t` mean and sample standard deviation of every regret column.
pub fn summary_csv(outcome: &ExperimentOutcome, disturbance_free: bool) -> String {
    let cols = regret_columns(disturbance_free);
    let mut out = String::from("t,runs");
    for c in &cols {
        let _ = write!(out, ",mean_{c},std_{c}");
    }
    out.push('\n');
    let horizon = outcome.runs.first().map_or(0, |(_, r)| r.olc.cum_cost.len());
    let n = outcome.runs.len();
    for t in 0..horizon {
        let rows: Vec<Vec<f64>> = outcome.runs.iter().map(|(_, r)| regret_row(r, t)).collect();
        let _ = write!(out, "{},{n}", t + 1);
        for j in 0..cols.len() {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = if n > 1 {
                rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let _ = write!(out, ",{},{}", num(mean), num(var.sqrt()));
        }
        out.push('\n');
    }
    out
}

/// Final benchmark values per completed run.
pub fn benchmarks_csv(outcome: &ExperimentOutcome, disturbance_free: bool) -> String {
    let mut out = String::from("run,seed,bench_u,bench_m,converged_u,converged_m");
    if disturbance_free {
        out.push_str(",bench_x,converged_x");
    }
    out.push('\n');
    for (rec, _) in &outcome.runs {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            rec.index,
            rec.seed,
            num(rec.bench_u.value),
            num(rec.bench_m.value),
            rec.bench_u.converged,
            rec.bench_m.converged
        );
        if let Some(x) = &rec.bench_x {
            let _ = write!(out, ",{},{}", num(x.value), x.converged);
        }
        out.push('\n');
    }
    out
}

/// Failed runs with their error message.
pub fn failures_csv(cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> String {
    let mut out = String::from("run,seed,error\n");
    for (k, e) in &outcome.failures {
        let msg = e.to_string().replace('"', "\"\"");
        let _ = writeln!(out, "{k},{},\"{msg}\"", crate::harness::run::run_seed(cfg, *k));
    }
    out
}

/// Writes `run_<k>.csv` per completed run, `summary.csv`, `benchmarks.csv`
/// and `failures.csv`.
pub fn write_outputs(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, body: String| {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    for (rec, report) in &outcome.runs {
        write(format!("run_{}.csv", rec.index), run_csv(rec, report))?;
    }
    let free = !cfg.disturbances_on;
    write("summary.csv".into(), summary_csv(outcome, free))?;
    write("benchmarks.csv".into(), benchmarks_csv(outcome, free))?;
    write("failures.csv".into(), failures_csv(cfg, outcome))?;
    Ok(())
}
