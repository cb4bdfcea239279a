//! Acceptance checks. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use olc_core::benchmarks::{
    adjoint_input_gradients, best_fixed_input, dac_policy_gradient, dac_policy_value,
    grid_oracle_fixed_input, SolverSettings,
};
use olc_core::costs::{finite_diff_grad, nominal_cost, CostOracle, QuadraticCost};
use olc_core::exec::Execution;
use olc_core::harness::{run_all, ExperimentConfig, ExperimentOutcome, Setup};
use olc_core::linalg::{spectral_norm, Matrix, Vector};
use olc_core::system::{certify_strong_stability, BoxSet, LtiSystem};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

/// Criterion 1 runtime budget.
const BOUND_BUDGET: Duration = Duration::from_secs(30);
/// Criterion 9 runtime budget.
const GRADIENT_BUDGET: Duration = Duration::from_secs(5);
/// Slack on the drift bound of the OLC targets.
const DRIFT_SLACK: f64 = 1e-9;
/// Minimum fraction of runs for the ordering criteria.
const BENCH_ORDER_FRACTION: f64 = 0.8;
const REGRET_ORDER_FRACTION: f64 = 0.9;
/// Relative tolerance of finite-difference gradient checks.
const FD_TOL: f64 = 1e-6;
/// Relative tolerance between the descent solver and the grid oracle.
const GRID_TOL: f64 = 1e-3;
/// Relative tolerance for superposition and the two benchmark paths.
const SUPERPOSITION_TOL: f64 = 1e-9;
/// Absolute round-off allowance on geometric tracking, scaled by `1 + ‖z‖`.
const TRACKING_SLACK: f64 = 1e-12;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig::load(manifest_dir().join("configs/reference.json")).expect("shipped config loads")
}

struct Experiment {
    setup: Setup,
    outcome: ExperimentOutcome,
    elapsed: Duration,
}

fn experiment(disturbances_on: bool, horizon: usize) -> Experiment {
    let mut cfg = base_config();
    cfg.disturbances_on = disturbances_on;
    cfg.horizon = horizon;
    let start = Instant::now();
    let setup = cfg.validate().expect("config validates");
    let outcome = run_all(&cfg, &setup, Execution::default());
    let elapsed = start.elapsed();
    assert!(
        outcome.failures.is_empty(),
        "runs failed: {:?}",
        outcome.failures
    );
    Experiment {
        setup,
        outcome,
        elapsed,
    }
}

struct Experiments {
    free100: Experiment,
    free1000: Experiment,
    dist100: Experiment,
    dist250: Experiment,
    dist1000: Experiment,
}

impl Experiments {
    fn all(&self) -> [&Experiment; 5] {
        [&self.free100, &self.free1000, &self.dist100, &self.dist250, &self.dist1000]
    }
}

type Verdict = (bool, String);

fn last(v: &[f64]) -> f64 {
    *v.last().expect("non-empty curve")
}

/// `2LD²/γ`
fn lead(setup: &Setup, l: f64) -> f64 {
    2.0 * l * setup.bound.radius.powi(2) / setup.cert.gamma
}

fn steady_state_bound(e: &Experiments) -> Verdict {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut ok = true;
    for ex in [&e.free100, &e.free1000] {
        let c = &ex.setup.cert;
        for (rec, rep) in &ex.outcome.runs {
            let t = rec.costs.len() as f64;
            let bound = lead(&ex.setup, rec.smoothness.l)
                * ((t * (1.0 + 4.0 * c.kappa * c.kappa)).sqrt() + c.kappa);
            let r = last(rep.olc.vs_x.as_ref().expect("disturbance-free"));
            ok &= r <= bound;
            worst = worst.max(r / bound);
        }
    }
    let elapsed = e.free100.elapsed + e.free1000.elapsed;
    let fast = elapsed < BOUND_BUDGET;
    (
        ok && fast,
        format!("max R_x(T)/bound = {worst:.3e}; runtime {:.2}s", elapsed.as_secs_f64()),
    )
}

fn constant_input_bound(e: &Experiments) -> Verdict {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut ok = true;
    for ex in [&e.dist100, &e.dist1000] {
        let c = &ex.setup.cert;
        for (rec, rep) in &ex.outcome.runs {
            let t = rec.costs.len() as f64;
            let bound = lead(&ex.setup, rec.smoothness.l)
                * ((t * (1.0 + 4.0 * c.kappa * c.kappa)).sqrt() + 2.0 * c.kappa);
            let r = last(&rep.olc.vs_u);
            ok &= r <= bound;
            worst = worst.max(r / bound);
        }
    }
    (ok, format!("max R_u(T)/bound = {worst:.3e}"))
}

fn benchmark_gap(e: &Experiments) -> Verdict {
    let mut ok = true;
    let mut lo = f64::INFINITY;
    let mut hi_ratio: f64 = f64::NEG_INFINITY;
    let mut negative = 0;
    let mut total = 0;
    for ex in [&e.free100, &e.free1000] {
        let c = &ex.setup.cert;
        for (rec, rep) in &ex.outcome.runs {
            let gap = last(&rep.olc.vs_u) - last(rep.olc.vs_x.as_ref().expect("disturbance-free"));
            let upper = c.kappa * lead(&ex.setup, rec.smoothness.l);
            ok &= gap >= 0.0 && gap <= upper;
            lo = lo.min(gap);
            hi_ratio = hi_ratio.max(gap / upper);
            total += 1;
            if gap < 0.0 {
                negative += 1;
            }
        }
    }
    (
        ok,
        format!("min gap {lo:.4e}; max gap/upper {hi_ratio:.3e}; {negative}/{total} gaps negative"),
    )
}

fn target_drift(e: &Experiments) -> Verdict {
    let mut ok = true;
    let mut worst: f64 = f64::NEG_INFINITY;
    for ex in e.all() {
        for (rec, _) in &ex.outcome.runs {
            let step = rec.eta * rec.smoothness.l * rec.smoothness.d;
            let z = &rec.targets;
            for t in 0..z.len() {
                for tau in 1..=20.min(z.len() - 1 - t) {
                    let drift = z[t + tau].distance(&z[t]);
                    let bound = step * tau as f64;
                    ok &= drift <= bound + DRIFT_SLACK;
                    worst = worst.max(drift - bound);
                }
            }
        }
    }
    (ok, format!("max(‖z_(t+τ) − z_t‖ − ητLD) = {worst:.3e}"))
}

fn mean_final_over_t(ex: &Experiment, pick: impl Fn(&olc_core::harness::RegretReport) -> f64) -> f64 {
    let runs = &ex.outcome.runs;
    runs.iter()
        .map(|(rec, rep)| pick(rep) / rec.costs.len() as f64)
        .sum::<f64>()
        / runs.len() as f64
}

fn sublinearity(e: &Experiments) -> Verdict {
    let a = mean_final_over_t(&e.dist250, |r| last(&r.olc.vs_u));
    let b = mean_final_over_t(&e.dist1000, |r| last(&r.olc.vs_u));
    (b < a, format!("mean R_u(T)/T: T=250 {a:.4}, T=1000 {b:.4}"))
}

fn fraction(ex: &Experiment, pred: impl Fn(&olc_core::harness::RunRecord, &olc_core::harness::RegretReport) -> bool) -> f64 {
    let runs = &ex.outcome.runs;
    runs.iter().filter(|(rec, rep)| pred(rec, rep)).count() as f64 / runs.len() as f64
}

fn fixed_beats_dac_benchmark(e: &Experiments) -> Verdict {
    let f = fraction(&e.dist1000, |rec, _| rec.bench_u.value <= rec.bench_m.value);
    let converged = e
        .dist1000
        .outcome
        .runs
        .iter()
        .all(|(rec, _)| rec.bench_u.converged && rec.bench_m.converged);
    (
        f >= BENCH_ORDER_FRACTION && converged,
        format!("B_u ≤ B_M in {:.0}% of runs; all solves converged: {converged}", 100.0 * f),
    )
}

fn olc_beats_dac(e: &Experiments) -> Verdict {
    let f = fraction(&e.dist1000, |_, rep| last(&rep.olc.vs_u) < last(&rep.dac.vs_u));
    (
        f >= REGRET_ORDER_FRACTION,
        format!("OLC R_u < DAC R_u in {:.0}% of runs", 100.0 * f),
    )
}

fn regret_vs_dac_benchmark(e: &Experiments) -> Verdict {
    let a = mean_final_over_t(&e.dist250, |r| last(&r.dac.vs_m));
    let b = mean_final_over_t(&e.dist1000, |r| last(&r.dac.vs_m));
    let f = fraction(&e.dist1000, |_, rep| last(&rep.olc.vs_m) < 0.0);
    (
        b < a && f > 0.5,
        format!(
            "DAC mean R_M(T)/T: T=250 {a:.4}, T=1000 {b:.4}; OLC R_M(T) < 0 in {:.0}% of runs",
            100.0 * f
        ),
    )
}

fn random_instance(rng: &mut Pcg64, horizon: usize) -> (LtiSystem, Vector, Vec<QuadraticCost>, Vec<Vector>) {
    let a = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
    let a = a.scaled(0.9 / spectral_norm(&a).unwrap().max(1e-9));
    let b = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
    let sys = LtiSystem::new(a, b).unwrap();
    let x1 = Vector::from_fn(3, |_| rng.random_range(-1.0..1.0));
    let costs = (0..horizon)
        .map(|_| {
            let s = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let q = &s.transpose().matmul(&s) + &Matrix::identity(3).scaled(0.1);
            let c = Vector::from_fn(3, |_| rng.random_range(-2.0..2.0));
            QuadraticCost::new(q.symmetrized(), c).unwrap()
        })
        .collect();
    let ws = (0..horizon - 1)
        .map(|_| Vector::from_fn(3, |_| rng.random_range(-0.5..0.5)))
        .collect();
    (sys, x1, costs, ws)
}

fn rel_gap(fd: &[f64], exact: &[f64]) -> f64 {
    let diff = fd.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = exact.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    diff / scale
}

fn trajectory_cost(sys: &LtiSystem, x1: &Vector, us: &[Vector], ws: &[Vector], costs: &[QuadraticCost]) -> f64 {
    sys.simulate(x1, us, ws)
        .unwrap()
        .iter()
        .zip(costs)
        .map(|(x, f)| f.value(x))
        .sum()
}

fn gradient_oracles() -> Verdict {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(9);
    let horizon = 20;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (sys, x1, costs, ws) = random_instance(&mut rng, horizon);

        let us: Vec<_> = (0..horizon - 1)
            .map(|_| Vector::from_fn(2, |_| rng.random_range(-1.0..1.0)))
            .collect();
        let grads = adjoint_input_gradients(&sys, &x1, &us, &ws, &costs).unwrap();
        let mut exact = Vec::new();
        let mut fd = Vec::new();
        for t in 0..horizon - 1 {
            for j in 0..2 {
                let mut up = us.clone();
                up[t][j] += h;
                let mut down = us.clone();
                down[t][j] -= h;
                fd.push(
                    (trajectory_cost(&sys, &x1, &up, &ws, &costs)
                        - trajectory_cost(&sys, &x1, &down, &ws, &costs))
                        / (2.0 * h),
                );
                exact.push(grads[t][j]);
            }
        }
        worst = worst.max(rel_gap(&fd, &exact));

        let blocks: Vec<_> = (0..4)
            .map(|_| Matrix::from_fn(2, 3, |_, _| rng.random_range(-0.5..0.5)))
            .collect();
        let grads = dac_policy_gradient(&sys, &x1, &ws, &costs, &blocks).unwrap();
        let mut exact = Vec::new();
        let mut fd = Vec::new();
        for (b, g) in grads.iter().enumerate() {
            for k in 0..6 {
                let mut up = blocks.clone();
                up[b].as_mut_slice()[k] += h;
                let mut down = blocks.clone();
                down[b].as_mut_slice()[k] -= h;
                fd.push(
                    (dac_policy_value(&sys, &x1, &ws, &costs, &up).unwrap()
                        - dac_policy_value(&sys, &x1, &ws, &costs, &down).unwrap())
                        / (2.0 * h),
                );
                exact.push(g.as_slice()[k]);
            }
        }
        worst = worst.max(rel_gap(&fd, &exact));

        for f in &costs {
            let x = Vector::from_fn(3, |_| rng.random_range(-3.0..3.0));
            let fd = finite_diff_grad(f, &x, None);
            worst = worst.max(rel_gap(fd.as_slice(), f.gradient(&x).as_slice()));
        }
    }
    let elapsed = start.elapsed();
    (
        worst <= FD_TOL && elapsed < GRADIENT_BUDGET,
        format!("max relative gap {worst:.3e}; runtime {:.2}s", elapsed.as_secs_f64()),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut rng = Pcg64::seed_from_u64(10);
    let u_set = BoxSet::symmetric(2, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..10 {
        let (sys, x1, costs, ws) = random_instance(&mut rng, 50);
        let pgd = best_fixed_input(&sys, &x1, &ws, &costs, &u_set, &SolverSettings::default()).unwrap();
        let grid = grid_oracle_fixed_input(&sys, &x1, &ws, &costs, &u_set, 400, Execution::default()).unwrap();
        let rel = (pgd.value - grid.value).abs() / grid.value.abs().max(1.0);
        ok &= pgd.converged && rel <= GRID_TOL;
        worst = worst.max(rel);
    }
    (ok, format!("max relative value gap {worst:.3e}"))
}

fn superposition(e: &Experiments) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut bench_worst: f64 = 0.0;
    for ex in e.all() {
        let sys = &ex.setup.sys;
        for (rec, _) in &ex.outcome.runs {
            for trace in [&rec.olc, &rec.dac] {
                let d = sys
                    .simulate_decomposed(&ex.setup.x1, &trace.inputs, &rec.disturbances)
                    .unwrap();
                for t in 0..trace.states.len() {
                    let x = &trace.states[t];
                    let sum = &d.nominal[t] + &d.disturbance[t];
                    worst = worst.max(x.distance(&sum) / x.norm().max(1.0));
                    let g = nominal_cost(&rec.costs[t], &d.disturbance[t]).unwrap();
                    let (gv, fv) = (g.value(&d.nominal[t]), rec.costs[t].value(x));
                    worst = worst.max((gv - fv).abs() / fv.abs().max(1.0));
                }
            }
            for b in [&rec.bench_u, &rec.bench_m] {
                let nv = b.nominal_value.expect("both paths computed");
                bench_worst = bench_worst.max((nv - b.value).abs() / b.value.abs().max(1.0));
            }
        }
    }
    (
        worst <= SUPERPOSITION_TOL && bench_worst <= SUPERPOSITION_TOL,
        format!("max state/cost gap {worst:.3e}; max benchmark path gap {bench_worst:.3e}"),
    )
}

fn geometric_tracking() -> Verdict {
    let cfg = base_config();
    let setup = cfg.validate().unwrap();
    let sys = &setup.sys;
    let cert = certify_strong_stability(sys.a()).unwrap();
    let mut ok = true;
    let mut worst: f64 = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let mut rng = Pcg64::seed_from_u64(1000 + seed);
        let lo = cfg.u_box.lower();
        let hi = cfg.u_box.upper();
        let u = Vector::from_fn(2, |i| rng.random_range(lo[i]..=hi[i]));
        let z = sys.steady_state_of_input(&u).unwrap();
        let x1 = Vector::from_fn(3, |_| rng.random_range(-10.0..10.0));
        let e1 = x1.distance(&z);
        let mut x = x1;
        for t in 1..=200 {
            let bound = cert.decay_bound(t - 1) * e1;
            let e = x.distance(&z);
            ok &= e <= bound + TRACKING_SLACK * (1.0 + z.norm());
            worst = worst.max(e - bound);
            x = sys.step(&x, &u, &Vector::zeros(3)).unwrap();
        }
    }
    (ok, format!("max(‖x_t − z‖ − κ(1−γ)^(t−1)‖x_1 − z‖) = {worst:.3e}"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = manifest_dir().join("configs/reference.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_olc"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("binary runs");
        (status.status.success(), out)
    };
    let (ok_a, a) = run("a");
    let (ok_b, b) = run("b");
    if !(ok_a && ok_b) {
        return (false, "run exited with failure".into());
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut same = true;
    for n in &names {
        same &= std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).ok().unwrap_or_default();
    }
    (same, format!("{} files compared", names.len()))
}

fn main() -> ExitCode {
    // Criteria 1-8 and 11 share these runs.
    let e = Experiments {
        free100: experiment(false, 100),
        free1000: experiment(false, 1000),
        dist100: experiment(true, 100),
        dist250: experiment(true, 250),
        dist1000: experiment(true, 1000),
    };
    let criteria: Vec<(&str, Verdict)> = vec![
        ("C1 steady-state regret bound without disturbances", steady_state_bound(&e)),
        ("C2 constant-input regret bound with disturbances", constant_input_bound(&e)),
        ("C3 benchmark gap 0 ≤ R_u − R_x ≤ 2κLD²/γ", benchmark_gap(&e)),
        ("C4 target drift ≤ ητLD", target_drift(&e)),
        ("C5 sublinear OLC regret", sublinearity(&e)),
        ("C6 B_u ≤ B_M ordering", fixed_beats_dac_benchmark(&e)),
        ("C7 OLC beats DAC against B_u", olc_beats_dac(&e)),
        ("C8 regret against B_M trends", regret_vs_dac_benchmark(&e)),
        ("C9 gradient oracles vs finite differences", gradient_oracles()),
        ("C10 descent solver vs grid oracle", oracle_equivalence()),
        ("C11 superposition and nominal costs", superposition(&e)),
        ("C12 geometric tracking", geometric_tracking()),
        ("C13 byte-identical reruns", determinism()),
    ];
    let mut failed = 0;
    for (name, (ok, detail)) in &criteria {
        println!("[{}] {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
