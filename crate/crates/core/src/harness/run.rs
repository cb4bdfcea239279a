use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;

use crate::benchmarks::{best_dac, best_fixed_input, best_steady_state, BenchmarkResult};
use crate::controllers::{theorem1_step_size, Controller, Dac, DacState, Feedback, Olc};
use crate::costs::{smoothness_constant, CostOracle, QuadraticCost, SmoothnessParams};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Setup};
use crate::linalg::{Matrix, Vector};
use crate::system::StateBound;

/// Relative slack on the `‖x_t‖ ≤ D` check, for round-off only.
pub const STATE_BOUND_SLACK: f64 = 1e-9;

/// Seed of run `index`.
pub fn run_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    cfg.seed.wrapping_add(index as u64)
}

/// Generator for run `index`; costs are drawn first, then disturbances.
pub fn run_rng(cfg: &ExperimentConfig, index: usize) -> Pcg64 {
    Pcg64::seed_from_u64(run_seed(cfg, index))
}

/// `T` i.i.d. quadratics `Q_t = q_scale·(SᵀS/N + q_ridge·I)` with standard
/// normal `S`, and targets uniform on `c_center + [−c_max, c_max]^N`.
pub fn generate_costs(cfg: &ExperimentConfig, rng: &mut impl Rng) -> Result<Vec<QuadraticCost>> {
    let n = cfg.system.a.len();
    let g = &cfg.cost_gen;
    let center = match &g.c_center {
        Some(c) => Vector::from(c.clone()),
        None => Vector::zeros(n),
    };
    let ridge = Matrix::identity(n).scaled(g.q_ridge);
    (0..cfg.horizon)
        .map(|_| {
            let s = Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let gram = s.transpose().matmul(&s).scaled(1.0 / n as f64);
            let q = (&gram + &ridge).scaled(g.q_scale).symmetrized();
            let c = Vector::from_fn(n, |i| center[i] + rng.random_range(-g.c_max..=g.c_max));
            QuadraticCost::new(q, c)
        })
        .collect()
}

/// `T − 1` disturbances uniform on the box, or zeros when disturbances are
/// off.
pub fn generate_disturbances(cfg: &ExperimentConfig, rng: &mut impl Rng) -> Vec<Vector> {
    let n = cfg.w_box.dim();
    let len = cfg.horizon - 1;
    if !cfg.disturbances_on {
        return vec![Vector::zeros(n); len];
    }
    let (lo, hi) = (cfg.w_box.lower(), cfg.w_box.upper());
    (0..len)
        .map(|_| Vector::from_fn(n, |i| rng.random_range(lo[i]..=hi[i])))
        .collect()
}

/// What one controller did over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// `x_1..x_T`
    pub states: Vec<Vector>,
    /// `u_1..u_{T−1}`
    pub inputs: Vec<Vector>,
    /// `f_t(x_t)`
    pub costs: Vec<f64>,
}

impl Trace {
    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Plays `ctrl` for `costs.len()` rounds. Each round: observe `x_t`, act,
/// pay `f_t(x_t)`, reveal `∇f_t(x_t)`, then the plant moves with `w_t`.
/// `after_round` sees the controller once before the first round and after
/// every update.
pub fn play<K: Controller, C: CostOracle>(
    setup: &Setup,
    ctrl: &mut K,
    costs: &[C],
    w_seq: &[Vector],
    mut after_round: impl FnMut(&K),
) -> Result<Trace> {
    if costs.len() != w_seq.len() + 1 {
        return Err(Error::invalid(format!(
            "{} costs need {} disturbances, got {}",
            costs.len(),
            costs.len() - 1,
            w_seq.len()
        )));
    }
    let sys = &setup.sys;
    let horizon = costs.len();
    let mut states = Vec::with_capacity(horizon);
    let mut inputs = Vec::with_capacity(horizon - 1);
    let mut paid = Vec::with_capacity(horizon);
    let mut x = setup.x1.clone();
    after_round(ctrl);
    for (t, f) in costs.iter().enumerate() {
        check_state_bound(&x, setup.bound, t + 1)?;
        paid.push(f.value(&x));
        if t + 1 == horizon {
            states.push(x);
            break;
        }
        let u = ctrl.act(&x)?;
        let next = sys.step(&x, &u, &w_seq[t])?;
        let grad = f.gradient(&x);
        ctrl.observe(&Feedback {
            state: &x,
            input: &u,
            cost: f,
            gradient: &grad,
            next_state: &next,
        })?;
        after_round(ctrl);
        states.push(x);
        inputs.push(u);
        x = next;
    }
    Ok(Trace {
        states,
        inputs,
        costs: paid,
    })
}

fn check_state_bound(x: &Vector, bound: StateBound, t: usize) -> Result<()> {
    let norm = x.norm();
    if norm > bound.radius * (1.0 + STATE_BOUND_SLACK) {
        return Err(Error::InvalidState(format!(
            "‖x_{t}‖ = {norm:.6e} exceeds the state bound D = {:.6e}",
            bound.radius
        )));
    }
    Ok(())
}

/// Everything recorded for one seeded run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub costs: Vec<QuadraticCost>,
    /// `w_1..w_{T−1}`
    pub disturbances: Vec<Vector>,
    pub olc: Trace,
    /// OLC targets `z_1..z_T`.
    pub targets: Vec<Vector>,
    pub dac: Trace,
    pub smoothness: SmoothnessParams,
    /// OLC step size actually used.
    pub eta: f64,
    /// `B_u(T)`
    pub bench_u: BenchmarkResult,
    /// `B_M(T)`
    pub bench_m: BenchmarkResult,
    /// Best steady state; disturbance-free runs only.
    pub bench_x: Option<BenchmarkResult>,
}

/// Smoothness constant and OLC step size for a cost realization.
pub fn step_size_for(
    cfg: &ExperimentConfig,
    setup: &Setup,
    costs: &[QuadraticCost],
) -> Result<(SmoothnessParams, f64)> {
    let smoothness = smoothness_constant(costs, setup.bound, setup.c_bound)?;
    let eta = match cfg.olc.eta_override {
        Some(eta) => eta,
        None => theorem1_step_size(smoothness.l, costs.len(), &setup.cert),
    };
    Ok((smoothness, eta))
}

/// Runs both controllers and all benchmarks on run `index`'s realization.
pub fn run_single(cfg: &ExperimentConfig, setup: &Setup, index: usize) -> Result<RunRecord> {
    let mut rng = run_rng(cfg, index);
    let costs = generate_costs(cfg, &mut rng)?;
    let disturbances = generate_disturbances(cfg, &mut rng);
    let (smoothness, eta) = step_size_for(cfg, setup, &costs)?;
    let sys = &setup.sys;

    let mut olc = Olc::new(sys.clone(), cfg.u_box.clone(), &setup.x1, eta)?;
    let mut targets = Vec::with_capacity(cfg.horizon);
    let olc_trace = play(setup, &mut olc, &costs, &disturbances, |c| {
        targets.push(c.target().clone())
    })?;

    let dac_state = DacState::new(
        sys.state_dim(),
        sys.input_dim(),
        cfg.dac.h_mem,
        setup.dac_eta,
        setup.dac_radius,
        setup.cert.gamma,
    )?;
    let mut dac = Dac::new(sys.clone(), cfg.u_box.clone(), dac_state)?;
    let dac_trace = play(setup, &mut dac, &costs, &disturbances, |_| {})?;

    let bench_u = best_fixed_input(sys, &setup.x1, &disturbances, &costs, &cfg.u_box, &cfg.solver)?;
    let bench_m = best_dac(
        sys,
        &setup.x1,
        &disturbances,
        &costs,
        cfg.dac.h_mem,
        setup.dac_radius,
        setup.cert.gamma,
        &cfg.solver,
    )?;
    let bench_x = if cfg.disturbances_on {
        None
    } else {
        Some(best_steady_state(&costs, sys, &cfg.u_box, &cfg.solver)?)
    };
    Ok(RunRecord {
        index,
        seed: run_seed(cfg, index),
        costs,
        disturbances,
        olc: olc_trace,
        targets,
        dac: dac_trace,
        smoothness,
        eta,
        bench_u,
        bench_m,
        bench_x,
    })
}
