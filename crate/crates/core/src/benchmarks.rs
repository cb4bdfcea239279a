//! Offline best-in-hindsight comparators.
//!
//! Every benchmark is a convex program over a box or a product of balls and
//! is solved by projected gradient descent with a backtracking step, using
//! adjoint (costate) gradients through the linear dynamics. Time indices are
//! 1-based in the docs and 0-based in slices: `costs[k] = f_{k+1}`,
//! `w_seq[k] = w_{k+1}`, and a horizon-`T` problem has `T` costs and `T − 1`
//! inputs and disturbances.

use serde::{Deserialize, Serialize};

use crate::costs::{nominal_cost, CostOracle};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{Matrix, Vector};
use crate::system::{BoxSet, LtiSystem};

/// Finer grids than this per axis are rejected by the brute-force oracle.
pub const GRID_MAX_RESOLUTION: usize = 400;
/// Relative agreement demanded between the disturbed and nominal evaluations.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Stopping rule for the projected descent solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Stop once an accepted step moves less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Optimizer {
    /// `u*`
    Input(Vector),
    /// `x* = S u*`, with the input that holds it.
    SteadyState { state: Vector, input: Vector },
    /// `M*`
    Blocks(Vec<Matrix>),
}

impl Optimizer {
    pub fn input(&self) -> Option<&Vector> {
        match self {
            Optimizer::Input(u) | Optimizer::SteadyState { input: u, .. } => Some(u),
            Optimizer::Blocks(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub optimizer: Optimizer,
    /// Cumulative cost at the optimizer.
    pub value: f64,
    /// The same value computed on the nominal trajectory with shifted costs,
    /// where that applies.
    pub nominal_value: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_horizon<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
) -> Result<()> {
    x1.check_dim(sys.state_dim(), "initial state")?;
    if costs.is_empty() {
        return Err(Error::invalid("benchmark needs at least one cost"));
    }
    if w_seq.len() + 1 != costs.len() {
        return Err(Error::invalid(format!(
            "{} costs need {} disturbances, got {}",
            costs.len(),
            costs.len() - 1,
            w_seq.len()
        )));
    }
    for c in costs {
        if c.dim() != sys.state_dim() {
            return Err(Error::invalid(format!(
                "cost of dimension {} for a {}-state system",
                c.dim(),
                sys.state_dim()
            )));
        }
    }
    Ok(())
}

fn trajectory_value<C: CostOracle>(states: &[Vector], costs: &[C]) -> f64 {
    states.iter().zip(costs).map(|(x, f)| f.value(x)).sum()
}

/// Costates `λ_T = ∇f_T(x_T)`, `λ_t = ∇f_t(x_t) + Aᵀ λ_{t+1}`; entry `k`
/// holds `λ_{k+1}`.
fn costates<C: CostOracle>(sys: &LtiSystem, states: &[Vector], costs: &[C]) -> Vec<Vector> {
    let mut lam = vec![Vector::zeros(sys.state_dim()); states.len()];
    let mut next: Option<Vector> = None;
    for k in (0..states.len()).rev() {
        let mut l = costs[k].gradient(&states[k]);
        if let Some(n) = &next {
            l.axpy(1.0, &sys.a().tr_mul_vec(n));
        }
        lam[k] = l.clone();
        next = Some(l);
    }
    lam
}

/// `∇_{u_t} Σ_s f_s(x_s) = Bᵀ λ_{t+1}` for `t = 1..T−1`.
pub fn adjoint_input_gradients<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    u_seq: &[Vector],
    w_seq: &[Vector],
    costs: &[C],
) -> Result<Vec<Vector>> {
    check_horizon(sys, x1, w_seq, costs)?;
    let states = sys.simulate(x1, u_seq, w_seq)?;
    let lam = costates(sys, &states, costs);
    Ok(lam[1..].iter().map(|l| sys.b().tr_mul_vec(l)).collect())
}

struct Descent {
    point: Vector,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient descent. A trial step `s` is accepted once the
/// gradient change along it satisfies `s·‖∇f(x⁺) − ∇f(x)‖ ≤ ‖x⁺ − x‖`, a
/// local Lipschitz test that, unlike a value-based one, keeps working when
/// the objective differences fall below round-off. After each accepted step
/// `s` may double.
fn projected_descent(
    start: Vector,
    value_grad: impl Fn(&Vector) -> (f64, Vector),
    project: impl Fn(&Vector) -> Vector,
    settings: &SolverSettings,
) -> Descent {
    let mut x = project(&start);
    let (mut fx, mut g) = value_grad(&x);
    let mut step = 1.0;
    for it in 1..=settings.max_iter {
        let mut halvings = 0;
        let (cand, fc, gc) = loop {
            let mut trial = x.clone();
            trial.axpy(-step, &g);
            let trial = project(&trial);
            let (ft, gt) = value_grad(&trial);
            let d = trial.distance(&x);
            if step * gt.distance(&g) <= d * (1.0 + 1e-12) || halvings >= 200 {
                break (trial, ft, gt);
            }
            step *= 0.5;
            halvings += 1;
        };
        let movement = cand.distance(&x);
        x = cand;
        fx = fc;
        g = gc;
        if movement < settings.tol {
            return Descent {
                point: x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
        step *= 2.0;
    }
    Descent {
        point: x,
        value: fx,
        iterations: settings.max_iter,
        converged: false,
    }
}

/// `Σ_t f_t(x_t^u)` for the constant input `u`, on the disturbed trajectory.
pub fn fixed_input_value<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    u: &Vector,
) -> Result<f64> {
    check_horizon(sys, x1, w_seq, costs)?;
    u.check_dim(sys.input_dim(), "input")?;
    let u_seq = vec![u.clone(); w_seq.len()];
    Ok(trajectory_value(&sys.simulate(x1, &u_seq, w_seq)?, costs))
}

/// `Σ_t g_t(x̄_t^u)`: the nominal trajectory scored with
/// `g_t(x̄) = f_t(x̄ + x^d_t)`.
pub fn fixed_input_nominal_value<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    u: &Vector,
) -> Result<f64> {
    check_horizon(sys, x1, w_seq, costs)?;
    let u_seq = vec![u.clone(); w_seq.len()];
    let zeros = vec![Vector::zeros(sys.state_dim()); w_seq.len()];
    let nominal = sys.simulate(x1, &u_seq, &zeros)?;
    let response = sys.disturbance_response(w_seq);
    let mut total = 0.0;
    for ((x, xd), f) in nominal.iter().zip(&response).zip(costs) {
        total += nominal_cost(f, xd)?.value(x);
    }
    Ok(total)
}

fn cross_check(value: f64, other: f64, what: &str) -> Result<()> {
    if (value - other).abs() > CROSS_CHECK_TOL * value.abs().max(other.abs()).max(1.0) {
        return Err(Error::InvalidState(format!(
            "{what}: disturbed value {value} and nominal value {other} disagree"
        )));
    }
    Ok(())
}

/// `B_u(T) = min_{u ∈ U} Σ_t f_t(x_t^u)`.
pub fn best_fixed_input<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    u_set: &BoxSet,
    settings: &SolverSettings,
) -> Result<BenchmarkResult> {
    check_horizon(sys, x1, w_seq, costs)?;
    u_set.lower().check_dim(sys.input_dim(), "input box")?;
    let value_grad = |u: &Vector| {
        let u_seq = vec![u.clone(); w_seq.len()];
        let states = sys.simulate(x1, &u_seq, w_seq).expect("dimensions checked");
        let lam = costates(sys, &states, costs);
        let mut g = Vector::zeros(sys.input_dim());
        for l in &lam[1..] {
            g.axpy(1.0, &sys.b().tr_mul_vec(l));
        }
        (trajectory_value(&states, costs), g)
    };
    let d = projected_descent(
        Vector::zeros(sys.input_dim()),
        value_grad,
        |u| u_set.clamp(u),
        settings,
    );
    let nominal = fixed_input_nominal_value(sys, x1, w_seq, costs, &d.point)?;
    cross_check(d.value, nominal, "best fixed input")?;
    Ok(BenchmarkResult {
        optimizer: Optimizer::Input(d.point),
        value: d.value,
        nominal_value: Some(nominal),
        iterations: d.iterations,
        converged: d.converged,
    })
}

/// `min_{x ∈ X} Σ_t f_t(x)`, solved over `u` with `x = S u`.
pub fn best_steady_state<C: CostOracle>(
    costs: &[C],
    sys: &LtiSystem,
    u_set: &BoxSet,
    settings: &SolverSettings,
) -> Result<BenchmarkResult> {
    if costs.is_empty() {
        return Err(Error::invalid("benchmark needs at least one cost"));
    }
    u_set.lower().check_dim(sys.input_dim(), "input box")?;
    let s = sys.steady_map();
    let value_grad = |u: &Vector| {
        let x = s.mul_vec(u);
        let mut g = Vector::zeros(sys.state_dim());
        let mut v = 0.0;
        for f in costs {
            v += f.value(&x);
            g.axpy(1.0, &f.gradient(&x));
        }
        (v, s.tr_mul_vec(&g))
    };
    let d = projected_descent(
        Vector::zeros(sys.input_dim()),
        value_grad,
        |u| u_set.clamp(u),
        settings,
    );
    Ok(BenchmarkResult {
        optimizer: Optimizer::SteadyState {
            state: s.mul_vec(&d.point),
            input: d.point,
        },
        value: d.value,
        nominal_value: None,
        iterations: d.iterations,
        converged: d.converged,
    })
}

/// Inputs `u_t = Σ_{i=1}^{H} M^{[i−1]} w_{t−i}` (zero-padded) for
/// `t = 1..T−1`.
pub fn dac_inputs(blocks: &[Matrix], w_seq: &[Vector], input_dim: usize) -> Vec<Vector> {
    (0..w_seq.len())
        .map(|k| {
            let mut u = Vector::zeros(input_dim);
            for (i, m) in blocks.iter().enumerate() {
                // u[k] is u_{k+1}; it sees w_{k+1−(i+1)} = w_seq[k − i − 1].
                if k > i {
                    u.axpy(1.0, &m.mul_vec(&w_seq[k - i - 1]));
                }
            }
            u
        })
        .collect()
}

/// `Σ_t f_t(x_t)` under the disturbance-action policy `blocks`, unclamped.
pub fn dac_policy_value<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    blocks: &[Matrix],
) -> Result<f64> {
    check_horizon(sys, x1, w_seq, costs)?;
    let u_seq = dac_inputs(blocks, w_seq, sys.input_dim());
    Ok(trajectory_value(&sys.simulate(x1, &u_seq, w_seq)?, costs))
}

/// Gradient of [`dac_policy_value`] with respect to each block:
/// `∇_{M^{[i−1]}} = Σ_t Bᵀ λ_{t+1} w_{t−i}ᵀ`.
pub fn dac_policy_gradient<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    blocks: &[Matrix],
) -> Result<Vec<Matrix>> {
    check_horizon(sys, x1, w_seq, costs)?;
    let u_seq = dac_inputs(blocks, w_seq, sys.input_dim());
    let states = sys.simulate(x1, &u_seq, w_seq)?;
    Ok(dac_gradient_from_states(sys, w_seq, costs, &states, blocks.len()))
}

fn dac_gradient_from_states<C: CostOracle>(
    sys: &LtiSystem,
    w_seq: &[Vector],
    costs: &[C],
    states: &[Vector],
    h_mem: usize,
) -> Vec<Matrix> {
    let lam = costates(sys, states, costs);
    let mut grads = vec![Matrix::zeros(sys.input_dim(), sys.state_dim()); h_mem];
    for k in 0..w_seq.len() {
        let back = sys.b().tr_mul_vec(&lam[k + 1]);
        for (i, g) in grads.iter_mut().enumerate() {
            if k > i {
                g.axpy(1.0, &Matrix::outer(&back, &w_seq[k - i - 1]));
            }
        }
    }
    grads
}

fn flatten(blocks: &[Matrix]) -> Vector {
    Vector::from(blocks.iter().flat_map(|m| m.as_slice().iter().copied()).collect::<Vec<_>>())
}

fn unflatten(v: &Vector, h_mem: usize, rows: usize, cols: usize) -> Vec<Matrix> {
    v.as_slice()
        .chunks(rows * cols)
        .take(h_mem)
        .map(|c| Matrix::new(rows, cols, c.to_vec()).expect("chunk size matches"))
        .collect()
}

/// Scales each block into its ball of radius `radius · decay^i`.
pub fn project_blocks(blocks: &mut [Matrix], radius: f64, decay: f64) {
    let mut r = radius;
    for m in blocks {
        let norm = m.frobenius_norm();
        if norm > r {
            *m = if r > 0.0 { m.scaled(r / norm) } else { m.scaled(0.0) };
        }
        r *= decay;
    }
}

/// `B_M(T)`: the best disturbance-action policy in hindsight over the same
/// block-ball set the online baseline uses (`‖M^{[i]}‖_F ≤ radius·(1−γ)^i`).
#[allow(clippy::too_many_arguments)]
pub fn best_dac<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    h_mem: usize,
    radius: f64,
    gamma: f64,
    settings: &SolverSettings,
) -> Result<BenchmarkResult> {
    check_horizon(sys, x1, w_seq, costs)?;
    if h_mem == 0 {
        return Err(Error::invalid("DAC memory length must be at least 1"));
    }
    if !(radius >= 0.0 && radius.is_finite()) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("DAC radius must be non-negative and γ in (0, 1]"));
    }
    let (m, n) = (sys.input_dim(), sys.state_dim());
    let decay = 1.0 - gamma;
    let value_grad = |v: &Vector| {
        let blocks = unflatten(v, h_mem, m, n);
        let u_seq = dac_inputs(&blocks, w_seq, m);
        let states = sys.simulate(x1, &u_seq, w_seq).expect("dimensions checked");
        let grads = dac_gradient_from_states(sys, w_seq, costs, &states, h_mem);
        (trajectory_value(&states, costs), flatten(&grads))
    };
    let project = |v: &Vector| {
        let mut blocks = unflatten(v, h_mem, m, n);
        project_blocks(&mut blocks, radius, decay);
        flatten(&blocks)
    };
    let d = projected_descent(
        Vector::zeros(h_mem * m * n),
        value_grad,
        project,
        settings,
    );
    let blocks = unflatten(&d.point, h_mem, m, n);

    // Nominal path: x̄ without disturbances, scored with g_t.
    let u_seq = dac_inputs(&blocks, w_seq, m);
    let zeros = vec![Vector::zeros(n); w_seq.len()];
    let nominal = sys.simulate(x1, &u_seq, &zeros)?;
    let response = sys.disturbance_response(w_seq);
    let mut nominal_value = 0.0;
    for ((x, xd), f) in nominal.iter().zip(&response).zip(costs) {
        nominal_value += nominal_cost(f, xd)?.value(x);
    }
    cross_check(d.value, nominal_value, "best DAC")?;
    Ok(BenchmarkResult {
        optimizer: Optimizer::Blocks(blocks),
        value: d.value,
        nominal_value: Some(nominal_value),
        iterations: d.iterations,
        converged: d.converged,
    })
}

/// Brute-force minimum of `Σ_t f_t(x_t^u)` over a grid on `U` with
/// `resolution` intervals per axis. Inputs of dimension 1 or 2 only.
#[allow(clippy::too_many_arguments)]
pub fn grid_oracle_fixed_input<C: CostOracle>(
    sys: &LtiSystem,
    x1: &Vector,
    w_seq: &[Vector],
    costs: &[C],
    u_set: &BoxSet,
    resolution: usize,
    exec: Execution,
) -> Result<BenchmarkResult> {
    check_horizon(sys, x1, w_seq, costs)?;
    let dim = sys.input_dim();
    if !(1..=2).contains(&dim) {
        return Err(Error::Unsupported(format!(
            "grid oracle handles 1 or 2 inputs, got {dim}"
        )));
    }
    if resolution == 0 || resolution > GRID_MAX_RESOLUTION {
        return Err(Error::invalid(format!(
            "grid resolution must be in 1..={GRID_MAX_RESOLUTION}, got {resolution}"
        )));
    }
    u_set.lower().check_dim(dim, "input box")?;

    // x_t^u = x_t^0 + G_t u, so one zero-input rollout and the step
    // responses G_t make each grid point cheap.
    let zero_u = vec![Vector::zeros(dim); w_seq.len()];
    let free = sys.simulate(x1, &zero_u, w_seq)?;
    let mut gains = Vec::with_capacity(costs.len());
    let mut g = Matrix::zeros(sys.state_dim(), dim);
    gains.push(g.clone());
    for _ in 1..costs.len() {
        g = &sys.a().matmul(&g) + sys.b();
        gains.push(g.clone());
    }
    let axis = |j: usize, i: usize| {
        let lo = u_set.lower()[j];
        let hi = u_set.upper()[j];
        lo + (hi - lo) * i as f64 / resolution as f64
    };
    let other = if dim == 2 { resolution + 1 } else { 1 };
    let rows = exec.map_indexed(resolution + 1, |i| {
        let mut best: Option<(f64, Vector)> = None;
        for j in 0..other {
            let u = if dim == 2 {
                Vector::from([axis(0, i), axis(1, j)])
            } else {
                Vector::from([axis(0, i)])
            };
            let mut v = 0.0;
            for ((x0, gt), f) in free.iter().zip(&gains).zip(costs) {
                let mut x = x0.clone();
                x.axpy(1.0, &gt.mul_vec(&u));
                v += f.value(&x);
            }
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, u));
            }
        }
        best.expect("grid row is non-empty")
    });
    let (value, u) = rows
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("grid is non-empty");
    let points = (resolution + 1) * other;
    Ok(BenchmarkResult {
        optimizer: Optimizer::Input(u),
        value,
        nominal_value: None,
        iterations: points,
        converged: true,
    })
}
