//! The plant `x_{t+1} = A x_t + B u_t + w_t` and its geometry.
//!
//! Besides one-step simulation this module certifies strong stability
//! (`‖A^k‖ ≤ κ(1−γ)^k`), maps between constant inputs and the steady states
//! they hold, splits trajectories into input-driven and disturbance-driven
//! parts, and computes the uniform state bound `D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    pseudo_inverse, solve_matrix, spectral_norm, spectral_radius_estimate, Matrix, Vector,
};

/// Power used for the spectral radius screen.
pub const RADIUS_POWER: usize = 64;
/// Horizon over which the decay inequality is certified.
pub const K_CHECK: usize = 200;
/// Fraction of the stability gap `1 − ρ̂` withheld from γ.
pub const GAMMA_MARGIN: f64 = 0.05;
/// Lower clamp for the state bound.
pub const STATE_BOUND_FLOOR: f64 = 1e-12;
/// Relative tolerance for steady-state membership, scaled by `1 + ‖z‖`.
pub const STEADY_STATE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
    i_minus_a: Matrix,
    /// `(I − A)⁻¹ B`
    steady_map: Matrix,
    steady_pinv: Matrix,
    steady_norm_sq: f64,
    b_pinv: Matrix,
    radius_estimate: f64,
}

impl LtiSystem {
    /// Validates shapes and screens `A` for stability.
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(Error::invalid(format!(
                "B has {} rows but A is {}x{}",
                b.rows(),
                a.rows(),
                a.cols()
            )));
        }
        a.ensure_finite("A")?;
        b.ensure_finite("B")?;
        let radius_estimate = spectral_radius_estimate(&a, RADIUS_POWER)?;
        if radius_estimate >= 1.0 {
            return Err(Error::NotStronglyStable {
                radius: radius_estimate,
            });
        }
        let i_minus_a = &Matrix::identity(a.rows()) - &a;
        let steady_map = solve_matrix(&i_minus_a, &b)?;
        let steady_pinv = pseudo_inverse(&steady_map)?;
        let steady_norm_sq = spectral_norm(&steady_map)?.powi(2);
        let b_pinv = pseudo_inverse(&b)?;
        Ok(LtiSystem {
            a,
            b,
            i_minus_a,
            steady_map,
            steady_pinv,
            steady_norm_sq,
            b_pinv,
            radius_estimate,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn i_minus_a(&self) -> &Matrix {
        &self.i_minus_a
    }

    /// The linear map `S = (I − A)⁻¹ B` taking a constant input to its
    /// steady state.
    pub fn steady_map(&self) -> &Matrix {
        &self.steady_map
    }

    /// Pseudo-inverse of [`Self::steady_map`].
    pub fn steady_pinv(&self) -> &Matrix {
        &self.steady_pinv
    }

    /// `‖S‖²`, the Lipschitz constant of the projection subproblem.
    pub fn steady_norm_sq(&self) -> f64 {
        self.steady_norm_sq
    }

    /// `‖A^64‖^(1/64)` computed at construction.
    pub fn radius_estimate(&self) -> f64 {
        self.radius_estimate
    }

    pub fn step(&self, x: &Vector, u: &Vector, w: &Vector) -> Result<Vector> {
        x.check_dim(self.state_dim(), "state")?;
        u.check_dim(self.input_dim(), "input")?;
        w.check_dim(self.state_dim(), "disturbance")?;
        Ok(self.advance(x, u, w))
    }

    /// `A x + B u + w` without dimension checks.
    pub(crate) fn advance(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        let mut next = self.a.mul_vec(x);
        next.axpy(1.0, &self.b.mul_vec(u));
        next.axpy(1.0, w);
        next
    }

    /// `A x + B u`
    pub(crate) fn advance_nominal(&self, x: &Vector, u: &Vector) -> Vector {
        let mut next = self.a.mul_vec(x);
        next.axpy(1.0, &self.b.mul_vec(u));
        next
    }

    /// The state `x = (I − A)⁻¹ B u` held by the constant input `u`.
    pub fn steady_state_of_input(&self, u: &Vector) -> Result<Vector> {
        u.check_dim(self.input_dim(), "input")?;
        Ok(self.steady_map.mul_vec(u))
    }

    /// Minimum-norm `u` with `B u = (I − A) z`.
    ///
    /// `tol` defaults to `1e-8 · (1 + ‖z‖)`; a larger residual means `z` is
    /// not a steady state of any input.
    pub fn input_for_steady_state(&self, z: &Vector, tol: Option<f64>) -> Result<Vector> {
        z.check_dim(self.state_dim(), "target state")?;
        let tol = tol.unwrap_or(STEADY_STATE_TOL * (1.0 + z.norm()));
        let rhs = self.i_minus_a.mul_vec(z);
        let u = self.b_pinv.mul_vec(&rhs);
        let residual = self.b.mul_vec(&u).distance(&rhs);
        if residual > tol {
            return Err(Error::UnreachableTarget { residual, tol });
        }
        Ok(u)
    }

    /// Full trajectory `x_1..x_T` for `T − 1` inputs and disturbances.
    pub fn simulate(&self, x1: &Vector, u_seq: &[Vector], w_seq: &[Vector]) -> Result<Vec<Vector>> {
        self.check_sequences(x1, u_seq, w_seq)?;
        let mut states = Vec::with_capacity(u_seq.len() + 1);
        states.push(x1.clone());
        for (u, w) in u_seq.iter().zip(w_seq) {
            let next = self.advance(states.last().expect("non-empty"), u, w);
            states.push(next);
        }
        Ok(states)
    }

    /// Splits a run into the nominal trajectory (inputs only, from `x_1`) and
    /// the disturbance response (disturbances only, from the origin).
    pub fn simulate_decomposed(
        &self,
        x1: &Vector,
        u_seq: &[Vector],
        w_seq: &[Vector],
    ) -> Result<Decomposition> {
        self.check_sequences(x1, u_seq, w_seq)?;
        let horizon = u_seq.len() + 1;
        let mut nominal = Vec::with_capacity(horizon);
        let mut disturbance = Vec::with_capacity(horizon);
        nominal.push(x1.clone());
        disturbance.push(Vector::zeros(self.state_dim()));
        for (u, w) in u_seq.iter().zip(w_seq) {
            let xn = self.advance_nominal(nominal.last().expect("non-empty"), u);
            let mut xd = self.a.mul_vec(disturbance.last().expect("non-empty"));
            xd.axpy(1.0, w);
            nominal.push(xn);
            disturbance.push(xd);
        }
        let full = nominal.iter().zip(&disturbance).map(|(n, d)| n + d).collect();
        Ok(Decomposition {
            nominal,
            disturbance,
            full,
        })
    }

    /// Disturbance response `x^d_1..x^d_T` alone.
    pub fn disturbance_response(&self, w_seq: &[Vector]) -> Vec<Vector> {
        let mut out = Vec::with_capacity(w_seq.len() + 1);
        out.push(Vector::zeros(self.state_dim()));
        for w in w_seq {
            let mut next = self.a.mul_vec(out.last().expect("non-empty"));
            next.axpy(1.0, w);
            out.push(next);
        }
        out
    }

    fn check_sequences(&self, x1: &Vector, u_seq: &[Vector], w_seq: &[Vector]) -> Result<()> {
        x1.check_dim(self.state_dim(), "initial state")?;
        if u_seq.len() != w_seq.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} disturbances",
                u_seq.len(),
                w_seq.len()
            )));
        }
        for u in u_seq {
            u.check_dim(self.input_dim(), "input")?;
        }
        for w in w_seq {
            w.check_dim(self.state_dim(), "disturbance")?;
        }
        Ok(())
    }
}

/// Superposition split `x_t = x̄_t + x^d_t`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub nominal: Vec<Vector>,
    pub disturbance: Vec<Vector>,
    pub full: Vec<Vector>,
}

/// Constants with `‖A^k‖ ≤ κ(1−γ)^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityCert {
    pub gamma: f64,
    pub kappa: f64,
    /// The radius estimate γ was derived from.
    pub radius_estimate: f64,
}

impl StabilityCert {
    /// `κ (1−γ)^k`
    pub fn decay_bound(&self, k: usize) -> f64 {
        self.kappa * (1.0 - self.gamma).powi(k as i32)
    }
}

/// Certifies strong stability from the decay of `‖A^k‖`.
///
/// `γ = 0.95 (1 − ρ̂)` with `ρ̂ = ‖A^64‖^(1/64)`, and κ is the smallest
/// constant satisfying the decay inequality for `k ≤ K_CHECK`. The zero
/// matrix gets `γ = 1`.
pub fn certify_strong_stability(a: &Matrix) -> Result<StabilityCert> {
    let radius = spectral_radius_estimate(a, RADIUS_POWER)?;
    if radius >= 1.0 {
        return Err(Error::NotStronglyStable { radius });
    }
    if a.is_zero() {
        return Ok(StabilityCert {
            gamma: 1.0,
            kappa: 1.0,
            radius_estimate: 0.0,
        });
    }
    let gap = 1.0 - radius;
    let gamma = (gap - GAMMA_MARGIN * gap).clamp(f64::MIN_POSITIVE, 1.0);
    let rate = 1.0 - gamma;
    let mut kappa: f64 = 1.0;
    let mut power = Matrix::identity(a.rows());
    let mut decay = 1.0;
    for _ in 1..=K_CHECK {
        power = power.matmul(a);
        decay *= rate;
        if decay == 0.0 {
            break;
        }
        let norm = spectral_norm(&power)?;
        if norm == 0.0 {
            break;
        }
        kappa = kappa.max(norm / decay);
    }
    Ok(StabilityCert {
        gamma,
        kappa,
        radius_estimate: radius,
    })
}

/// Axis-aligned box `{v : lower ≤ v ≤ upper}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxBounds", into = "BoxBounds")]
pub struct BoxSet {
    lower: Vector,
    upper: Vector,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxBounds> for BoxSet {
    type Error = Error;
    fn try_from(b: BoxBounds) -> Result<Self> {
        BoxSet::new(b.lower.into(), b.upper.into())
    }
}

impl From<BoxSet> for BoxBounds {
    fn from(b: BoxSet) -> Self {
        BoxBounds {
            lower: b.lower.into_vec(),
            upper: b.upper.into_vec(),
        }
    }
}

impl BoxSet {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::invalid(format!(
                "box bounds have dimensions {} and {}",
                lower.dim(),
                upper.dim()
            )));
        }
        lower.ensure_finite("box lower bound")?;
        upper.ensure_finite("box upper bound")?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::invalid(format!(
                "box lower bound exceeds upper bound in coordinate {i}"
            )));
        }
        Ok(BoxSet { lower, upper })
    }

    /// `[−r, r]^dim`
    pub fn symmetric(dim: usize, r: f64) -> Result<Self> {
        Self::new(Vector::filled(dim, -r), Vector::filled(dim, r))
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        Self::new(point.clone(), point)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    pub fn center(&self) -> Vector {
        (&self.lower + &self.upper).scaled(0.5)
    }

    pub fn contains(&self, v: &Vector) -> bool {
        v.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lower[i] <= v[i] && v[i] <= self.upper[i])
    }

    /// Euclidean projection onto the box.
    pub fn clamp(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i| v[i].clamp(self.lower[i], self.upper[i]))
    }

    /// Largest Euclidean norm over the box, attained at the corner of
    /// largest magnitude.
    pub fn max_norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let m = self.lower[i].abs().max(self.upper[i].abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Uniform bound `D` on `‖x_t‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateBound {
    pub radius: f64,
}

/// `D = κ‖x₁‖ + (κ/γ)(‖B‖ u_max + w_max)`, floored at `1e-12`.
pub fn state_bound(
    cert: &StabilityCert,
    sys: &LtiSystem,
    x1: &Vector,
    u_set: &BoxSet,
    w_set: &BoxSet,
) -> Result<StateBound> {
    x1.check_dim(sys.state_dim(), "initial state")?;
    u_set.lower().check_dim(sys.input_dim(), "input box")?;
    w_set.lower().check_dim(sys.state_dim(), "disturbance box")?;
    let b_norm = spectral_norm(sys.b())?;
    let d = cert.kappa * x1.norm()
        + cert.kappa / cert.gamma * (b_norm * u_set.max_norm() + w_set.max_norm());
    Ok(StateBound {
        radius: d.max(STATE_BOUND_FLOOR),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{assert_close, random_vector, rng};
    use rand::Rng;

    fn scalar(a: f64, b: f64) -> LtiSystem {
        LtiSystem::new(Matrix::diag(&[a]), Matrix::diag(&[b])).unwrap()
    }

    fn reference_system() -> LtiSystem {
        let a = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.0, 1.0, 0.2], [0.2, 0.0, 1.0]])
            .unwrap()
            .scaled(1.0 / 3.6);
        let b = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]).unwrap();
        LtiSystem::new(a, b).unwrap()
    }

    #[test]
    fn rejects_unstable_and_misshapen() {
        let r = LtiSystem::new(Matrix::diag(&[1.5]), Matrix::diag(&[1.0]));
        assert!(matches!(r, Err(Error::NotStronglyStable { radius }) if radius > 1.4));
        assert!(LtiSystem::new(Matrix::zeros(2, 3), Matrix::zeros(2, 1)).is_err());
        assert!(LtiSystem::new(Matrix::zeros(2, 2), Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn step_examples() {
        let sys = reference_system();
        let z = sys
            .step(&Vector::zeros(3), &Vector::zeros(2), &Vector::zeros(3))
            .unwrap();
        assert_eq!(z, Vector::zeros(3));

        let s = scalar(0.5, 1.0);
        let x = s
            .step(&Vector::from([2.0]), &Vector::from([1.0]), &Vector::from([0.25]))
            .unwrap();
        assert_eq!(x[0], 2.25);

        // A e1 is the first column of A, B e1 the first column of B.
        let x = sys
            .step(&Vector::basis(3, 0), &Vector::basis(2, 0), &Vector::zeros(3))
            .unwrap();
        let expected = [1.0 / 3.6, 0.0, 0.2 / 3.6 + 1.0];
        for i in 0..3 {
            assert_close!(x[i], expected[i], 1e-15);
        }
        assert!(sys
            .step(&Vector::zeros(2), &Vector::zeros(2), &Vector::zeros(3))
            .is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = certify_strong_stability(&Matrix::diag(&[0.5])).unwrap();
        assert_close!(c.gamma, 0.475, 1e-12);
        assert_eq!(c.kappa, 1.0);

        let c = certify_strong_stability(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!((c.gamma, c.kappa), (1.0, 1.0));

        let sys = reference_system();
        let c = certify_strong_stability(sys.a()).unwrap();
        assert_close!(c.gamma, 0.95 * (2.0 / 3.0), 1e-9);
        assert!(c.kappa >= 1.0 && c.kappa.is_finite());

        assert!(matches!(
            certify_strong_stability(&Matrix::diag(&[1.0])),
            Err(Error::NotStronglyStable { .. })
        ));
    }

    #[test]
    fn certificate_handles_nilpotent() {
        let a = Matrix::from_rows(&[[0.0, 3.0], [0.0, 0.0]]).unwrap();
        let c = certify_strong_stability(&a).unwrap();
        assert!(c.gamma < 1.0);
        assert!(spectral_norm(&a).unwrap() <= c.decay_bound(1) * (1.0 + 1e-12));
    }

    #[test]
    fn certificate_decay_holds_for_non_normal() {
        let a = Matrix::from_rows(&[[0.6, 2.0], [0.0, 0.5]]).unwrap();
        let c = certify_strong_stability(&a).unwrap();
        assert!(c.kappa > 1.0);
        for k in 0..=K_CHECK {
            let n = spectral_norm(&a.pow(k)).unwrap();
            assert!(n <= c.decay_bound(k) * (1.0 + 1e-9), "k = {k}");
        }
    }

    #[test]
    fn steady_state_examples() {
        let sys = scalar(0.5, 1.0);
        assert_eq!(sys.steady_state_of_input(&Vector::from([0.0])).unwrap()[0], 0.0);
        assert_close!(sys.steady_state_of_input(&Vector::from([1.0])).unwrap()[0], 2.0, 1e-15);

        // Independent route: iterate the dynamics to convergence.
        let p = reference_system();
        let u = Vector::from([1.0, 0.0]);
        let mut x = Vector::zeros(3);
        for _ in 0..200 {
            x = p.advance(&x, &u, &Vector::zeros(3));
        }
        let z = p.steady_state_of_input(&u).unwrap();
        assert!(x.distance(&z) < 1e-13);
    }

    #[test]
    fn input_for_steady_state_examples() {
        let sys = scalar(0.5, 1.0);
        let u = sys.input_for_steady_state(&Vector::from([2.0]), None).unwrap();
        assert_close!(u[0], 1.0, 1e-14);
        let u = sys.input_for_steady_state(&Vector::from([0.0]), None).unwrap();
        assert_eq!(u[0], 0.0);

        let degenerate = LtiSystem::new(Matrix::diag(&[0.5, 0.5]), Matrix::zeros(2, 1)).unwrap();
        let r = degenerate.input_for_steady_state(&Vector::from([1.0, 0.0]), None);
        assert!(matches!(r, Err(Error::UnreachableTarget { .. })));
    }

    #[test]
    fn steady_state_round_trip() {
        let sys = reference_system();
        let mut r = rng(7);
        for _ in 0..100 {
            let u = random_vector(&mut r, 2, 3.0);
            let z = sys.steady_state_of_input(&u).unwrap();
            let back = sys.input_for_steady_state(&z, None).unwrap();
            let residual = sys.b().mul_vec(&back).distance(&sys.i_minus_a().mul_vec(&z));
            assert!(residual <= STEADY_STATE_TOL * (1.0 + z.norm()));
            assert!(back.distance(&u) < 1e-8);
        }
    }

    #[test]
    fn decomposition_examples() {
        let sys = reference_system();
        let mut r = rng(3);
        let x1 = random_vector(&mut r, 3, 1.0);
        let us: Vec<_> = (0..6).map(|_| random_vector(&mut r, 2, 1.0)).collect();
        let zeros_w = vec![Vector::zeros(3); 6];
        let d = sys.simulate_decomposed(&x1, &us, &zeros_w).unwrap();
        assert!(d.disturbance.iter().all(|v| v.max_abs() == 0.0));
        assert_eq!(d.full, d.nominal);

        let ws: Vec<_> = (0..6).map(|_| random_vector(&mut r, 3, 1.0)).collect();
        let d = sys
            .simulate_decomposed(&Vector::zeros(3), &vec![Vector::zeros(2); 6], &ws)
            .unwrap();
        assert!(d.nominal.iter().all(|v| v.max_abs() == 0.0));
        assert_eq!(d.full, d.disturbance);

        assert!(sys.simulate_decomposed(&x1, &us[..3], &ws).is_err());
    }

    #[test]
    fn decomposition_matches_direct_simulation() {
        let sys = scalar(0.7, -1.3);
        let mut r = rng(11);
        let x1 = random_vector(&mut r, 1, 2.0);
        let us: Vec<_> = (0..4).map(|_| random_vector(&mut r, 1, 1.0)).collect();
        let ws: Vec<_> = (0..4).map(|_| random_vector(&mut r, 1, 1.0)).collect();
        let direct = sys.simulate(&x1, &us, &ws).unwrap();
        let d = sys.simulate_decomposed(&x1, &us, &ws).unwrap();
        assert_eq!(direct.len(), 5);
        for (a, b) in direct.iter().zip(&d.full) {
            assert!((a[0] - b[0]).abs() <= 1e-12 * (1.0 + a[0].abs()));
        }
    }

    #[test]
    fn state_bound_examples() {
        let sys = scalar(0.5, 1.0);
        let cert = certify_strong_stability(sys.a()).unwrap();
        let zero1 = BoxSet::singleton(Vector::zeros(1)).unwrap();
        let d = state_bound(&cert, &sys, &Vector::zeros(1), &zero1, &zero1).unwrap();
        assert_eq!(d.radius, STATE_BOUND_FLOOR);

        let u_set = BoxSet::symmetric(1, 1.0).unwrap();
        let d = state_bound(&cert, &sys, &Vector::zeros(1), &u_set, &zero1).unwrap();
        assert_close!(d.radius, 1.0 / 0.475, 1e-12);

        // Sampling check: random admissible input sequences stay inside D.
        let mut r = rng(5);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let mut x = Vector::zeros(1);
            for _ in 0..30 {
                let u = Vector::from([r.random_range(-1.0..=1.0)]);
                x = sys.advance(&x, &u, &Vector::zeros(1));
                worst = worst.max(x.norm());
            }
        }
        // The extreme constant input approaches 1/(1−a) = 2 < D.
        let mut x = Vector::zeros(1);
        for _ in 0..60 {
            x = sys.advance(&x, &Vector::from([1.0]), &Vector::zeros(1));
            worst = worst.max(x.norm());
        }
        assert!(worst <= d.radius);
        assert!(worst > 1.99);

        let w1 = BoxSet::symmetric(1, 0.5).unwrap();
        let w2 = BoxSet::symmetric(1, 1.0).unwrap();
        let d1 = state_bound(&cert, &sys, &Vector::zeros(1), &zero1, &w1).unwrap();
        let d2 = state_bound(&cert, &sys, &Vector::zeros(1), &zero1, &w2).unwrap();
        assert_close!(d2.radius, 2.0 * d1.radius, 1e-14);
    }

    #[test]
    fn geometric_tracking_under_constant_input() {
        let sys = reference_system();
        let cert = certify_strong_stability(sys.a()).unwrap();
        let mut r = rng(13);
        for _ in 0..20 {
            let u = random_vector(&mut r, 2, 2.0);
            let z = sys.steady_state_of_input(&u).unwrap();
            let mut x = random_vector(&mut r, 3, 5.0);
            let e1 = x.distance(&z);
            for t in 1..=60 {
                let bound = cert.decay_bound(t - 1) * e1;
                assert!(x.distance(&z) <= bound + 1e-12 * (1.0 + z.norm()), "t = {t}");
                x = sys.advance(&x, &u, &Vector::zeros(3));
            }
        }
    }

    #[test]
    fn neumann_partial_sums() {
        let sys = reference_system();
        let cert = certify_strong_stability(sys.a()).unwrap();
        for k_max in [5usize, 20, 50] {
            let mut sum = Matrix::zeros(3, 3);
            let mut p = Matrix::identity(3);
            for _ in 0..=k_max {
                sum.axpy(1.0, &p);
                p = p.matmul(sys.a());
            }
            let residual = &sys.i_minus_a().matmul(&sum) - &Matrix::identity(3);
            let lhs = spectral_norm(&residual).unwrap();
            let rhs = cert.decay_bound(k_max + 1) / cert.gamma;
            assert!(lhs <= rhs + 1e-15, "K = {k_max}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn box_set_validation_and_geometry() {
        assert!(BoxSet::new(Vector::from([1.0]), Vector::from([0.0])).is_err());
        assert!(BoxSet::new(Vector::from([0.0]), Vector::from([0.0, 1.0])).is_err());
        let b = BoxSet::new(Vector::from([-1.0, -3.0]), Vector::from([2.0, 1.0])).unwrap();
        assert_close!(b.max_norm(), 13f64.sqrt(), 1e-15);
        assert_eq!(b.clamp(&Vector::from([5.0, -5.0])), Vector::from([2.0, -3.0]));
        assert!(b.contains(&Vector::from([0.0, 0.0])));
        let json = serde_json::to_string(&b).unwrap();
        let back: BoxSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BoxSet>(r#"{"lower":[1],"upper":[0]}"#).is_err());
    }
}
