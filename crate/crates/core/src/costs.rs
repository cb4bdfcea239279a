//! Convex cost oracles.

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, Vector};
use crate::system::StateBound;

/// Entrywise symmetry tolerance, relative to `1 + max|Q_ij|`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Number of Rayleigh quotients sampled by the semidefiniteness check.
pub const PSD_SAMPLES: usize = 50;
/// Most negative Rayleigh quotient accepted, relative to `1 + max|Q_ij|`.
pub const PSD_TOL: f64 = 1e-10;

/// A differentiable convex function of the state.
pub trait CostOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

impl<C: CostOracle + ?Sized> CostOracle for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (**self).gradient(x)
    }
}

/// `f(x) = (x − c)ᵀ Q (x − c)` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCost {
    q: Matrix,
    center: Vector,
}

impl QuadraticCost {
    pub fn new(q: Matrix, center: Vector) -> Result<Self> {
        if !q.is_square() || q.rows() != center.dim() {
            return Err(Error::invalid(format!(
                "quadratic cost: Q is {}x{} but c has dimension {}",
                q.rows(),
                q.cols(),
                center.dim()
            )));
        }
        q.ensure_finite("Q")?;
        center.ensure_finite("c")?;
        let scale = 1.0 + q.max_abs();
        if q.asymmetry() > SYMMETRY_TOL * scale {
            return Err(Error::invalid("quadratic cost: Q is not symmetric"));
        }
        let min_rayleigh = sampled_min_rayleigh(&q);
        if min_rayleigh < -PSD_TOL * scale {
            return Err(Error::invalid(format!(
                "quadratic cost: Q is not positive semidefinite (Rayleigh quotient {min_rayleigh:.3e})"
            )));
        }
        Ok(QuadraticCost { q, center })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    /// `(x − c)ᵀ Q (x − c)`
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim(), "quadratic cost argument")?;
        Ok(self.value(x))
    }

    /// `2 Q (x − c)`
    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim(), "quadratic cost argument")?;
        Ok(self.gradient(x))
    }

    /// The same quadratic seen through `x̄ ↦ x̄ + shift`; its center moves to
    /// `c − shift`.
    pub fn shifted(&self, shift: &Vector) -> QuadraticCost {
        QuadraticCost {
            q: self.q.clone(),
            center: &self.center - shift,
        }
    }
}

impl CostOracle for QuadraticCost {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        self.q.quadratic_form(&d)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let d = x - &self.center;
        self.q.mul_vec(&d).scaled(2.0)
    }
}

fn sampled_min_rayleigh(q: &Matrix) -> f64 {
    let n = q.rows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = rand_pcg::Pcg64::seed_from_u64(0x5eed_0f95d);
    let mut worst = f64::INFINITY;
    for k in 0..PSD_SAMPLES {
        let v = if k < n {
            Vector::basis(n, k)
        } else {
            Vector::from_fn(n, |_| rng.random_range(-1.0..1.0))
        };
        let norm2 = v.norm_squared();
        if norm2 > 0.0 {
            worst = worst.min(q.quadratic_form(&v) / norm2);
        }
    }
    worst
}

/// `g(x̄) = f(x̄ + shift)`: the cost seen by the nominal, disturbance-free
/// trajectory when the disturbance response is `shift`.
#[derive(Clone, Debug)]
pub struct NominalCost<C> {
    inner: C,
    shift: Vector,
}

impl<C: CostOracle> NominalCost<C> {
    pub fn shift(&self) -> &Vector {
        &self.shift
    }
}

impl<C: CostOracle> CostOracle for NominalCost<C> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(&(x + &self.shift))
    }

    /// Equal to `∇f(x̄ + shift)`: the shift is affine with identity Jacobian.
    fn gradient(&self, x: &Vector) -> Vector {
        self.inner.gradient(&(x + &self.shift))
    }
}

pub fn nominal_cost<C: CostOracle>(cost: C, x_d: &Vector) -> Result<NominalCost<C>> {
    x_d.check_dim(cost.dim(), "disturbance state")?;
    Ok(NominalCost {
        inner: cost,
        shift: x_d.clone(),
    })
}

/// Smoothness constant `L` with `‖∇f_t(x)‖ ≤ L·D` on `‖x‖ ≤ D`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SmoothnessParams {
    pub l: f64,
    pub d: f64,
}

/// `L = 2 · max_t ‖Q_t‖ · (D + c_max) / D`, where `c_max` bounds `‖c_t‖`.
pub fn smoothness_constant(
    costs: &[QuadraticCost],
    bound: StateBound,
    c_max: f64,
) -> Result<SmoothnessParams> {
    if costs.is_empty() {
        return Err(Error::invalid("smoothness constant of an empty cost sequence"));
    }
    let d = bound.radius;
    if d <= 0.0 {
        return Err(Error::invalid("state bound must be positive"));
    }
    if c_max < 0.0 || !c_max.is_finite() {
        return Err(Error::invalid("c_max must be finite and non-negative"));
    }
    let mut q_max: f64 = 0.0;
    for c in costs {
        q_max = q_max.max(spectral_norm(c.q())?);
    }
    Ok(SmoothnessParams {
        l: 2.0 * q_max * (d + c_max) / d,
        d,
    })
}

/// Central-difference gradient; `h` defaults to `1e-5 · (1 + ‖x‖)`.
pub fn finite_diff_grad<C: CostOracle + ?Sized>(oracle: &C, x: &Vector, h: Option<f64>) -> Vector {
    let h = h.unwrap_or(1e-5 * (1.0 + x.norm()));
    let mut probe = x.clone();
    Vector::from_fn(x.dim(), |i| {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = oracle.value(&probe);
        probe[i] = orig - h;
        let down = oracle.value(&probe);
        probe[i] = orig;
        (up - down) / (2.0 * h)
    })
}
