//! Euclidean projection onto the steady-state manifold.
//!
//! The manifold `X = { S u : u ∈ U }` with `S = (I − A)⁻¹ B` is the linear
//! image of the input box, so projecting `y` amounts to the box-constrained
//! least-squares problem `min_{u ∈ U} ‖S u − y‖²`, solved here by projected
//! gradient descent with the fixed step `1 / ‖S‖²`.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::{BoxSet, LtiSystem};

/// Stop once an iterate moves less than this.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Iteration cap for the inner solver.
pub const PROJECTION_CAP: usize = 5000;
/// Hitting the cap with a last movement above this is a failure.
pub const PROJECTION_FAIL_MOVEMENT: f64 = 1e-6;

/// A manifold point together with an admissible input that holds it.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vector,
    pub input: Vector,
    pub iterations: usize,
}

/// `Π_X(y)`
pub fn project_steady_state(sys: &LtiSystem, u_set: &BoxSet, y: &Vector) -> Result<Projection> {
    y.check_dim(sys.state_dim(), "projection target")?;
    u_set.lower().check_dim(sys.input_dim(), "input box")?;
    let s = sys.steady_map();
    let lipschitz = sys.steady_norm_sq();
    // Warm start from the clamped unconstrained solution; interior targets
    // finish in one step.
    let start = u_set.clamp(&sys.steady_pinv().mul_vec(y));
    if lipschitz == 0.0 {
        return Ok(Projection {
            point: s.mul_vec(&start),
            input: start,
            iterations: 0,
        });
    }
    let step = 1.0 / lipschitz;
    let (input, iterations) = box_descent(u_set, start, |u| s.tr_mul_vec(&(&s.mul_vec(u) - y)), step)?;
    Ok(Projection {
        point: s.mul_vec(&input),
        input,
        iterations,
    })
}

/// Joint projection onto `X_u = { (S u, u) : u ∈ U }`:
/// `min_{u ∈ U} ‖S u − z‖² + ‖u − v‖²`.
pub fn project_steady_state_pair(
    sys: &LtiSystem,
    u_set: &BoxSet,
    z: &Vector,
    v: &Vector,
) -> Result<Projection> {
    z.check_dim(sys.state_dim(), "projection state target")?;
    v.check_dim(sys.input_dim(), "projection input target")?;
    let s = sys.steady_map();
    let step = 1.0 / (sys.steady_norm_sq() + 1.0);
    let start = u_set.clamp(v);
    let (input, iterations) = box_descent(
        u_set,
        start,
        |u| {
            let mut g = s.tr_mul_vec(&(&s.mul_vec(u) - z));
            g.axpy(1.0, &(u - v));
            g
        },
        step,
    )?;
    Ok(Projection {
        point: s.mul_vec(&input),
        input,
        iterations,
    })
}

/// Projected gradient descent on the box with a fixed step. `half_grad`
/// returns half the gradient of the least-squares objective.
fn box_descent(
    u_set: &BoxSet,
    mut u: Vector,
    half_grad: impl Fn(&Vector) -> Vector,
    step: f64,
) -> Result<(Vector, usize)> {
    let mut movement = f64::INFINITY;
    for it in 1..=PROJECTION_CAP {
        let g = half_grad(&u);
        let mut next = u.clone();
        next.axpy(-step, &g);
        let next = u_set.clamp(&next);
        movement = next.distance(&u);
        u = next;
        if movement < PROJECTION_TOL {
            return Ok((u, it));
        }
    }
    if movement > PROJECTION_FAIL_MOVEMENT {
        return Err(Error::ProjectionFailure {
            iterations: PROJECTION_CAP,
            movement,
        });
    }
    Ok((u, PROJECTION_CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::test_util::{assert_close, reference_system, random_vector, rng};

    fn scalar(a: f64) -> LtiSystem {
        LtiSystem::new(Matrix::diag(&[a]), Matrix::diag(&[1.0])).unwrap()
    }

    #[test]
    fn scalar_projection_clamps() {
        let sys = scalar(0.5);
        let u_set = BoxSet::symmetric(1, 1.0).unwrap();
        let p = project_steady_state(&sys, &u_set, &Vector::from([3.0])).unwrap();
        assert_close!(p.point[0], 2.0, 1e-12);
        let p = project_steady_state(&sys, &u_set, &Vector::from([-0.7])).unwrap();
        assert_close!(p.point[0], -0.7, 1e-12);
    }

    #[test]
    fn idempotent_on_manifold() {
        let sys = reference_system();
        let u_set = BoxSet::symmetric(2, 2.0).unwrap();
        let mut r = rng(21);
        for _ in 0..50 {
            let u = u_set.clamp(&random_vector(&mut r, 2, 3.0));
            let y = sys.steady_state_of_input(&u).unwrap();
            let p = project_steady_state(&sys, &u_set, &y).unwrap();
            assert!(p.point.distance(&y) < 1e-8);
            let again = project_steady_state(&sys, &u_set, &p.point).unwrap();
            assert!(again.point.distance(&p.point) < 1e-7);
        }
    }

    #[test]
    fn matches_grid_search() {
        let sys = reference_system();
        let u_set = BoxSet::symmetric(2, 2.0).unwrap();
        let s = sys.steady_map();
        let mut r = rng(22);
        for _ in 0..5 {
            let y = random_vector(&mut r, 3, 6.0);
            let p = project_steady_state(&sys, &u_set, &y).unwrap();
            let n = 400;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=n {
                    let u = Vector::from([
                        -2.0 + 4.0 * i as f64 / n as f64,
                        -2.0 + 4.0 * j as f64 / n as f64,
                    ]);
                    best = best.min(s.mul_vec(&u).distance(&y));
                }
            }
            let ours = p.point.distance(&y);
            assert!(ours <= best + 1e-9);
            assert!(best - ours < 1e-3);
        }
    }

    #[test]
    fn contraction() {
        let sys = reference_system();
        let u_set = BoxSet::new(Vector::from([-1.0, -0.5]), Vector::from([2.0, 1.0])).unwrap();
        let mut r = rng(23);
        for _ in 0..500 {
            let a = random_vector(&mut r, 3, 8.0);
            let b = random_vector(&mut r, 3, 8.0);
            let pa = project_steady_state(&sys, &u_set, &a).unwrap();
            let pb = project_steady_state(&sys, &u_set, &b).unwrap();
            assert!(pa.point.distance(&pb.point) <= a.distance(&b) + 2.0 * PROJECTION_TOL);
            assert!(u_set.contains(&pa.input));
        }
    }

    #[test]
    fn pair_projection_examples() {
        let sys = scalar(0.0);
        let u_set = BoxSet::symmetric(1, 2.0).unwrap();
        let p = project_steady_state_pair(&sys, &u_set, &Vector::from([0.3]), &Vector::from([0.1]))
            .unwrap();
        assert_close!(p.input[0], 0.2, 1e-9);
        assert_close!(p.point[0], 0.2, 1e-9);
    }
}
