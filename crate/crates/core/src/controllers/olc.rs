use crate::controllers::projection::{project_steady_state, project_steady_state_pair};
use crate::controllers::{Controller, Feedback};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::system::{BoxSet, LtiSystem, StabilityCert};

/// Target steady state and step size of the online linear controller.
#[derive(Clone, Debug, PartialEq)]
pub struct OlcState {
    pub z: Vector,
    pub eta: f64,
}

/// The constant input that holds the plant at `state.z`.
pub fn olc_act(state: &OlcState, sys: &LtiSystem) -> Result<Vector> {
    sys.input_for_steady_state(&state.z, None)
}

/// `z ← Π_X(z − η δ)`
pub fn olc_update(
    state: &OlcState,
    delta: &Vector,
    sys: &LtiSystem,
    u_set: &BoxSet,
) -> Result<OlcState> {
    delta.check_dim(sys.state_dim(), "gradient feedback")?;
    let mut pre = state.z.clone();
    pre.axpy(-state.eta, delta);
    let p = project_steady_state(sys, u_set, &pre)?;
    Ok(OlcState {
        z: p.point,
        eta: state.eta,
    })
}

/// `η = 2γ / (L √(T (1 + 4κ²)))`
pub fn theorem1_step_size(l: f64, horizon: usize, cert: &StabilityCert) -> f64 {
    let k2 = cert.kappa * cert.kappa;
    2.0 * cert.gamma / (l * (horizon as f64 * (1.0 + 4.0 * k2)).sqrt())
}

/// Online linear control: gradient steps on a target steady state, tracked
/// with the matching constant input.
#[derive(Clone, Debug)]
pub struct Olc {
    sys: LtiSystem,
    u_set: BoxSet,
    state: OlcState,
    /// An admissible input holding `state.z`, kept from the last projection.
    preimage: Vector,
}

impl Olc {
    /// Starts from `z₁ = Π_X(x₁)`.
    pub fn new(sys: LtiSystem, u_set: BoxSet, x1: &Vector, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {eta}")));
        }
        let p = project_steady_state(&sys, &u_set, x1)?;
        Ok(Olc {
            sys,
            u_set,
            state: OlcState { z: p.point, eta },
            preimage: p.input,
        })
    }

    pub fn state(&self) -> &OlcState {
        &self.state
    }

    pub fn target(&self) -> &Vector {
        &self.state.z
    }
}

impl Controller for Olc {
    /// Uses the minimum-norm input for the target; if `B` has a null space
    /// and that input leaves the box, falls back to the projection's
    /// admissible preimage, which holds the same steady state.
    fn act(&mut self, _state: &Vector) -> Result<Vector> {
        let u = olc_act(&self.state, &self.sys)?;
        if self.u_set.contains(&u) {
            return Ok(u);
        }
        let clamped = self.u_set.clamp(&u);
        if clamped.distance(&u) <= crate::system::STEADY_STATE_TOL * (1.0 + u.norm()) {
            Ok(clamped)
        } else {
            Ok(self.preimage.clone())
        }
    }

    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let delta = feedback.gradient;
        delta.check_dim(self.sys.state_dim(), "gradient feedback")?;
        let mut pre = self.state.z.clone();
        pre.axpy(-self.state.eta, delta);
        let p = project_steady_state(&self.sys, &self.u_set, &pre)?;
        self.state.z = p.point;
        self.preimage = p.input;
        Ok(())
    }
}

/// Joint state–input iterate for costs that depend on both.
#[derive(Clone, Debug, PartialEq)]
pub struct OlcXuState {
    pub z: Vector,
    pub u: Vector,
    pub eta: f64,
}

impl OlcXuState {
    /// Starts at the steady state of the projected input `Π_U(u0)`.
    pub fn new(sys: &LtiSystem, u_set: &BoxSet, u0: &Vector, eta: f64) -> Result<Self> {
        let u = u_set.clamp(u0);
        Ok(OlcXuState {
            z: sys.steady_state_of_input(&u)?,
            u,
            eta,
        })
    }
}

/// `(z, u) ← Π_{X_u}((z − η δ_x, u − η δ_u))`
pub fn olcxu_update(
    state: &OlcXuState,
    delta_x: &Vector,
    delta_u: &Vector,
    sys: &LtiSystem,
    u_set: &BoxSet,
) -> Result<OlcXuState> {
    delta_x.check_dim(sys.state_dim(), "state gradient")?;
    delta_u.check_dim(sys.input_dim(), "input gradient")?;
    let mut z = state.z.clone();
    z.axpy(-state.eta, delta_x);
    let mut u = state.u.clone();
    u.axpy(-state.eta, delta_u);
    let p = project_steady_state_pair(sys, u_set, &z, &u)?;
    Ok(OlcXuState {
        z: p.point,
        u: p.input,
        eta: state.eta,
    })
}
