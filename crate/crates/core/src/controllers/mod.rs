//! Online policies and the shared round protocol.
//!
//! Each round the controller sees the state `x_t` and returns `u_t`
//! ([`Controller::act`]); the environment then charges `f_t(x_t)`, reveals
//! the feedback and advances the plant, after which the controller gets
//! [`Controller::observe`] with the gradient at the pre-transition state and
//! the next state.

mod dac;
mod olc;
mod projection;

pub use dac::{dac_act, dac_estimate_disturbance, dac_update, Dac, DacState};
pub use olc::{olc_act, olc_update, olcxu_update, theorem1_step_size, Olc, OlcState, OlcXuState};
pub use projection::{
    project_steady_state, project_steady_state_pair, Projection, PROJECTION_CAP,
    PROJECTION_FAIL_MOVEMENT, PROJECTION_TOL,
};

use crate::costs::CostOracle;
use crate::error::Result;
use crate::linalg::Vector;

/// What the learner receives after acting in round `t`.
pub struct Feedback<'a> {
    /// `x_t`
    pub state: &'a Vector,
    /// `u_t`
    pub input: &'a Vector,
    /// `f_t`, for learners that use more than first-order feedback.
    pub cost: &'a dyn CostOracle,
    /// `∇f_t(x_t)`
    pub gradient: &'a Vector,
    /// `x_{t+1}`
    pub next_state: &'a Vector,
}

pub trait Controller {
    /// Picks `u_t` given `x_t`. The result always lies in the input box.
    fn act(&mut self, state: &Vector) -> Result<Vector>;

    /// Consumes the round's feedback. Called once per round, after `act`.
    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()>;
}
