use std::collections::VecDeque;

use crate::controllers::{Controller, Feedback};
use crate::costs::CostOracle;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, Vector};
use crate::system::{BoxSet, LtiSystem, StabilityCert};

/// Parameters and disturbance memory of the disturbance-action baseline.
///
/// `history[k]` holds `w_{t−1−k}`; it keeps `2·H + 1` entries so the
/// surrogate state can reach back `H` steps past the oldest input it
/// replays.
#[derive(Clone, Debug, PartialEq)]
pub struct DacState {
    blocks: Vec<Matrix>,
    history: VecDeque<Vector>,
    pub eta_g: f64,
    pub radius: f64,
    /// `1 − γ`: block `i` lives in a Frobenius ball of radius `radius·decay^i`.
    pub decay: f64,
}

impl DacState {
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        h_mem: usize,
        eta_g: f64,
        radius: f64,
        gamma: f64,
    ) -> Result<Self> {
        if h_mem == 0 {
            return Err(Error::invalid("DAC memory length must be at least 1"));
        }
        if !(eta_g >= 0.0 && eta_g.is_finite()) {
            return Err(Error::invalid(format!("DAC step size must be non-negative, got {eta_g}")));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("DAC radius must be non-negative, got {radius}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!("stability margin must lie in (0, 1], got {gamma}")));
        }
        Ok(DacState {
            blocks: vec![Matrix::zeros(input_dim, state_dim); h_mem],
            history: std::iter::repeat_n(Vector::zeros(state_dim), 2 * h_mem + 1).collect(),
            eta_g,
            radius,
            decay: 1.0 - gamma,
        })
    }

    /// Default knobs: `η_g = 1/√T` and `radius = κ³‖B‖`.
    pub fn with_defaults(
        sys: &LtiSystem,
        cert: &StabilityCert,
        h_mem: usize,
        horizon: usize,
    ) -> Result<Self> {
        let eta_g = 1.0 / (horizon.max(1) as f64).sqrt();
        let radius = cert.kappa.powi(3) * spectral_norm(sys.b())?;
        Self::new(sys.state_dim(), sys.input_dim(), h_mem, eta_g, radius, cert.gamma)
    }

    pub fn h_mem(&self) -> usize {
        self.blocks.len()
    }

    fn state_dim(&self) -> usize {
        self.blocks[0].cols()
    }

    fn input_dim(&self) -> usize {
        self.blocks[0].rows()
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    /// Replaces `M^{[i]}` without projecting.
    pub fn set_block(&mut self, i: usize, m: Matrix) -> Result<()> {
        if i >= self.blocks.len() {
            return Err(Error::invalid(format!("block index {i} out of range")));
        }
        if m.rows() != self.input_dim() || m.cols() != self.state_dim() {
            return Err(Error::invalid(format!(
                "DAC block must be {}x{}, got {}x{}",
                self.input_dim(),
                self.state_dim(),
                m.rows(),
                m.cols()
            )));
        }
        self.blocks[i] = m;
        Ok(())
    }

    /// `history()[k] = w_{t−1−k}`.
    pub fn history(&self) -> &VecDeque<Vector> {
        &self.history
    }

    /// Records `w_t`, dropping the oldest entry.
    pub fn push_disturbance(&mut self, w: Vector) -> Result<()> {
        w.check_dim(self.state_dim(), "disturbance")?;
        self.history.pop_back();
        self.history.push_front(w);
        Ok(())
    }

    /// `Σ_{j=1}^{H} M^{[j−1]} w_{t−j}` before clamping.
    pub fn raw_action(&self) -> Vector {
        self.replay(0)
    }

    /// The input the current parameters would have produced `i` rounds ago:
    /// `Σ_j M^{[j−1]} history[i + j − 1]`.
    fn replay(&self, i: usize) -> Vector {
        let mut u = Vector::zeros(self.input_dim());
        for (j, m) in self.blocks.iter().enumerate() {
            u.axpy(1.0, &m.mul_vec(&self.history[i + j]));
        }
        u
    }

    /// `y_t(M)`: the state reached had the current parameters been played for
    /// the last `H + 1` rounds from rest.
    pub fn surrogate_state(&self, sys: &LtiSystem) -> Result<Vector> {
        self.check_system(sys)?;
        let h = self.h_mem();
        let a = sys.a();
        // Horner: y = Σ_{i=0}^{H} A^i (w_{t−1−i} + B u_{t−1−i}).
        let mut y = Vector::zeros(self.state_dim());
        for i in (0..=h).rev() {
            let mut term = self.history[i].clone();
            term.axpy(1.0, &sys.b().mul_vec(&self.replay(i + 1)));
            y = a.mul_vec(&y);
            y.axpy(1.0, &term);
        }
        Ok(y)
    }

    /// `ℓ_t(M) = f_t(y_t(M))`
    pub fn surrogate_loss(&self, cost: &dyn CostOracle, sys: &LtiSystem) -> Result<f64> {
        Ok(cost.value(&self.surrogate_state(sys)?))
    }

    /// `∇_{M^{[j−1]}} ℓ_t = Σ_i (AⁱB)ᵀ ∇f_t(y_t) w_{t−1−i−j}ᵀ`
    pub fn surrogate_gradient(&self, cost: &dyn CostOracle, sys: &LtiSystem) -> Result<Vec<Matrix>> {
        let y = self.surrogate_state(sys)?;
        let g = cost.gradient(&y);
        g.check_dim(self.state_dim(), "cost gradient")?;
        let h = self.h_mem();
        let mut grads = vec![Matrix::zeros(self.input_dim(), self.state_dim()); h];
        // back = (AⁱB)ᵀ g, built as Bᵀ (Aᵀ)ⁱ g.
        let mut lam = g;
        for i in 0..=h {
            let back = sys.b().tr_mul_vec(&lam);
            for (j, grad) in grads.iter_mut().enumerate() {
                grad.axpy(1.0, &Matrix::outer(&back, &self.history[i + j + 1]));
            }
            lam = sys.a().tr_mul_vec(&lam);
        }
        Ok(grads)
    }

    /// Scales each block back into its Frobenius ball.
    pub fn project(&mut self) {
        let mut r = self.radius;
        for m in &mut self.blocks {
            let norm = m.frobenius_norm();
            if norm > r {
                *m = if r > 0.0 { m.scaled(r / norm) } else { m.scaled(0.0) };
            }
            r *= self.decay;
        }
    }

    /// One projected gradient step on the surrogate loss.
    pub fn update(&mut self, cost: &dyn CostOracle, sys: &LtiSystem) -> Result<()> {
        let grads = self.surrogate_gradient(cost, sys)?;
        for (m, g) in self.blocks.iter_mut().zip(&grads) {
            m.axpy(-self.eta_g, g);
        }
        self.project();
        Ok(())
    }

    fn check_system(&self, sys: &LtiSystem) -> Result<()> {
        if sys.state_dim() != self.state_dim() || sys.input_dim() != self.input_dim() {
            return Err(Error::invalid(format!(
                "DAC state is for N={}, M={} but the system has N={}, M={}",
                self.state_dim(),
                self.input_dim(),
                sys.state_dim(),
                sys.input_dim()
            )));
        }
        Ok(())
    }
}

/// `Π_U(Σ_i M^{[i−1]} w_{t−i})`
pub fn dac_act(state: &DacState, u_set: &BoxSet) -> Vector {
    u_set.clamp(&state.raw_action())
}

/// Functional form of [`DacState::update`].
pub fn dac_update(state: &DacState, cost: &dyn CostOracle, sys: &LtiSystem) -> Result<DacState> {
    let mut next = state.clone();
    next.update(cost, sys)?;
    Ok(next)
}

/// `w_t = x_{t+1} − A x_t − B u_t`
pub fn dac_estimate_disturbance(
    sys: &LtiSystem,
    x: &Vector,
    u: &Vector,
    x_next: &Vector,
) -> Result<Vector> {
    x.check_dim(sys.state_dim(), "state")?;
    x_next.check_dim(sys.state_dim(), "next state")?;
    u.check_dim(sys.input_dim(), "input")?;
    Ok(&(x_next - &sys.a().mul_vec(x)) - &sys.b().mul_vec(u))
}

/// Disturbance-action baseline: learns a linear map from recent disturbances
/// to inputs by online gradient descent on a truncated counterfactual loss.
#[derive(Clone, Debug)]
pub struct Dac {
    sys: LtiSystem,
    u_set: BoxSet,
    state: DacState,
}

impl Dac {
    pub fn new(sys: LtiSystem, u_set: BoxSet, state: DacState) -> Result<Self> {
        state.check_system(&sys)?;
        u_set.lower().check_dim(sys.input_dim(), "input box")?;
        Ok(Dac { sys, u_set, state })
    }

    pub fn state(&self) -> &DacState {
        &self.state
    }
}

impl Controller for Dac {
    fn act(&mut self, _state: &Vector) -> Result<Vector> {
        Ok(dac_act(&self.state, &self.u_set))
    }

    /// Steps on `f_t` with the history up to `w_{t−1}`, then records `w_t`.
    fn observe(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        self.state.update(feedback.cost, &self.sys)?;
        let w = dac_estimate_disturbance(
            &self.sys,
            feedback.state,
            feedback.input,
            feedback.next_state,
        )?;
        self.state.push_disturbance(w)
    }
}
