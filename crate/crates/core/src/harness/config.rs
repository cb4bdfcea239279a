use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::SolverSettings;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, Vector};
use crate::system::{certify_strong_stability, state_bound, BoxSet, LtiSystem, StabilityCert, StateBound};

/// JSON experiment description. Matrices are row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n_runs: usize,
    pub system: SystemConfig,
    pub u_box: BoxSet,
    pub w_box: BoxSet,
    #[serde(default)]
    pub cost_gen: CostGenConfig,
    #[serde(default)]
    pub olc: OlcConfig,
    #[serde(default)]
    pub dac: DacConfig,
    pub disturbances_on: bool,
    pub output_dir: PathBuf,
    /// Initial state; zero when absent.
    #[serde(default)]
    pub x1: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

/// `Q_t = q_scale·(SᵀS/N + q_ridge·I)`, `c_t ~ c_center + U[−c_max, c_max]^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostGenConfig {
    pub q_scale: f64,
    pub q_ridge: f64,
    pub c_max: f64,
    /// Center of the target distribution; the origin when absent.
    pub c_center: Option<Vec<f64>>,
}

impl Default for CostGenConfig {
    fn default() -> Self {
        CostGenConfig {
            q_scale: 1.0,
            q_ridge: 0.1,
            c_max: 5.0,
            c_center: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OlcConfig {
    #[serde(default)]
    pub eta_override: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DacConfig {
    #[serde(rename = "H_mem")]
    pub h_mem: usize,
    /// Defaults to `1/√T`.
    pub eta_g: Option<f64>,
    /// Defaults to `κ³‖B‖`.
    pub radius: Option<f64>,
}

impl Default for DacConfig {
    fn default() -> Self {
        DacConfig {
            h_mem: 10,
            eta_g: None,
            radius: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant and derives the quantities shared by all runs.
    pub fn validate(&self) -> Result<Setup> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon < 2 {
            return bad(format!("T must be at least 2, got {}", self.horizon));
        }
        if self.n_runs == 0 {
            return bad("n_runs must be at least 1".into());
        }
        let g = &self.cost_gen;
        if !(g.q_scale > 0.0 && g.q_scale.is_finite()) {
            return bad(format!("cost_gen.q_scale must be positive, got {}", g.q_scale));
        }
        if !(g.q_ridge >= 0.0 && g.q_ridge.is_finite()) {
            return bad(format!("cost_gen.q_ridge must be non-negative, got {}", g.q_ridge));
        }
        if !(g.c_max >= 0.0 && g.c_max.is_finite()) {
            return bad(format!("cost_gen.c_max must be non-negative, got {}", g.c_max));
        }
        if self.dac.h_mem == 0 {
            return bad("dac.H_mem must be at least 1".into());
        }
        if let Some(eta) = self.olc.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("olc.eta_override must be positive, got {eta}"));
            }
        }
        if let Some(eta) = self.dac.eta_g {
            if !(eta >= 0.0 && eta.is_finite()) {
                return bad(format!("dac.eta_g must be non-negative, got {eta}"));
            }
        }
        if let Some(r) = self.dac.radius {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("dac.radius must be non-negative, got {r}"));
            }
        }
        if !(self.solver.tol > 0.0 && self.solver.tol.is_finite()) || self.solver.max_iter == 0 {
            return bad("solver.tol and solver.max_iter must be positive".into());
        }

        let config_err = |e: Error| Error::Config(e.to_string());
        let a = Matrix::from_rows(&self.system.a).map_err(config_err)?;
        let b = Matrix::from_rows(&self.system.b).map_err(config_err)?;
        let sys = LtiSystem::new(a, b).map_err(config_err)?;
        let n = sys.state_dim();
        if self.u_box.dim() != sys.input_dim() {
            return bad(format!("u_box has dimension {} but B has {} columns", self.u_box.dim(), sys.input_dim()));
        }
        if self.w_box.dim() != n {
            return bad(format!("w_box has dimension {} but the state has {n}", self.w_box.dim()));
        }
        let x1 = match &self.x1 {
            Some(v) if v.len() != n => return bad(format!("x1 has dimension {} but the state has {n}", v.len())),
            Some(v) => Vector::from(v.clone()),
            None => Vector::zeros(n),
        };
        x1.ensure_finite("x1").map_err(config_err)?;
        let c_center = match &g.c_center {
            Some(v) if v.len() != n => {
                return bad(format!("cost_gen.c_center has dimension {} but the state has {n}", v.len()))
            }
            Some(v) => Vector::from(v.clone()),
            None => Vector::zeros(n),
        };
        c_center.ensure_finite("c_center").map_err(config_err)?;

        let cert = certify_strong_stability(sys.a()).map_err(config_err)?;
        // The disturbance box only matters when disturbances are drawn.
        let w_set = if self.disturbances_on {
            self.w_box.clone()
        } else {
            BoxSet::singleton(Vector::zeros(n)).map_err(config_err)?
        };
        let bound = state_bound(&cert, &sys, &x1, &self.u_box, &w_set).map_err(config_err)?;
        // Largest ‖c_t‖ the generator can produce.
        let c_bound = Vector::from_fn(n, |i| c_center[i].abs() + g.c_max).norm();
        let dac_radius = match self.dac.radius {
            Some(r) => r,
            None => cert.kappa.powi(3) * spectral_norm(sys.b()).map_err(config_err)?,
        };
        let dac_eta = self.dac.eta_g.unwrap_or(1.0 / (self.horizon as f64).sqrt());
        Ok(Setup {
            sys,
            cert,
            bound,
            x1,
            c_center,
            c_bound,
            dac_radius,
            dac_eta,
        })
    }
}

/// Validated, derived quantities shared by all runs of an experiment.
#[derive(Clone, Debug)]
pub struct Setup {
    pub sys: LtiSystem,
    pub cert: StabilityCert,
    /// `D` for the configured boxes (disturbance box collapsed to the origin
    /// when disturbances are off).
    pub bound: StateBound,
    pub x1: Vector,
    pub c_center: Vector,
    /// Upper bound on `‖c_t‖` used for the smoothness constant.
    pub c_bound: f64,
    pub dac_radius: f64,
    pub dac_eta: f64,
}
