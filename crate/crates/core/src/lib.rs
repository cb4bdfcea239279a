//! Online control of linear time-invariant systems against adversarial
//! convex costs and bounded disturbances.
//!
//! The main controller ([`controllers::Olc`]) runs online gradient descent on
//! a target steady state and applies the constant input that would hold the
//! plant there. It is compared against a disturbance-action baseline
//! ([`controllers::Dac`]) and against offline best-in-hindsight benchmarks
//! ([`benchmarks`]). The [`harness`] module reproduces the simulation study
//! and writes regret curves as CSV.

pub mod benchmarks;
pub mod cli;
pub mod controllers;
pub mod costs;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod system;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use system::{BoxSet, LtiSystem, StabilityCert, StateBound};
