use thiserror::Error;

use crate::dynamics::SimState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("datum too close to the domain edge: {0}")]
    Margin(String),

    #[error("radial interpolation outside [0, {r_max}] at r = {r}")]
    Extrapolation { r: f64, r_max: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time step {dt:e} exceeds the advective stability bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    /// The step produced NaN/Inf or a negative undershoot beyond tolerance.
    /// Carries the last state that passed every check.
    #[error("blow-up or instability at t = {}: {reason}", last_valid.time)]
    BlowupOrInstability {
        reason: String,
        last_valid: Box<SimState>,
    },

    #[error("mass {mass} is outside the subcritical range (0, 8π)")]
    Supercritical { mass: f64 },

    #[error("fixed-point iteration stalled after {iterations} iterations (last residual {last:e})")]
    NotConverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),
}
