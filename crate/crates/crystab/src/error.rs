//! Errors shared by the model-construction and simulation layers.

use crate::scenario::ScenarioError;
use thiserror::Error;

/// Failures while building steady states, coefficient bundles, weights, or
/// feedback laws.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("void fraction exhausted: eps = {eps:.6e} <= 0")]
    VoidFractionExhausted { eps: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("no steady-state bracket: residual has no sign change in ({lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("{0} steady-state candidates found in the bracket; refusing to pick one")]
    MultipleRoots(usize),
    #[error("profile has {got} samples but the grid has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },
    #[error("{name} must be positive (got {value})")]
    NonpositiveParameter { name: &'static str, value: f64 },
    #[error("nonpositive advection speed g({x}) = {value}")]
    NonpositiveSpeed { x: f64, value: f64 },
    #[error("control gain b = v/eps is zero; the feedback law is undefined")]
    ZeroControlGain,
    #[error("boundary value mismatch: state must satisfy {constraint}")]
    BoundaryMismatch { constraint: &'static str },
}

/// Failures while time stepping.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time step spec invalid: {0}")]
    BadSpec(String),
    #[error("maximum advection speed must be positive, got {0}")]
    NonpositiveMaxSpeed(f64),
    #[error("advection speed lost positivity at t = {t:.6}: 1 + g_k v = {factor:.6e}")]
    SpeedSignLoss { t: f64, factor: f64 },
    #[error("void fraction exhausted at t = {t:.6} (eps = {eps:.6e})")]
    VoidFractionExhausted { t: f64, eps: f64 },
    #[error("growth rate nonpositive at t = {t:.6}: c = {c:.6} fell to saturation")]
    GrowthCollapse { t: f64, c: f64 },
    #[error("non-finite state detected at t = {t:.6} (step {step})")]
    NonFiniteState { t: f64, step: usize },
    #[error("CFL violation at t = {t:.6}: speed {speed:.6e} with dt {dt:.6e} exceeds dx {dx:.6e}")]
    CflViolation {
        t: f64,
        speed: f64,
        dt: f64,
        dx: f64,
    },
}
