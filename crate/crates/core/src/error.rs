//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("metric is numerically degenerate at {where_}: {detail}")]
    DegenerateMetric { where_: String, detail: String },

    #[error("magnetic form is rank-deficient at {where_} (smallest skew eigenvalue {smallest:.3e})")]
    RankDeficientForm { where_: String, smallest: f64 },

    #[error("operation requires even base dimension, got {dim}")]
    OddDimension { dim: usize },

    #[error("unsupported manifold or chart: {0}")]
    UnsupportedManifold(String),

    #[error("chart {chart} does not cover the requested point (|coords| = {radius:.3})")]
    ChartEscape { chart: usize, radius: f64 },

    #[error("energy drift {drift:.3e} exceeded budget {budget:.3e} at t = {time:.6}")]
    DriftExceeded { drift: f64, budget: f64, time: f64 },

    #[error("implicit step failed to converge (residual {residual:.3e} after {iterations} iterations at t = {time:.6})")]
    StepDiverged { residual: f64, iterations: usize, time: f64 },

    #[error("trajectory never returned to the section within t = {max_time:.3}")]
    NoReturn { max_time: f64 },

    #[error("trajectory left the capture region (distance {distance:.3e} > radius {radius:.3e})")]
    CaptureEscape { distance: f64, radius: f64 },

    #[error("section crossing is nearly tangential (|ds/dt| = {speed:.3e} against flow scale {scale:.3e})")]
    TangentialCrossing { speed: f64, scale: f64 },

    #[error("section normal is nearly orthogonal to the flow at the anchor")]
    BadSectionNormal,

    #[error("return-map Jacobian is singular to working precision (smallest singular value {smallest:.3e}); fixed point sits in a degenerate direction")]
    DegenerateDirection { smallest: f64 },

    #[error("shooting iteration diverged after {iterations} iterations (best residual {best_residual:.3e})")]
    ShootDiverged { iterations: usize, best_residual: f64 },

    #[error("input matrix is not antisymmetric (worst entry mismatch {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("topological hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
