use thiserror::Error;

/// Errors surfaced by the geometry, spectral, and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric of kind {kind} is singular at the origin")]
    PointAtOrigin { kind: &'static str },

    #[error("band limit {0} is below the minimum of 8")]
    InvalidBandLimit(usize),

    #[error("fields belong to different charts ({0})")]
    ChartMismatch(String),

    #[error("poisson solve requires a mean-free source (mean = {mean:.3e})")]
    NonzeroMean { mean: f64 },

    #[error("graph condition violated: max(|u|/lambda + |grad u|) = {worst:.3} at node {node}")]
    GraphConditionViolated { worst: f64, node: usize },

    #[error("mean curvature degenerate: int H^2 dmu = {0:.3e}")]
    DegenerateMeanCurvature(f64),

    #[error("newtonian flux {value:.6} is not within 0.1 of 0 or 4*pi; surface under-resolved")]
    AmbiguousFlux { value: f64 },

    #[error("moment query outside domain of validity: {0}")]
    InvalidDomain(String),

    #[error("flow step rejected: {reason}")]
    StepRejected { reason: String },

    #[error("area projection did not converge (last drift {drift:.3e})")]
    NonconvergentAreaProjection { drift: f64 },

    #[error("solver hit the iteration cap ({iters}) with residual {residual:.3e}")]
    MaxIterations {
        iters: usize,
        residual: f64,
        best: Box<crate::solver::SolveOutput>,
    },

    #[error("continuation sweep needs at least 3 radii, got {0}")]
    InsufficientSweep(usize),

    #[error("golden table mismatch for identity `{identity}`: stored {stored:.17e}, computed {computed:.17e}")]
    GoldenMismatch {
        identity: String,
        stored: f64,
        computed: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
