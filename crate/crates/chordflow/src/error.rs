use thiserror::Error;

/// Errors produced by grid construction, body geometry, quadrature and the flow.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution {got} below minimum {min} for dimension {dim}")]
    InvalidResolution { dim: usize, got: usize, min: usize },

    #[error("field length {got} does not match grid node count {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("support or radial samples must be strictly positive (min {min})")]
    NotPositive { min: f64 },

    #[error("strict convexity violated: min eigenvalue of curvature matrix {min_eig} < {eps}")]
    ConvexityLoss { min_eig: f64, eps: f64 },

    #[error("basepoint lies outside the body (max constraint violation {violation})")]
    PointOutsideBody { violation: f64 },

    #[error("exponent {q} invalid for boundary basepoint quadrature")]
    InvalidExponent { q: f64 },

    #[error("no grid node on the positive side of the direction")]
    DegenerateGrid,

    #[error("1/phi is not integrable at zero for this family (p = {p})")]
    PsiDivergentAtZero { p: f64 },

    #[error("adaptive quadrature failed to converge (best estimate {estimate})")]
    QuadratureFailure { estimate: f64 },

    #[error("non-finite value encountered in {context}")]
    NumericalFailure { context: String },

    #[error("time step collapsed below dt_min = {dt_min} after repeated rejection at t = {t}")]
    StepCollapse { t: f64, dt_min: f64 },

    #[error("support function left guard bounds [{lo}, {hi}] at t = {t}")]
    DivergedBounds { t: f64, lo: f64, hi: f64 },

    #[error("maximum step count {max_steps} exceeded")]
    MaxStepsExceeded { max_steps: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
