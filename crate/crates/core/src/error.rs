use thiserror::Error;

/// Errors raised while building or evaluating discretized operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alignment error: {name} = {value} is not a grid node (h = {h})")]
    Alignment { name: &'static str, value: f64, h: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{0} is not an interface point")]
    NotInterfacePoint(f64),

    #[error("Robin boundary potential requires Robin data")]
    MissingRobinData,

    #[error("general boundary potential requires c1*c2 != 0 (c1 = {c1}, c2 = {c2})")]
    DegenerateWeights { c1: f64, c2: f64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),

    #[error("operator is not Hermitian in the weighted inner product (defect {0:e})")]
    NotHermitian(f64),

    #[error("eigensolver failed to converge after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("root bracketing failed: {0}")]
    RootBracketing(String),

    #[error("zero vector has no probability distribution")]
    ZeroVector,

    #[error("singular linear system at row {0}")]
    SingularSolve(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
