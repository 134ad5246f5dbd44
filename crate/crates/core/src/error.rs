use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size must be positive, got {0}")]
    StepSize(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("characteristic start point: g* = {gstar:e} is not positive")]
    CharacteristicStart { gstar: f64 },

    #[error("trajectory left the domain through axis {axis} at t = {time}")]
    DomainExit { time: f64, axis: usize },

    #[error("control vector is zero")]
    ZeroControl,

    #[error("control vector is not normalized: sum of squares = {sum_sq} (expected 0.25)")]
    ControlNormalization { sum_sq: f64 },

    #[error("control vector has a kernel component of norm {norm:e}")]
    KernelComponent { norm: f64 },

    #[error("constraint system is inconsistent or rank deficient (residual {residual:e})")]
    InconsistentConstraints { residual: f64 },

    #[error("Hormander condition fails at depth {depth} (rank {rank} < {dim})")]
    HormanderFailure { depth: usize, rank: usize, dim: usize },

    #[error("coordinates are not privileged: field {field} has a part of weighted degree {degree}")]
    NonPrivileged { field: usize, degree: i64 },

    #[error("nilpotency check failed: a bracket word of length {length} is nonzero")]
    NotNilpotent { length: usize },

    #[error("g* = {value} along the trajectory, expected 1/4")]
    NotNormalized { value: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("initial phase matrix is invalid: {0}")]
    InvalidInitialPhase(String),

    #[error("Y is near-singular at s = {s} (|det Y| = {det:e})")]
    SingularY { s: f64, det: f64 },

    #[error("initial amplitude is zero")]
    ZeroAmplitude,

    #[error("beam tube hits the boundary of axis {axis} at t = {time}")]
    TubeCollision { time: f64, axis: usize },

    #[error("under-resolved grid: {0}")]
    Resolution(String),

    #[error("grid axis {axis} does not match the frame domain: {msg}")]
    BoundaryMismatch { axis: usize, msg: String },

    #[error("time step {dt} violates the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("observation region contains no grid nodes")]
    EmptyRegion,

    #[error("initial data has zero energy")]
    ZeroInitialData,

    #[error("geometric precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
