use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Error conditions across the crate.
///
/// Each variant carries the offending numbers so callers can report them
/// without re-deriving context.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameter triple violates `beta > 0`, `a >= 0`, `b >= 0`.
    InvalidParams(String),
    /// Integrator controls violate their invariants.
    InvalidControls(String),
    /// Monotonicity check received an empty series.
    EmptySeries,
    /// Predicate only defined for the other branch of `b`.
    WrongBranch { b: f64 },
    /// Trajectory data disagrees with its declared parameters.
    ParamMismatch,
    /// Bisection endpoints gave the same predicate value, or a bracket
    /// could not be established.
    BracketFailure { lo: f64, hi: f64, detail: String },
    /// Operation called outside its guaranteed parameter region.
    Precondition(String),
    /// Trajectory segment is not strictly concave with positive slope.
    NotMonotone { index: usize },
    /// Profile sample below the admissible distance from the singular endpoint.
    Domain { y: f64, y_min: f64 },
    /// Profiles do not share parameters or have no overlapping range.
    GridMismatch(String),
    /// Trajectory does not have the classification required by the fit.
    WrongClass { expected: &'static str, found: String },
    /// Not enough samples inside the fit value band.
    WindowTooShort { count: usize, needed: usize },
    /// Fitted decay rate disagrees with the observed limit of f.
    RateMismatch { fitted: f64, observed: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::InvalidControls(msg) => write!(f, "invalid integrator controls: {msg}"),
            Error::EmptySeries => write!(f, "monitor series is empty"),
            Error::WrongBranch { b } => {
                write!(f, "predicate requires b >= 1, got b = {b}")
            }
            Error::ParamMismatch => {
                write!(f, "trajectory initial sample disagrees with its parameters")
            }
            Error::BracketFailure { lo, hi, detail } => {
                write!(f, "bracket failure on [{lo}, {hi}]: {detail}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NotMonotone { index } => {
                write!(f, "segment not strictly concave/increasing at sample {index}")
            }
            Error::Domain { y, y_min } => {
                write!(f, "profile sample y = {y} below admissible minimum {y_min}")
            }
            Error::GridMismatch(msg) => write!(f, "profile grids incompatible: {msg}"),
            Error::WrongClass { expected, found } => {
                write!(f, "trajectory class mismatch: expected {expected}, found {found}")
            }
            Error::WindowTooShort { count, needed } => {
                write!(f, "fit window too short: {count} samples, need {needed}")
            }
            Error::RateMismatch { fitted, observed } => {
                write!(f, "fitted rate {fitted} differs from observed limit {observed} by more than 2%")
            }
        }
    }
}

impl std::error::Error for Error {}
