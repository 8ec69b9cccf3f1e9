use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel profile has vanishing second moment ({0:e})")]
    ZeroMoment(f64),
    #[error("kernel profile is negative at s = {s} (value {value})")]
    NegativeProfile { s: f64, value: f64 },
    #[error("kernel profile is unbounded or not finite at s = {0}")]
    SingularProfile(f64),
    #[error("lower-bound kernel vanishes identically")]
    EmptySupport,
    #[error("point {0} lies outside the open unit interval")]
    OutOfDomain(f64),
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },
    #[error("horizon {delta} is not an integer multiple of the grid spacing {h}")]
    GridMismatch { delta: f64, h: f64 },
    #[error("horizon {0} too large: boundary layers overlap")]
    LayerOverlap(f64),
    #[error("operation requires method {expected}, got {found}")]
    MethodMismatch { expected: String, found: String },
    #[error("matrix is singular (pivot {pivot:e} at row {row})")]
    SingularMatrix { row: usize, pivot: f64 },
    #[error("cannot fit a rate: {0}")]
    DegenerateFit(String),
    #[error("truncated-ball first moment vanishes at ({0}, {1}): not a layer point")]
    DegenerateDirection(f64, f64),
    #[error("point ({0}, {1}) is outside the boundary layer")]
    OutsideLayer(f64, f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
