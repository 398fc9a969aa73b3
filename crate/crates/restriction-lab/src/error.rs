use std::fmt;

/// Errors shared by every module. Numerical routines return these instead of
/// panicking so the CLI can map them onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A (surface kind, ambient dimension) pair we do not build.
    UnsupportedSurface { kind: &'static str, dim: usize },
    /// Node spacing too coarse for the oscillation the caller wants resolved.
    ResolutionViolation { required: f64, actual: f64, what: &'static str },
    /// A cap indicator would be carried by too few quadrature nodes.
    UnderResolvedCap { spacing: f64, cap_width: f64 },
    /// Requested grid or node set exceeds the hard point budget.
    BudgetExceeded { requested: usize, budget: usize },
    /// A parameter is outside the domain of the formula or construction.
    InvalidParam(String),
    /// Structurally invalid input file (config, cube CSV, grid CSV).
    Parse(String),
    /// Operation not provided for this combination of inputs.
    Unsupported(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedSurface { kind, dim } => {
                write!(f, "unsupported surface: {kind} in R^{dim}")
            }
            Error::ResolutionViolation { required, actual, what } => {
                write!(f, "{what}: spacing {actual:.3e} exceeds required {required:.3e}")
            }
            Error::UnderResolvedCap { spacing, cap_width } => {
                write!(
                    f,
                    "cap of width {cap_width:.3e} under-resolved by node spacing {spacing:.3e} \
                     (need width/32)"
                )
            }
            Error::BudgetExceeded { requested, budget } => {
                write!(f, "point budget exceeded: {requested} > {budget}")
            }
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
