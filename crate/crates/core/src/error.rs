use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Γ evaluated at a nonpositive integer.
    Pole { x: f64 },
    /// An argument outside the mathematical domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// Structurally invalid parameters (dimension mismatch, bad sizes, ...).
    InvalidParams(&'static str),
    /// `alpha` lies outside the range an operation is defined for.
    ParameterRange { alpha: f64, requirement: &'static str },
    /// A lattice sum still contributed above tolerance at the last shell.
    TruncationNotConverged { shells: usize, log_contribution: f64 },
    /// A transform grid or sample set would exceed the configured budget.
    Resource { requested: usize, budget: usize },
    /// Evaluation outside the range covered by a table.
    OutOfRange { coordinate: f64, limit: f64 },
    /// A finite-difference stencil would straddle a cell face.
    StencilCrossesFace { xi: f64, face: f64 },
    /// Least-squares fit with unusable abscissae.
    DegenerateAbscissa,
    /// Test-function family and order that cannot be combined.
    Unsupported(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Pole { x } => write!(f, "gamma has a pole at {x}"),
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::ParameterRange { alpha, requirement } => {
                write!(f, "alpha = {alpha} not allowed here: requires {requirement}")
            }
            Error::TruncationNotConverged { shells, log_contribution } => write!(
                f,
                "lattice sum not converged after {shells} shells (last log contribution {log_contribution})"
            ),
            Error::Resource { requested, budget } => {
                write!(f, "resource budget exceeded: {requested} > {budget}")
            }
            Error::OutOfRange { coordinate, limit } => {
                write!(f, "coordinate {coordinate} outside table range {limit}")
            }
            Error::StencilCrossesFace { xi, face } => {
                write!(f, "finite-difference stencil at {xi} crosses cell face {face}")
            }
            Error::DegenerateAbscissa => write!(f, "fit needs at least 3 distinct positive abscissae"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
