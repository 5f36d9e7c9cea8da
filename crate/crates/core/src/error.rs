use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A cell index outside the graph.
    UnknownCell(usize),
    /// Shapes of two inputs do not agree.
    DimensionMismatch {
        expected: usize,
        found: usize,
        what: &'static str,
    },
    /// Requested more mixture components than there are rows.
    TooFewRows {
        rows: usize,
        components: usize,
    },
    InvalidArgument(String),
    /// A component collapsed even after reinitialisation.
    DegenerateComponent {
        component: usize,
        weight: f64,
    },
    /// A covariance matrix stayed non positive-definite after regularisation.
    NotPositiveDefinite {
        component: usize,
    },
    EmptyInput(&'static str),
    /// Columns present in one city's schema but not the other.
    SchemaMismatch {
        differing: Vec<String>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownCell(id) => write!(f, "unknown cell index {id}"),
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "{what}: expected {expected}, found {found}")
            }
            Error::TooFewRows { rows, components } => {
                write!(f, "cannot fit {components} components to {rows} rows")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateComponent { component, weight } => {
                write!(f, "component {component} collapsed (weight {weight:e}) after reinitialisation")
            }
            Error::NotPositiveDefinite { component } => {
                write!(f, "covariance of component {component} is not positive definite")
            }
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::SchemaMismatch { differing } => {
                write!(f, "character columns differ between pools: {}", differing.join(", "))
            }
        }
    }
}

impl core::error::Error for Error {}
