use thiserror::Error;

/// Errors raised by the variational engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum QapError {
    /// An input lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array lengths or grid sizes do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// Explicit integrator would violate its stability bound.
    #[error("step size error: {message} (suggested K >= {suggested_steps})")]
    StepSize {
        message: String,
        suggested_steps: usize,
    },

    /// The stationarity (KKT) matrix is singular.
    #[error("degenerate KKT system: null-space dimension {null_dim}")]
    DegenerateSystem { null_dim: usize },

    /// The quadratic form is not positive semidefinite.
    #[error("not a Hamiltonian: {0}")]
    NotAHamiltonian(String),

    /// The root finder did not reach the gradient tolerance.
    #[error("no stationary point after {iterations} iterations (|grad| = {gradient_norm:e})")]
    NoStationaryPoint {
        iterations: usize,
        gradient_norm: f64,
        trace: Vec<f64>,
    },

    /// One side of the scale structure vanishes, so no interior stationary scale exists.
    #[error("degenerate scale structure: {0}")]
    DegenerateScale(String),

    /// Configuration text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A configuration field failed validation.
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl QapError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        QapError::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        QapError::Shape(msg.into())
    }

    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        QapError::Validation {
            field: field.into(),
            message: msg.into(),
        }
    }

    /// Process exit code for this error class: 2 validation, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            QapError::Parse { .. } | QapError::Validation { .. } => 2,
            QapError::Domain(_) | QapError::Shape(_) => 2,
            QapError::Io(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            QapError::Domain(_) => "domain",
            QapError::Shape(_) => "shape",
            QapError::StepSize { .. } => "step_size",
            QapError::DegenerateSystem { .. } => "degenerate_system",
            QapError::NotAHamiltonian(_) => "not_a_hamiltonian",
            QapError::NoStationaryPoint { .. } => "no_stationary_point",
            QapError::DegenerateScale(_) => "degenerate_scale",
            QapError::Parse { .. } => "parse",
            QapError::Validation { .. } => "validation",
            QapError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for QapError {
    fn from(e: std::io::Error) -> Self {
        QapError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QapError>;
