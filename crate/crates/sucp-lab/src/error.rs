use thiserror::Error;

/// Failure modes shared by every module of the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("kernel singularity: {0}")]
    Singularity(String),
    #[error("outside convergence domain: {0}")]
    ConvergenceDomain(String),
    #[error("no computation path available: {0}")]
    Uncomputable(String),
    #[error("contour geometry error: {0}")]
    Geometry(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported dimension d={0}")]
    UnsupportedDimension(usize),
    #[error("iteration limit reached after {iterations} steps (last estimate {last})")]
    IterationLimit { iterations: usize, last: f64 },
    #[error("quadrature budget exceeded: {what} (partial estimate {partial})")]
    QuadratureBudget { what: String, partial: f64 },
    #[error("degree cap exceeded: requested {requested}, cap {cap}")]
    DegreeCap { requested: usize, cap: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::UnsupportedDimension(_) => 2,
            LabError::IterationLimit { .. }
            | LabError::QuadratureBudget { .. }
            | LabError::DegreeCap { .. } => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
