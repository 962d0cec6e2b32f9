use thiserror::Error;

/// Errors raised while building meshes, elements, or solving the global system.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("mesh parse error: {0}")]
    MeshParse(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element}: {what} is ill-conditioned or singular (condition estimate {condition:.3e})")]
    Conditioning {
        element: usize,
        what: &'static str,
        condition: f64,
    },

    #[error("global system is singular or not positive definite (first failing pivot at reordered index {pivot}); check that the Dirichlet conditions and pins remove all rigid motions")]
    SingularSystem { pivot: usize },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
