use thiserror::Error;

/// Errors raised by mesh construction, discretization setup and operator evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("element count along {axis} is {count}, must be a multiple of {multiple}")]
    Divisibility {
        axis: &'static str,
        count: usize,
        multiple: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("nonpositive Jacobian determinant {det:e} in element {element} at quadrature point {point}")]
    InvalidMesh {
        element: usize,
        point: usize,
        det: f64,
    },

    #[error("metric evaluated at det(T) = {0:e} <= 0")]
    NonPositiveDeterminant(f64),

    #[error("full assembly would need {nnz} nonzeros, limit is {limit}")]
    AssemblyTooLarge { nnz: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
