use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} = {value} (limit {limit})")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The engineering operators mapped the state to the zero vector.
    #[error("state annihilated (norm {norm:e} before normalization)")]
    Annihilated { norm: f64 },

    #[error("truncation failed: {message}; try dim >= {suggested_dim}")]
    Truncation { message: String, suggested_dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
