//! Error type shared across the crate.

/// Errors reported by grid construction, operator assembly and the solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model or solver parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// Grid geometry violation (non-divisible extents, empty domain, ...).
    #[error("grid geometry: {0}")]
    Grid(String),

    /// Vector or matrix dimensions do not match the grid.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Index outside the grid box.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Quadrature rule preconditions violated.
    #[error("quadrature: {0}")]
    Quadrature(String),

    /// Direct solver hit a zero pivot; `row` is in the original node ordering.
    #[error("singular matrix: zero pivot at row {row} ({detail})")]
    Singular { row: usize, detail: String },

    /// A non-finite value appeared while time stepping.
    #[error("non-finite value detected at time step {step}")]
    NonFinite { step: usize },

    /// Coarse grid nodes are not a subset of the reference grid nodes.
    #[error("grids not nested: {0}")]
    NonNested(String),

    /// Config file syntax or unknown key.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
