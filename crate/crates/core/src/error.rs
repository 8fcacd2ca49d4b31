use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("time grids differ: {0}")]
    GridMismatch(String),
    #[error("{what} = {value} is not an integer multiple of the spacing {spacing}")]
    Commensurability {
        what: &'static str,
        value: f64,
        spacing: f64,
    },
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
    #[error("semigroup evaluated at negative time {0}")]
    NegativeTime(f64),
    #[error("singular embedding: eigenvalue {index} is {value}")]
    SingularEmbedding { index: usize, value: f64 },
    #[error("spatial window too small: {0}")]
    Window(String),
    #[error("{what} = {value} outside the admissible range {range}")]
    Range {
        what: &'static str,
        value: f64,
        range: String,
    },
    #[error("state diverged at step {step} (norm {norm:.3e} exceeds {limit:.1e})")]
    Divergence { step: usize, norm: f64, limit: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, FrameError>;
