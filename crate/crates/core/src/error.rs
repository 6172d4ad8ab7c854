use crate::krylov::IterationReport;

/// Errors surfaced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid size {n} is not divisible by leaf width {b}")]
    IndivisibleGrid { n: usize, b: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shift {shift} is resonant with the Laplacian symbol (gap {gap:.3e})")]
    ShiftResonant { shift: f64, gap: f64 },

    #[error("invalid media: {0}")]
    InvalidMedia(String),

    #[error("degenerate Gram matrix in stencil fit")]
    DegenerateGram,

    #[error("singular pivot block in front {front}")]
    SingularMatrix { front: usize },

    #[error("GMRES did not converge within {iterations} iterations (residual {residual:.3e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
        report: Box<IterationReport>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
