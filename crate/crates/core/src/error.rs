use std::path::PathBuf;

/// Errors produced by the SRJ toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("jacobi splitting is singular: diagonal entry of row {row} is missing or zero")]
    SingularSplitting { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{}: line {line}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("no catalog scheme for M={m}, c={c}; valid grid is M in 2..=20 with c in {{0, 1/10, 1/5, 1/3, 1/2}} (M=1 only for c=0)")]
    NotInCatalog { m: usize, c: String },

    #[error("degenerate linear factor {index}: |(1-w)+w*z| vanishes, polar angle undefined")]
    DegenerateFactor { index: usize },

    #[error("matrix of order {n} exceeds the dense eigensolver cap of {cap}; estimate the spectral radius iteratively instead")]
    SizeCap { n: usize, cap: usize },

    #[error("eigenvalue iteration failed to converge for eigenvalue {index}")]
    EigenNoConvergence { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
