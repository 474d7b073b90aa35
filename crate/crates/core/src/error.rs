use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// θ = nπ selects the Dirac branches of the FrFT kernel, which have no
    /// chirp representation.
    #[error("unsupported kernel branch: theta = {theta} is a multiple of pi")]
    UnsupportedBranch { theta: f64 },

    #[error("insufficient samples: got {got}, need at least {required} (N >= 2KM)")]
    InsufficientSamples { got: usize, required: usize },

    #[error("noisy roots: root {root} has imaginary part above tolerance {tol}")]
    NoisyRoots { root: Complex64, tol: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
