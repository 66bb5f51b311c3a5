use thiserror::Error;

/// Errors produced by the discretization, compression and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid {n1}x{n2} cannot be split into equal leaves of at most {leaf_size} points: {reason}")]
    GridNotDivisible {
        n1: usize,
        n2: usize,
        leaf_size: usize,
        reason: String,
    },

    #[error("singular local system at leaf {leaf}")]
    SingularLeaf { leaf: usize },

    #[error("singular coupling system at level {level}, node {node}")]
    SingularCoupling { level: usize, node: usize },

    #[error("dense operation refused: N = {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("eigenvalue computation failed to converge")]
    Eigen,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed factor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
