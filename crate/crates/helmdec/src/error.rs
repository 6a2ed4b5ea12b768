use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),
    #[error("mesh size {0} is not a power-of-two reciprocal resolving every block")]
    InvalidMeshSize(f64),
    #[error("unknown coarse entity `{0}`")]
    UnknownEntity(String),
    #[error("coarse entity `{0}` is not on the boundary of the complex")]
    NotOnBoundary(String),
    #[error("nonzero moment {value:e} on fine edge {edge} ({tail} -> {head}) of the trace")]
    Precondition {
        edge: usize,
        tail: usize,
        head: usize,
        value: f64,
    },
    #[error("trace/route combination not supported: {0}")]
    Unsupported(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("norm `{norm}` is not defined for {field}")]
    NormKind { norm: &'static str, field: &'static str },
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("constrained extension infeasible (residual {0:e})")]
    Infeasible(f64),
    #[error("a growth fit needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error("boundary loop is not closed: {0}")]
    OpenLoop(String),
    #[error("junction compatibility functionals do not vanish: {0:?}")]
    Incompatible(Vec<f64>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
