use crate::opt::OptError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("constrained product is undefined: {0}")]
    PrefixMismatch(String),
    #[error("operation requires a nonempty set")]
    EmptySet,
    #[error("interval [{alpha}, {beta}] does not straddle zero")]
    NotUnstable { alpha: f64, beta: f64 },
    #[error("invalid interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("step {t} outside the valid range {min}..={max}")]
    StepOutOfRange { t: usize, min: usize, max: usize },
    #[error("layer {layer} outside the valid range 0..={max}")]
    LayerOutOfRange { layer: usize, max: usize },
    #[error("reachability domain is empty")]
    EmptyDomain,
    #[error("no initial state reaches the unsafe set at step {t}")]
    EmptySeed { t: usize },
    #[error("invalid model field `{field}`: {message}")]
    Model { field: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Solver(#[from] OptError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
