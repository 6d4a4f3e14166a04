use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite values encountered in {0}")]
    NonFinite(&'static str),

    #[error("initial data is not finite or has infinite H2 norm")]
    NonFiniteInitialData,

    #[error("initial data has a negative entry {min:e} (tolerance {tol:e})")]
    NegativeInitialData { min: f64, tol: f64 },

    #[error("blow-up detected: non-finite state at t = {t}")]
    BlowUpDetected { t: f64 },

    #[error("step limit of {max_steps} exhausted at t = {t} (last dt = {dt:e}); integration stalled")]
    StepLimitExceeded { max_steps: usize, t: f64, dt: f64 },

    #[error("Picard iteration did not contract after {iters} iterations (last residual {residual:e})")]
    NoContraction { iters: usize, residual: f64 },

    #[error("Duhamel quadrature under-resolved: halving the node count moves the result by {change:e} (limit {limit:e})")]
    QuadratureUnderResolved { change: f64, limit: f64 },

    #[error("interpolation exponent {theta} lies outside [{lower}, 1]")]
    ExponentOutOfRange { theta: String, lower: String },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("config error at line {line}: {key}: {message}")]
    Config { key: String, line: usize, message: String },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::BlowUpDetected { .. } | Error::StepLimitExceeded { .. } => 3,
            Error::Verification(_) => 4,
            _ => 1,
        }
    }
}
