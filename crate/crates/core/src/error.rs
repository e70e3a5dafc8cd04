use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    /// Step size outside the open interval that keeps the robust update
    /// matrix nonnegative and primitive.
    #[error("epsilon {epsilon} outside admissible interval (0, {upper})")]
    EpsilonOutOfBounds { epsilon: f64, upper: f64 },

    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    #[error(
        "{byzantines} Byzantine nodes exceed the enumeration cap of {cap}; use Monte Carlo instead"
    )]
    EnumerationLimit { byzantines: usize, cap: usize },

    #[error("estimate undefined: {0}")]
    UndefinedEstimate(String),

    #[error("weight undefined for node {node}: {reason}")]
    WeightUndefined { node: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown figure `{name}` (choices: {choices})")]
    UnknownFigure { name: String, choices: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownFigure { .. } => 2,
            _ => 1,
        }
    }
}
