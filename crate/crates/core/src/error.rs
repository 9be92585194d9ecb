use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("Lemke-Howson pivot budget of {budget} exhausted")]
    PivotBudget { budget: usize },

    #[error("no equilibrium found: {0}")]
    NoEquilibrium(String),

    #[error("stage game at state {state} could not be solved: {source}")]
    StageSolve {
        state: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("game too large: {0}")]
    TooLarge(String),

    #[error("degenerate channel: {0}")]
    Degenerate(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed user input rather than a failing
    /// computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Parse(_)
                | Error::Json(_)
                | Error::InvalidModel(_)
                | Error::InvalidChannel(_)
                | Error::InvalidGame(_)
                | Error::Dimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
