use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: lower bound {lo} exceeds upper bound {hi}")]
    InvalidRange { lo: i64, hi: i64 },

    #[error("invalid probability {0}: must lie in [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation undefined: {0} input is constant")]
    UndefinedCorrelation(&'static str),

    #[error("degenerate posterior: no hypothesis has positive posterior mass")]
    DegeneratePosterior,

    #[error("degenerate hypothesis {value}: below the likelihood's lower bound {lower}")]
    DegenerateHypothesis { value: f64, lower: f64 },

    #[error("template error: {0}")]
    Template(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("could not parse a number from response {text:?}")]
    Parse { text: String },

    #[error("response value {value} outside bounds [{lo}, {hi}]")]
    OutOfBounds { value: f64, lo: f64, hi: f64 },

    #[error("agent failed after {attempts} attempt(s): {reason}")]
    AgentFailure {
        attempts: u32,
        reason: String,
        last_raw: Option<String>,
    },

    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),

    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },

    #[error("transport failure talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },

    #[error("{endpoint} answered with status {status}: {body}")]
    HttpStatus {
        endpoint: String,
        status: u16,
        body: String,
    },

    #[error("{path}:{line}: {message}")]
    Load {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no surviving chains")]
    EmptyEnsemble,

    #[error("all {chains} chains failed; first failure: {first_error}")]
    EnsembleFailed { chains: usize, first_error: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
