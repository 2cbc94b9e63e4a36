use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A function was evaluated outside its mathematical domain.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("gradient norm {norm} exceeds the unit ball")]
    NormViolation { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("wealth became nonpositive ({wealth}) at round {round}")]
    WealthNotPositive { wealth: f64, round: u64 },

    #[error("invalid suffix tree: {0}")]
    InvalidTree(String),

    #[error("side information state {state} out of range (S = {states})")]
    StateOutOfRange { state: usize, states: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
