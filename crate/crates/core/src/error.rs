use thiserror::Error;

/// Errors surfaced by the library.
///
/// Violations of a checked property (a failing axiom, a hypothesis witness, a
/// bound exceeded) are reported as data in the respective report types, not as
/// errors. Errors are reserved for malformed input and unmet preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dyadic exponent {exponent} outside the supported range ±{limit}")]
    ExponentRange { exponent: i64, limit: i64 },

    #[error("floating-point overflow: {0}")]
    FloatOverflow(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid Orlicz table: {0}")]
    OrliczTable(String),

    #[error("invalid modular: {0}")]
    InvalidModular(String),

    #[error("Δ₂ constant unavailable: {0}")]
    Delta2(String),

    #[error("control table has no entry for the requested point pair")]
    TableMiss,

    #[error("divergent configuration: {0}")]
    Divergent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{slot} slot did not reach the convergence tolerance within n = {max_n}")]
    NonConvergence {
        slot: String,
        max_n: u32,
        increments: Vec<f64>,
        tail: f64,
    },

    #[error("approximant overflowed at n = {n}")]
    ApproximantOverflow { n: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Config and precondition failures exit with 2; everything else is a
    /// runtime failure and maps to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Precondition(_)
            | Error::Divergent(_)
            | Error::Parse(_)
            | Error::OrliczTable(_)
            | Error::InvalidModular(_)
            | Error::Delta2(_)
            | Error::Toml(_)
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
