use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site count {0} outside the supported range 1..={max}", max = crate::measure::MAX_SITES)]
    SiteCount(usize),

    #[error("site index {site} out of range for n = {n}")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("probability p[{site}] = {value} is not in the open interval (0, 1)")]
    Probability { site: usize, value: f64 },

    #[error("weight w[{site}] = {value} must be finite and nonnegative")]
    Weight { site: usize, value: f64 },

    #[error("sample point {bits:#b} does not fit in {n} sites")]
    PointOutOfRange { bits: u32, n: usize },

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    Mismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("operands are defined over different site parameters")]
    ParamsMismatch,

    #[error("entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),

    #[error("t = {t} exceeds the simulation horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },

    #[error("value {value} at sample point {point:#b} violates the precondition {lo} <= x <= {hi}")]
    OutOfOrderInterval { point: usize, value: f64, lo: f64, hi: f64 },

    #[error("n = {n} is too large for a dense rate matrix (max {max})")]
    DenseLimit { n: usize, max: usize },

    #[error("`{name}` is not a contraction: {reason}")]
    NotContraction { name: String, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed vector file: {0}")]
    VectorFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
