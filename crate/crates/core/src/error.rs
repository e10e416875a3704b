use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid cutoff {n}: must lie in 1..={max}")]
    InvalidCutoff { n: usize, max: usize },

    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("invalid section index {i}: must lie in 1..={max}")]
    InvalidSection { i: usize, max: usize },

    #[error("invalid lag {tau} for T = {t}")]
    InvalidLag { tau: usize, t: usize },

    #[error("lag {tau} leaves a degenerate window for T = {t} (need tau <= T - 2)")]
    DegenerateWindow { tau: usize, t: usize },

    #[error("autocovariance of the full cross-sectional mean is zero")]
    DegenerateCovariance,

    #[error("kappa must be nonzero and finite, got {0}")]
    InvalidKappa(f64),

    #[error("variance estimate needs a cutoff of at least 2, got {0}")]
    DegenerateVariance(usize),

    #[error("truncation lag {ell} out of range (max {max})")]
    InvalidTruncation { ell: usize, max: usize },

    #[error("confidence interval undefined: log argument {0} is not positive")]
    CiUndefined(f64),

    #[error("nonstationary process: coefficient {0} has modulus >= 1")]
    NonstationarySpec(f64),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("no closed-form autocovariance for {0}")]
    NoClosedForm(String),

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("series too short: length {len} needs at least {need}")]
    SeriesTooShort { len: usize, need: usize },

    #[error("section {row} is constant")]
    ConstantSection { row: usize },

    #[error("cross-sectional mean is identically zero")]
    DegenerateCrossMean,

    #[error("empty candidate list")]
    EmptyCandidates,

    #[error("invalid confidence level {0}")]
    InvalidLevel(f64),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCovariance
                | Error::DegenerateVariance(_)
                | Error::CiUndefined(_)
                | Error::DegenerateSeries
                | Error::ConstantSection { .. }
                | Error::DegenerateCrossMean
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
