use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent quality factors: {0}")]
    InconsistentQ(String),

    /// The resonance has no intrinsic loss, so `Q_i` is infinite.
    #[error("lossless resonance: drop transmittance {0} implies an infinite intrinsic Q")]
    LosslessDegenerate(f64),

    #[error("half-maximum crossing not found inside the grid")]
    SpanTooNarrow,

    #[error("spectrum has more than one peak above half maximum")]
    AmbiguousPeak,

    #[error("operation requires a pulsed pump, got a CW pump")]
    ModeMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("source {0} has zero brightness on this grid")]
    DegenerateSource(usize),

    #[error("optimizer did not find an interior minimum: {0}")]
    NoMinimum(String),

    #[error("no resonance dip detected in the spectrum")]
    NoResonance,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
