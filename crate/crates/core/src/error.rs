use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p^e = {p}^{e} does not fit in a 64-bit word")]
    WordOverflow { p: u64, e: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operands belong to different rings")]
    ParamsMismatch,
    #[error("element is not a unit")]
    NonUnit,
    #[error("requested {requested} exceptional elements but the residue field has only {available}")]
    CountTooLarge { requested: u64, available: u64 },
    #[error("residue field of size {0:?} is too large for generator search")]
    ResidueFieldTooLarge(Option<u64>),
    #[error("interpolation points are not pairwise exceptional")]
    NonExceptionalPoints,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pack width {n} exceeds the {available} available evaluation points")]
    WidthTooLarge { n: usize, available: u64 },
    #[error("extension degree {m} is below 2n-1 = {required}")]
    DegreeTooSmall { m: usize, required: usize },
    #[error("outer scheme is not defined over the inner scheme's extension ring")]
    TowerMismatch,
    #[error("{what} = {value} is not divisible by {divisor}")]
    IndivisibleDimensions {
        what: &'static str,
        value: usize,
        divisor: usize,
    },
    #[error("recovery threshold {threshold} exceeds worker count {workers}")]
    ThresholdExceedsWorkers { threshold: usize, workers: usize },
    #[error("{workers} workers exceed the {available} exceptional points of the coding ring")]
    TooManyWorkers { workers: usize, available: u64 },
    #[error("insufficient responses: have {have}, need {need}")]
    InsufficientResponses { have: usize, need: usize },
    #[error("duplicate response from worker {0}")]
    DuplicateWorker(usize),
    #[error("unknown worker id {0}")]
    UnknownWorker(usize),
    #[error("preset {preset} conflicts with {param} = {value}")]
    PresetConflict {
        preset: &'static str,
        param: &'static str,
        value: usize,
    },
    #[error("batch length mismatch: expected {expected} pairs, got {a} and {b}")]
    BatchLengthMismatch { expected: usize, a: usize, b: usize },
    #[error("decoded entry ({row}, {col}) has nonzero higher tower coefficients")]
    NonBaseResult { row: usize, col: usize },
    #[error("first-level extension ring is not the base of the second-level scheme")]
    SchemeMismatch,
    #[error("result does not match the schoolbook product")]
    VerificationFailed,
    #[error("malformed data: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by an invalid configuration rather than a failed run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::NotPrime(_)
                | Error::WordOverflow { .. }
                | Error::InvalidParameter(_)
                | Error::CountTooLarge { .. }
                | Error::ResidueFieldTooLarge(_)
                | Error::WidthTooLarge { .. }
                | Error::DegreeTooSmall { .. }
                | Error::IndivisibleDimensions { .. }
                | Error::ThresholdExceedsWorkers { .. }
                | Error::TooManyWorkers { .. }
                | Error::PresetConflict { .. }
                | Error::BatchLengthMismatch { .. }
        )
    }
}
