use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("metric value is not finite: {0}")]
    InvalidMetric(f64),
    #[error("metric directions differ between the compared values")]
    DirectionMismatch,
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("at least two bins are required, got {0}")]
    InvalidBins(usize),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("class {0} has no samples in the reference labels")]
    DegenerateLabels(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("requested size {size} is outside 1..={max}")]
    InvalidSize { size: usize, max: usize },
    #[error("class {0} has a single sample and cannot be interpolated")]
    CannotInterpolate(usize),
    #[error("correlation undefined for a zero-variance column")]
    UndefinedCorrelation,
    #[error("k = {k} outside 1..={max}")]
    InvalidK { k: usize, max: usize },
    #[error("training failed: {0}")]
    TrainingFailed(String),
    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    DivergenceDetected { epoch: usize },
    #[error("streams do not overlap in time")]
    NoOverlap,
    #[error("kernel size must be at least 1")]
    InvalidKernel,
    #[error("window must be a power of two >= 16 with 1 <= hop <= window")]
    InvalidWindow,
    #[error("clip of {len} samples is shorter than the {window}-sample window")]
    ClipTooShort { len: usize, window: usize },
    #[error("feature sets have {left} and {right} rows; register the streams first")]
    NotRegistered { left: usize, right: usize },
    #[error("submodule {0} not found")]
    NotFound(usize),
    #[error("submodules have different architectures")]
    IncomparableSubmodules,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
