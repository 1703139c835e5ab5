use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid tissue parameters: t1={t1_ms} ms, t2={t2_ms} ms")]
    InvalidTissue { t1_ms: f64, t2_ms: f64 },
    #[error("k_max must be at least 1")]
    ZeroOrder,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid is empty after exclusion")]
    EmptyGrid,
    #[error("dictionary entry {index} has zero norm")]
    ZeroNorm { index: usize },
    #[error("dictionary is not normalized")]
    NotNormalized,
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("signal has zero norm")]
    ZeroSignal,
    #[error("voxel ({x}, {y}) has zero signal")]
    ZeroVoxel { x: usize, y: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("target ({t1_ms}, {t2_ms}) ms outside the output scaler range")]
    TargetOutOfRange { t1_ms: f64, t2_ms: f64 },
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("mask is empty")]
    EmptyMask,
    #[error("masks of truth and reconstruction differ")]
    MaskMismatch,
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSchedule(_) => "E_SCHEDULE",
            Error::InvalidTissue { .. } => "E_TISSUE",
            Error::ZeroOrder => "E_ORDER",
            Error::InvalidGrid(_) | Error::EmptyGrid => "E_GRID",
            Error::ZeroNorm { .. } => "E_ZERO_NORM",
            Error::NotNormalized => "E_NOT_NORMALIZED",
            Error::EmptyDictionary => "E_EMPTY_DICT",
            Error::DimensionMismatch { .. } => "E_DIMENSION",
            Error::ZeroSignal | Error::ZeroVoxel { .. } => "E_ZERO_SIGNAL",
            Error::InvalidConfig(_) => "E_CONFIG",
            Error::TargetOutOfRange { .. } => "E_TARGET_RANGE",
            Error::Diverged { .. } => "E_DIVERGED",
            Error::EmptyMask | Error::MaskMismatch => "E_MASK",
            Error::InvalidPhantom(_) => "E_PHANTOM",
        }
    }
}
