use thiserror::Error;

pub type Result<T, E = QercError> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum QercError {
    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max |U^dag U - I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (max |H - H^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("{num_qubits} qubits exceeds the dense limit of {cap}")]
    TooManyQubits { num_qubits: usize, cap: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate feature vector: distribution has zero variance")]
    DegenerateFeatures,

    #[error("requested {requested} principal components but data has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<QercError>,
    },
}

impl QercError {
    pub fn class(&self) -> ErrorClass {
        match self {
            QercError::Config(_)
            | QercError::InvalidParameter(_)
            | QercError::TooManyQubits { .. } => ErrorClass::Config,
            QercError::Parse { .. } | QercError::Io(_) | QercError::Empty(_) => ErrorClass::Data,
            QercError::Stage { source, .. } => source.class(),
            _ => ErrorClass::Numeric,
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        QercError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        QercError::DimensionMismatch { expected, found }
    }
}
