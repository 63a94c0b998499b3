use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    IndexInapplicable,
    Attribution,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid irrep index {index:?}: {reason}")]
    InvalidLabel { index: Vec<i64>, reason: String },

    #[error("cutoff must be a finite nonnegative number, got {0}")]
    InvalidCutoff(f64),

    #[error("dense dimension exceeds the resource guard ({size} > {limit})")]
    ResourceGuard { size: usize, limit: usize },

    #[error("weight table has no entry for irrep {0:?}")]
    MissingWeight(Vec<i64>),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("irrep {0:?} is not in the catalog")]
    LabelNotInCatalog(Vec<i64>),

    #[error("block ({pi:?}, {rho:?}) has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        pi: Vec<i64>,
        rho: Vec<i64>,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular value decomposition did not converge ({rows}x{cols})")]
    SvdFailure { rows: usize, cols: usize },

    #[error("index formula inapplicable at block ({pi:?}, {rho:?}): {reason}")]
    FormulaInapplicable {
        pi: Vec<i64>,
        rho: Vec<i64>,
        reason: String,
    },

    #[error("sample {position} has modulus {modulus:e}, below the nonvanishing tolerance")]
    VanishingSample { position: usize, modulus: f64 },

    #[error("phase increment at sample {position} is {increment:.3} rad; sample the curve more finely")]
    InsufficientResolution { position: usize, increment: f64 },

    #[error(
        "singular triple {triple} (s = {value:e}) cannot be attributed to a single block; \
         use data with a larger singular-value gap or a smaller noise level"
    )]
    Unattributed { triple: usize, value: f64 },

    #[error("unknown {family} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::SvdFailure { .. } => ErrorKind::Numerical,
            Error::FormulaInapplicable { .. } => ErrorKind::IndexInapplicable,
            Error::Unattributed { .. } => ErrorKind::Attribution,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}
