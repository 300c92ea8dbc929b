use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} on {qubits} qubits exceeds the dense cap of {cap} qubits")]
    ResourceCap {
        what: &'static str,
        qubits: usize,
        cap: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("unknown product formula `{0}` (expected one of lie1, strang2, ruth3, suzuki4)")]
    UnknownFormula(String),

    #[error("formula `{name}` needs {expected} fragments, the partition has {found}")]
    FragmentCount {
        name: String,
        expected: String,
        found: usize,
    },

    #[error("fragment index {index} is out of range for {len} fragments")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid composite variant {0}, expected 1, 2, 3 or 4")]
    InvalidVariant(u8),

    #[error("duplicate value a = {0} in the profiling grid")]
    DuplicateGrid(f64),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("basis calibration failed: {0}")]
    Calibration(String),

    #[error("error-operator extraction failed: {0}")]
    Extraction(String),

    #[error("error series holds no operator of order {0}")]
    MissingOrder(u32),

    #[error("slope fit needs at least {needed} points above the error floor, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed results table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
