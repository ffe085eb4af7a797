use thiserror::Error;

pub type Result<T, E = SpmvError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpmvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry ({row}, {col}) lies outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("value {0} does not fit the configured index width")]
    IndexOverflow(u128),

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("parameter `{name}` = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("block width must be at least 1")]
    ZeroBlockWidth,

    #[error("block plan covers {plan} rows but the matrix has {matrix}")]
    PlanMismatch { plan: usize, matrix: usize },

    #[error("dense reconstruction of n = {n} exceeds the cap of {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("matrix has no nonzero entries")]
    EmptyMatrix,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("failed to allocate {0} elements")]
    Allocation(usize),

    #[error("result check failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
