use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("history space must contain at least one history")]
    EmptySpace,
    #[error("duplicate history label {0:?}")]
    DuplicateLabel(String),
    #[error("factor cardinalities multiply to {product}, but the space has {size} histories")]
    FactorMismatch { product: usize, size: usize },
    #[error("history space is not factored into properties")]
    Unfactored,
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("objects live on different history spaces")]
    SpaceMismatch,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("indicator entries must be 0 or 1")]
    NonBinaryIndicator,
    #[error("partition cells overlap or fail to cover the space")]
    InvalidPartition,
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("normalization <Omega|D|Omega> = {value} differs from 1")]
    NotNormalized { value: f64 },
    #[error("validation level {required} required, have {actual}")]
    ValidationLevel { required: String, actual: String },
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("enumeration budget of {budget} vectors exhausted without a verdict")]
    BudgetExhausted { budget: u64 },
    #[error("declared block structure is violated: |entry| = {magnitude:e} at ({row}, {col})")]
    BlockStructureViolated {
        row: usize,
        col: usize,
        magnitude: f64,
    },
    #[error("strategy not applicable: {0}")]
    StrategyInapplicable(String),
    #[error("eigensolver did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },
    #[error("eigen residual {residual:e} exceeds bound {bound:e}")]
    EigenResidual { residual: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is strongly positive; no quantum partner can break weak positivity")]
    AlreadyStronglyPositive,
    #[error("matrix has only non-negative real entries")]
    InClassP,
    #[error("matrix has negative or complex entries")]
    NotInClassP,
    #[error("parameter search exhausted at {limit}")]
    SearchExhausted { limit: f64 },
    #[error("malformed input: {0}")]
    Malformed(String),
}
