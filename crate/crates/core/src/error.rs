use thiserror::Error;

/// Errors raised by the operator algebra, the Weyl systems and everything
/// built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operator must be square with dim >= 1 (got {rows}x{cols})")]
    BadShape { rows: usize, cols: usize },
    #[error("operator has a non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("input is not Hermitian (residual {residual:.3e} > tol {tol:.3e})")]
    NonHermitianInput { residual: f64, tol: f64 },
    #[error("conjugator is not unitary (defect {defect:.3e} > tol {tol:.3e})")]
    NonUnitaryConjugator { defect: f64, tol: f64 },
    #[error("operator is not positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("not a density operator: {0}")]
    NotDensity(String),
    #[error("not an effect: {0}")]
    NotEffect(String),
    #[error("not a rank-one projection: {0}")]
    NotRankOneProjection(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid modulus N = {0} (need N >= 2)")]
    InvalidModulus(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("group element ({a}, {b}) is not on the carrier")]
    OffGridElement { a: i64, b: i64 },
    #[error("observable lives on a different carrier than the system")]
    CarrierMismatch,
    #[error("function is neither bounded nor absolutely summable")]
    UnsummableFunction,
    #[error("declared sup {declared:.3e} exceeded by value {found:.3e}")]
    SupExceeded { declared: f64, found: f64 },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("translation moves mass {mass:.3e} out of the grid window")]
    TranslationLeavesGrid { mass: f64 },
    #[error("map table is incomplete: {missing} carrier points missing")]
    IncompleteTable { missing: usize },
    #[error("recovered kernel is not positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveRecovered { min_eigenvalue: f64 },
    #[error("function sequence is not uniformly bounded by the limit (sup {sup:.3e} > {bound:.3e})")]
    UnboundedSequence { sup: f64, bound: f64 },
    #[error("vector is not in the domain of the operator integral")]
    NotInDomain,
    #[error("sequence is not monotone at index {index}")]
    NotMonotone { index: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("effects do not sum to the identity (residual {residual:.3e})")]
    NotNormalized { residual: f64 },
    #[error("shots must be >= 1")]
    InvalidShots,
    #[error("invalid function spec: {0}")]
    InvalidFunction(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
