use thiserror::Error;

/// Errors shared across the crate. Variant names follow the operation
/// contracts they belong to; most carry enough context to be actionable
/// from a CLI error message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cardinality {w} outside [1, {l}]")]
    InvalidCardinality { w: usize, l: usize },
    #[error("base set must be nonempty for this family kind")]
    EmptyBase,
    #[error("exhaustive enumeration requested for L={l}; supported only for L <= {max}")]
    TooLarge { l: usize, max: usize },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable groups overlap: {0}")]
    OverlappingGroups(String),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("alias cycle involving {0}")]
    CyclicAlias(String),
    #[error("noise covariance is not positive semidefinite (min eigenvalue {min_eig})")]
    NonPsd { min_eig: f64 },
    #[error("degenerate covariance for variable group {{{group}}}")]
    DegenerateCovariance { group: String },
    #[error("family is not closed under strict supersets (missing {missing})")]
    NotClosed { missing: String },
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("operation requires L={expected}, got L={got}")]
    WrongL { expected: usize, got: usize },
    #[error("no decoder: U_{0} is inactive and no reconstruction rule was given")]
    NoDecoder(String),
    #[error("intermediate inequality count {count} exceeded the cap {cap} during elimination")]
    Blowup { count: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("region is not an up-closed rate region: {0}")]
    NotUpClosed(String),
    #[error("dimension {dim} exceeds the vertex-enumeration limit {max}")]
    DimensionTooHigh { dim: usize, max: usize },
    #[error("distortion ordering violated: {0}")]
    OrderingViolation(String),
    #[error("unknown corner label {0}")]
    UnknownCorner(String),
    #[error("resource budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid probability table: {0}")]
    InvalidPmf(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
