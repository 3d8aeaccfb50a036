use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A term refers to a setting or outcome the scenario does not have.
    #[error("term {term} out of range: {detail}")]
    IndexOutOfRange { term: String, detail: String },

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("unknown builtin expression `{name}` (available: {available})")]
    UnknownBuiltin { name: String, available: String },

    /// Parse failure, with 1-based line and column.
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("scenario has {count} deterministic strategies, above the enumeration cap of {cap}")]
    TooManyStrategies { count: u128, cap: u128 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("noise fraction {0} outside [0, 1]")]
    NoiseOutOfRange(f64),

    #[error("no violation: quantum value {quantum} is below local bound {local}; tolerance undefined")]
    NoViolation { quantum: f64, local: f64 },

    #[error("degenerate expression: {0}")]
    Degenerate(String),

    #[error("no sign change of the violation margin on [0, 1]")]
    NoRoot,

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("model file: {0}")]
    Model(String),

    /// An internal consistency check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}
