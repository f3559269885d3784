use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. Variant names double as the stable
/// error codes written to `error.json` by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("field is not numerically periodic; use finite differences")]
    NotPeriodic,
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("grid too small: boundary leakage {leakage:e} exceeds {limit:e}")]
    GridTooSmall { leakage: f64, limit: f64 },
    #[error("grid too large: {0}")]
    GridTooLarge(String),
    #[error("node present at x = {x}")]
    NodePresent { x: f64 },
    #[error("node formed at t = {t}, x = {x}")]
    NodeFormed { t: f64, x: f64 },
    #[error("unstable step: dt = {dt} exceeds bound {bound}")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("density underflow inside support at x = {x}")]
    DensityUnderflow { x: f64 },
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("inconsistent evidence: {0}")]
    InconsistentEvidence(String),
    #[error("cannot parse state spec: {0}")]
    StateSpecParse(String),
    #[error("cannot parse config: {0}")]
    ConfigParse(String),
    #[error("file does not match grid: {0}")]
    GridMismatch(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidField(_) => "InvalidField",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NotPeriodic => "NotPeriodic",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::GridTooSmall { .. } => "GridTooSmall",
            Error::GridTooLarge(_) => "GridTooLarge",
            Error::NodePresent { .. } => "NodePresent",
            Error::NodeFormed { .. } => "NodeFormed",
            Error::UnstableStep { .. } => "UnstableStep",
            Error::InvalidDensity(_) => "InvalidDensity",
            Error::DensityUnderflow { .. } => "DensityUnderflow",
            Error::InvalidPerturbation(_) => "InvalidPerturbation",
            Error::InconsistentEvidence(_) => "InconsistentEvidence",
            Error::StateSpecParse(_) => "StateSpecParse",
            Error::ConfigParse(_) => "ConfigParse",
            Error::GridMismatch(_) => "GridMismatch",
            Error::Io(_) => "Io",
        }
    }

    /// Process exit code: 2 config/parse, 3 node formation, 4 instability,
    /// 5 inconsistent evidence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StateSpecParse(_) | Error::ConfigParse(_) => 2,
            Error::NodeFormed { .. } => 3,
            Error::UnstableStep { .. } => 4,
            Error::InconsistentEvidence(_) => 5,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
