use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("support violation: outcome {index} has probability {prob} but zero reference weight")]
    Support { index: usize, prob: f64 },

    #[error("thermodynamic functional requested but no Gibbs weights were supplied")]
    MissingGibbs,

    #[error("degenerate target: {0}")]
    DegenerateTarget(&'static str),

    #[error("atom count {projected} exceeds cap {cap}")]
    OverflowGuard { projected: f64, cap: usize },

    #[error("convergence error: {0}")]
    Convergence(String),

    #[error("iteration limit of {0} steps reached")]
    IterationLimit(usize),

    #[error("no feasible rate: even a single target copy misses the error budget")]
    NoFeasibleRate,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// How an error should be reported to a caller outside the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input or configuration.
    Input,
    /// Well-formed input outside the domain of the requested computation.
    Domain,
    /// A numerical procedure did not settle.
    Convergence,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidDistribution(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::Unknown { .. }
            | Error::Config(_)
            | Error::Io(_) => ErrorClass::Input,
            Error::Support { .. }
            | Error::MissingGibbs
            | Error::DegenerateTarget(_)
            | Error::OverflowGuard { .. }
            | Error::NoFeasibleRate => ErrorClass::Domain,
            Error::Convergence(_) | Error::IterationLimit(_) => ErrorClass::Convergence,
        }
    }
}
