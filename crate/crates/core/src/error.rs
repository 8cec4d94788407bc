use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("visibility {0} outside [0, 1]")]
    Visibility(f64),
    #[error("moment order beta = {0} must exceed 1")]
    BetaOrder(f64),
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("score is singular: outcome probability is zero")]
    SingularScore,
    #[error("all grid log-likelihoods are -inf: data impossible under visibility {visibility}")]
    InfeasibleData { visibility: f64 },
    #[error("posterior is degenerate (zero second moment)")]
    DegeneratePosterior,
    #[error("ratio undefined for zero generalized Fisher information")]
    UndefinedRatio,
    #[error("{}", format_parse_errors(.0))]
    Parse(Vec<LineError>),
    #[error("io: {0}")]
    Io(String),
}

/// A rejected line of an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

fn format_parse_errors(errors: &[LineError]) -> String {
    errors
        .iter()
        .map(|e| format!("line {}: {}", e.line, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
