use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidArgument(String),

    #[error("contractivity violated: sup |a_{season}| = {sup} >= 1")]
    Contractivity { season: usize, sup: f64 },

    #[error("fourth moment unavailable for {0} innovations")]
    FourthMomentUnavailable(String),

    #[error("degenerate denominator at season {season}, u = {u} (D = {denominator:e})")]
    DegenerateDenominator { season: usize, u: f64, denominator: f64 },

    #[error("all {cells} estimation cells are degenerate")]
    AllCellsDegenerate { cells: usize },

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty series")]
    EmptySeries,

    #[error("duplicate timestamp {time} at line {line}")]
    DuplicateTimestamp { line: u64, time: f64 },

    #[error("zero variance")]
    ZeroVariance,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::Contractivity { .. } => "invalid-argument",
            Error::FourthMomentUnavailable(_) | Error::DerivativeUnavailable(_) => "unavailable",
            Error::DegenerateDenominator { .. } | Error::AllCellsDegenerate { .. } => "degenerate",
            Error::ZeroVariance => "degenerate",
            Error::Parse { .. } | Error::EmptySeries | Error::DuplicateTimestamp { .. } => "input",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
