use crate::models::{ArfimaParams, FitDiagnostics, RgarchParams};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Best parameters reached by an optimizer that did not meet its convergence test.
#[derive(Debug, Clone)]
pub enum BestSoFar {
    Arfima(ArfimaParams, FitDiagnostics),
    Rgarch(RgarchParams, FitDiagnostics),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A documented precondition on the inputs does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input file or record.
    #[error("format error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    /// A model could not be estimated (collinear design, degenerate data, all fits failed).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// The optimizer stopped on its iteration cap before meeting the tolerance.
    #[error("{model} estimation did not converge after {iterations} iterations")]
    NotConverged {
        model: &'static str,
        iterations: usize,
        best: Box<BestSoFar>,
    },

    /// A test statistic cannot be formed because the input carries no variation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    /// True for failures of model estimation, as opposed to bad input data.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(self, Error::Estimation(_) | Error::NotConverged { .. })
    }
}
