use thiserror::Error;

/// Errors raised by models, filters, smoothers and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or observation lies outside its declared support.
    #[error("domain error in `{block}`: {reason}")]
    Domain { block: String, reason: String },

    /// Inputs of mismatched length or dimension.
    #[error("shape error: {0}")]
    Shape(String),

    /// Every particle weight at time `t` is zero (log weight -inf or NaN).
    #[error("degenerate particle weights at t={t}{}", theta.as_ref().map(|s| format!(" (theta = {s})")).unwrap_or_default())]
    DegenerateWeights { t: usize, theta: Option<String> },

    /// Every backward weight at time `t` vanished.
    #[error("degenerate backward transition weights at t={t}")]
    DegenerateTransition { t: usize },

    /// A matrix that must be positive definite was not, or a variance vanished.
    #[error("numerical degeneracy at t={t}: {what}")]
    Numerical { t: usize, what: String },

    /// The Gaussian approximation used by the adjusted backward weights broke down.
    #[error("joint Gaussian approximation degenerate at t={t}: {what}")]
    ApproximationDegeneracy { t: usize, what: String },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// Requested quantity was not stored (e.g. a thinned history).
    #[error("unavailable: {0}")]
    Unavailable(String),

    /// A failure inside one of the parameter-conditional runs of refiltering.
    #[error("refiltering run for parameter draw {index} failed: {source}")]
    InDraw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(block: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            block: block.into(),
            reason: reason.into(),
        }
    }

    /// True for errors signalling numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateWeights { .. }
            | Error::DegenerateTransition { .. }
            | Error::Numerical { .. }
            | Error::ApproximationDegeneracy { .. } => true,
            Error::InDraw { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
