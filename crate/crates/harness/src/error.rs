use thiserror::Error;

/// Harness failures, grouped by process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, config keys or values.
    #[error("usage: {0}")]
    Usage(String),

    /// Unreadable or malformed input data, or failed writes.
    #[error("data: {0}")]
    Data(String),

    /// A filter, smoother or sampler broke down numerically.
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(_) => 2,
            HarnessError::Numerical(_) => 3,
        }
    }
}

impl From<smcsmooth::Error> for HarnessError {
    fn from(e: smcsmooth::Error) -> Self {
        use smcsmooth::Error as E;
        if e.is_numerical() {
            return HarnessError::Numerical(e.to_string());
        }
        match e {
            E::Parse(_) | E::Unavailable(_) => HarnessError::Usage(e.to_string()),
            E::InsufficientSamples { .. } | E::Metric(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Data(e.to_string())
    }
}
