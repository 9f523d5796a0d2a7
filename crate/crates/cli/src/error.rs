use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration; one line per offending field.
    #[error("invalid configuration:\n{0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] qbm_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            // estimator failures count as statistical quality, not numerics
            CliError::Numerical(qbm_core::Error::Statistics { .. }) => 4,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
