use thiserror::Error;

use grasskit::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input files or arguments.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),

    /// Input that parses but is not the required mathematical object.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    /// A check ran to completion and failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Core(e) => match e {
                CoreError::Dimension(_)
                | CoreError::NotHermitian(_)
                | CoreError::Invalid(_)
                | CoreError::Structure(_) => 3,
                CoreError::Unsupported(_) | CoreError::Domain(_) | CoreError::Precondition(_) => 4,
                CoreError::Classification(_) | CoreError::OracleInconsistency(_) | CoreError::BudgetExhausted(_) => 5,
                CoreError::TableMiss(_) => 6,
            },
        }
    }
}
