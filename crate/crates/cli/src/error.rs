use ribbonlim::RibbonError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error [{key}]: {message}")]
    Input { key: String, message: String },
    #[error("numerical error [{module}]: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: RibbonError,
    },
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn input(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Input {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Input errors keep the offending key; numerical ones keep the module.
    pub fn from_ribbon_input(key: &str, e: RibbonError) -> Self {
        match e {
            e if e.is_numerical() => e.into(),
            RibbonError::InvalidParameter { name, reason } => CliError::input(name, reason),
            e => CliError::input(key, e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 1,
            CliError::Numerical { .. } | CliError::Validation(_) => 2,
        }
    }
}

impl From<RibbonError> for CliError {
    fn from(e: RibbonError) -> Self {
        match e {
            RibbonError::InvalidParameter { name, reason } => CliError::input(name, reason),
            e => CliError::Numerical { module: e.module(), source: e },
        }
    }
}
