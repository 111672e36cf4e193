use std::fmt;

/// Stage failure with a stable machine-readable code.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new("INVALID_ARGUMENT", message)
    }
}

impl fmt::Display for CliError {
    /// Single line: `error[CODE]: message`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}]: {}", self.code, msg)
    }
}

impl std::error::Error for CliError {}

impl From<et4el::Error> for CliError {
    fn from(e: et4el::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
