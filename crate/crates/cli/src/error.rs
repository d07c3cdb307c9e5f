use std::fmt;

/// Exit status 2: the input was wrong. Exit status 1: the computation failed.
#[derive(Debug)]
pub enum CliError {
    Config { key: String, message: String },
    Numeric(cpa_auction::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "config error at `{key}`: {message}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<cpa_auction::Error> for CliError {
    fn from(e: cpa_auction::Error) -> Self {
        match &e {
            cpa_auction::Error::InvalidParameter { name, reason } => CliError::config(*name, reason.clone()),
            cpa_auction::Error::Unsupported(msg) => CliError::config("config", msg.clone()),
            _ => CliError::Numeric(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
