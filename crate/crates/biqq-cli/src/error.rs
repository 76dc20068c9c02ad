//! Exit-code-bearing error type: configuration problems exit 2, data and
//! IO problems exit 3.

use std::fmt;
use std::path::Path;

use biqq_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: unknown keys, unparsable values, out-of-range
    /// settings. Exit code 2.
    Config(String),
    /// Bad data: unreadable or malformed corpus/checkpoint/lexicon files,
    /// empty inputs. Exit code 3.
    Data(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("io error on {}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidConfig(_) | CoreError::UnknownActivation(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
