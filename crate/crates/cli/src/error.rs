use std::fmt;

/// Failure of one CLI run. Usage problems exit with 1, data and runtime
/// problems with 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Core(fjsp_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(fjsp_core::Error::InvalidArgument(_)) => 1,
            CliError::Data(_) | CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<fjsp_core::Error> for CliError {
    fn from(e: fjsp_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
