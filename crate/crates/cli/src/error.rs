use std::fmt;

use nsw_core::NswError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const ORACLE_LIMIT: i32 = 3;
    pub const BOUND_VIOLATED: i32 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: exit::INVALID,
            message: message.into(),
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError {
            code: exit::IO,
            message: format!("{context}: {err}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<NswError> for CliError {
    fn from(e: NswError) -> Self {
        let code = match e {
            NswError::Io(_) => exit::IO,
            NswError::LimitExceeded { .. } => exit::ORACLE_LIMIT,
            _ => exit::INVALID,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Loads an instance file, naming the path in I/O errors.
pub fn load_instance(path: &std::path::Path) -> CliResult<(nsw_core::Instance, Option<nsw_core::instances::Metadata>)> {
    nsw_core::instances::load(path).map_err(|e| match e {
        NswError::Io(io) => CliError::io(&path.display().to_string(), io),
        other => other.into(),
    })
}
