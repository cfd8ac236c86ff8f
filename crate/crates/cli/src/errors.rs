//! Exit-code classification: 0 pass, 1 verification failure, 2 config/input
//! error, 3 solver failure (partial artifacts are left in the output
//! directory).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub fn config(err: impl fmt::Display) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn solver(err: impl fmt::Display) -> Self {
        CliError::Solver(err.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Solver(msg) => write!(f, "solver failure: {msg}"),
        }
    }
}

impl From<gradflow::Error> for CliError {
    fn from(err: gradflow::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
