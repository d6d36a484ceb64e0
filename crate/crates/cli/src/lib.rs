//! Batch front-end for the Rothe solvers: configuration, validation, and
//! deterministic artifact output.

pub mod config;
pub mod expr;
pub mod run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solve(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solve(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Config(_) => "CONFIG",
            CliError::Solve(_) => "SOLVE",
            CliError::Io(_) => "IO",
        }
    }
}
