//! Command-line front end: config handling, experiment orchestration, CSV and
//! manifest output, and the built-in figure datasets.

pub mod commands;
pub mod figures;
pub mod output;

pub use commands::{run, Cli};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for runtime failures.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit code for configuration or assumption violations.
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A channel, config or input violates a documented requirement.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] isacqcd_core::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("output schema: {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use isacqcd_core::Error as E;
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(
                E::Parse(_)
                | E::InvalidConfig(_)
                | E::NotStochastic { .. }
                | E::Malformed(_)
                | E::InvalidDistribution(_)
                | E::AbsoluteContinuityViolation { .. }
                | E::Indistinguishable { .. }
                | E::DegenerateFamily { .. }
                | E::StateOutOfRange(_),
            ) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}
