use std::fmt::Display;
use std::process::ExitCode;

use odflow::csv_io::CsvError;
use odflow::polytope::PolytopeError;
use odflow::{GeometryError, GravityError, IngestError, TransitionError};
use thiserror::Error;

/// What went wrong, at the granularity of the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Infeasible,
    NonConvergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Input => 1,
            ErrorKind::Infeasible => 2,
            ErrorKind::NonConvergence => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }

    /// Prefixes the message with where the failure happened.
    pub fn context(mut self, what: impl Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Attaches context to any error convertible into [`CliError`].
pub trait Context<T> {
    fn context(self, what: impl Display) -> Result<T>;
}

impl<T, E: Into<CliError>> Context<T> for std::result::Result<T, E> {
    fn context(self, what: impl Display) -> Result<T> {
        self.map_err(|e| e.into().context(what))
    }
}

fn kind_of_polytope(e: &PolytopeError) -> ErrorKind {
    match e {
        PolytopeError::SumMismatch { .. } | PolytopeError::SourceTooSmall { .. } => ErrorKind::Infeasible,
        _ => ErrorKind::Input,
    }
}

impl From<PolytopeError> for CliError {
    fn from(e: PolytopeError) -> Self {
        Self {
            kind: kind_of_polytope(&e),
            message: e.to_string(),
        }
    }
}

impl From<TransitionError> for CliError {
    fn from(e: TransitionError) -> Self {
        let kind = match e {
            TransitionError::NonConvergence(_) => ErrorKind::NonConvergence,
            _ => ErrorKind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<GravityError> for CliError {
    fn from(e: GravityError) -> Self {
        let kind = match e {
            GravityError::NonConvergence { .. } => ErrorKind::NonConvergence,
            GravityError::Unbalanced { .. } => ErrorKind::Infeasible,
            _ => ErrorKind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Polytope(p) => p.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}
