use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Kind of problem found while validating an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    /// Row could not be parsed (wrong column count, bad number, bad time).
    MalformedRow,
    /// A row references an edge or vertex that does not exist.
    DanglingReference,
    /// Duplicate identifier (edge id, trip id, trip sequence number).
    Duplicate,
    /// Tag schedule rules do not partition the day.
    ScheduleNotPartition,
    /// Timestamps within a trip are not monotone, or a record has no duration.
    NonMonotoneTime,
    /// Value outside its valid domain (non-positive length, self loop, negative cost).
    InvalidValue,
    /// A trip has records but no cost, or a cost but no records.
    MissingCost,
}

impl DiagnosticKind {
    pub fn code(self) -> &'static str {
        match self {
            DiagnosticKind::MalformedRow => "E101",
            DiagnosticKind::DanglingReference => "E102",
            DiagnosticKind::Duplicate => "E103",
            DiagnosticKind::ScheduleNotPartition => "E104",
            DiagnosticKind::NonMonotoneTime => "E105",
            DiagnosticKind::InvalidValue => "E106",
            DiagnosticKind::MissingCost => "E107",
        }
    }
}

/// One violating row (or rule) in an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// 1-based line number, 0 when the problem is not tied to one line.
    pub line: usize,
    pub kind: DiagnosticKind,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: [{}] {}",
            self.file.display(),
            self.line,
            self.kind.code(),
            self.reason
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {what} {index} (valid 0..{len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("input validation failed with {} problem(s):\n{}", .0.len(), DisplayDiagnostics(.0))]
    Validation(Vec<Diagnostic>),

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code for the CLI: 2 validation, 3 non-convergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}

struct DisplayDiagnostics<'a>(&'a [Diagnostic]);

impl fmt::Display for DisplayDiagnostics<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {d}")?;
        }
        Ok(())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
