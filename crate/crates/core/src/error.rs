use thiserror::Error;

use crate::formula::Polarity;

/// Errors raised while loading, checking, evaluating or translating queries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    StructureSyntax { line: usize, message: String },

    #[error("line {line}: element {element} out of range for domain of size {domain}")]
    ElementOutOfRange {
        line: usize,
        element: usize,
        domain: usize,
    },

    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),

    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("{line}:{col}: temporal operator `{op}` outside an iteration header")]
    TemporalOutsideHeader { line: usize, col: usize, op: String },

    #[error("temporal operator outside an iteration header")]
    TemporalInFirstOrderContext,

    #[error("arity mismatch for `{name}`: expected {expected}, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("unbound predicate variable `{0}`")]
    UnboundPredicate(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("ill-formed formula: {0}")]
    IllFormed(String),

    #[error("`{pred}` occurs {found} in the body; {construct} requires it {required}")]
    Polarity {
        construct: String,
        pred: String,
        found: Polarity,
        required: Polarity,
    },

    #[error("no repeated stage within {0} steps")]
    StepLimitExceeded(usize),

    #[error("unsupported header: {0}")]
    UnsupportedHeader(String),

    #[error("missing interpretation for auxiliary relation `{0}`")]
    MissingAux(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StructureSyntax { .. }
            | Error::ElementOutOfRange { .. }
            | Error::DuplicateSymbol(_)
            | Error::Syntax { .. }
            | Error::TemporalOutsideHeader { .. }
            | Error::Io(_) => 1,
            Error::StepLimitExceeded(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
