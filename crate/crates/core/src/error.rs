use thiserror::Error;

/// Errors reported by the toolkit.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type used
/// by the failing computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} outside of [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error("non-finite evaluation of {what} at {at}")]
    Evaluation { what: String, at: f64 },

    #[error("{name} violates class {class}: {reason}")]
    Class {
        name: String,
        class: String,
        reason: String,
    },

    #[error("precondition `{inequality}` fails: {lhs:.5} vs {rhs:.5}")]
    Precondition {
        inequality: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("trajectory blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("integration step failed at t = {t}")]
    StepFailure { t: f64 },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown registry name `{0}`")]
    UnknownName(String),

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
