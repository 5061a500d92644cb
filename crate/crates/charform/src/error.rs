//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by parsers, decision procedures, and the oracle.
#[derive(Debug, Error)]
pub enum Error {
    /// A parse error with a byte position into the input text.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// An action was used that is not a member of the declared alphabet.
    #[error("unknown action `{0}` (not in the declared alphabet)")]
    UnknownAction(String),

    /// The `0` formula keyword needs an explicit alphabet to expand.
    #[error("the formula `0` requires an explicit alphabet")]
    ZeroNeedsAlphabet,

    /// A transition system contained a cycle; all procedures require
    /// loop-free inputs.
    #[error("cycle detected: {0}")]
    Cycle(String),

    /// An equation system referenced an undefined or duplicated variable,
    /// or its dependency graph was cyclic.
    #[error("malformed equation system: {0}")]
    EquationSystem(String),

    /// A formula was passed to a procedure outside its fragment.
    #[error("formula is not in fragment {fragment}: {msg}")]
    Fragment { fragment: String, msg: String },

    /// A precondition of a decision procedure was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An enumeration or search exceeded its configured budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// An I/O error while reading inputs.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
