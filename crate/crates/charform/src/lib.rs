//! Decision procedures and constructions for characteristic formulae in the
//! modal-logic fragments that characterize simulation-based preorders.
//!
//! The library works with finite loop-free processes (the CCS fragment
//! `0 | a.p | p+p`) and the Hennessy-Milner logic fragments `L_X` for
//! `X ∈ {S, CS, RS, TS, 2S, 3S, BS}`. It provides:
//!
//! - model checking ([`modelcheck`]),
//! - preorder and kernel decision procedures ([`preorders`]),
//! - fragment-specific satisfiability ([`satisfiability`]),
//! - primality deciders built on alternating-graph reachability
//!   ([`primality`], [`altgraph`]),
//! - characteristic-formula deciding and synthesis ([`charform`]),
//! - a brute-force oracle for desk-scale ground truth ([`oracle`]).

pub mod altgraph;
pub mod charform;
pub mod cli;
pub mod error;
pub mod formula;
pub mod lts;
pub mod modelcheck;
pub mod oracle;
pub mod preorders;
pub mod primality;
pub mod satisfiability;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
