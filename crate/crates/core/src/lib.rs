//! Finite algebras, quantified constraint satisfaction and the
//! combinatorics of generating sets of powers.
pub mod classify;
pub mod clone;
pub mod error;
pub mod gadgets;
pub mod model;
pub mod powers;
pub mod qcsp;

pub use error::{Error, Result};
