//! Exact ground states of two-leg Rydberg ladders, bitstring statistics and
//! filtered mutual-information estimates of their entanglement entropy.

pub mod cli;
pub mod distribution;
pub mod entanglement;
pub mod error;
pub mod estimator;
pub mod filtering;
pub mod hamiltonian;
pub mod io;
pub mod lattice;
pub mod par;

pub use error::{Error, ErrorKind, Result};
