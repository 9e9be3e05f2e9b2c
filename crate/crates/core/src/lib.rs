//! Exact entanglement dynamics of two qubits in a common Lorentzian reservoir.
//!
//! The structured reservoir is replaced by a single leaky pseudomode, which turns
//! the non-Markovian two-atom problem into a Markovian master equation on
//! atoms ⊗ pseudomode. Two baselines are provided for comparison: collective
//! Markovian decay and two independent Lorentzian reservoirs.

pub mod cli;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod model;
pub mod propagate;

pub use error::{Error, Result};
