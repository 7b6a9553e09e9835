//! Semiclassical analysis on truncated bosonic Fock spaces.
//!
//! The crate builds the ε-scaled canonical commutation relations on a
//! truncated Fock space, quantizes polynomial phase-space symbols in Wick and
//! anti-Wick order, and compares quantum entropies and free energies of Gibbs
//! states with their classical counterparts as ε goes to zero.

pub mod config;
pub mod error;
pub mod fock;
pub mod free_energy;
pub mod invariants;
pub mod lattice;
pub mod numeric;
pub mod quadrature;
pub mod quantize;
pub mod runner;
pub mod states;

pub use error::{Error, Result};
pub use fock::{FockSpec, OperatorMatrix, StateVector};
