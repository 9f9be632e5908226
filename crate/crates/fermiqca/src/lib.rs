//! Causal fermionic evolution on discrete spacetime lattices.
//!
//! Exact Fock-space simulation, Jordan-Wigner compilation to qubits, the local
//! decomposition of causal fermionic unitaries with swap operators on a doubled
//! system, Majorana-ancilla locality repair, and discrete Dirac/Weyl models with
//! continuum-limit checks.

pub mod causality;
pub mod circuit;
pub mod decomposition;
pub mod dirac1d;
pub mod error;
pub mod fock;
pub mod jwmap;
pub mod linalg;
pub mod majorana;
pub mod noncausal_demo;
pub mod rng;
pub mod suites;
pub mod symbolic;
pub mod weyl3d;

pub use error::{Error, Result};
