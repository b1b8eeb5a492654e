//! Integrable spin chains for high-energy QCD.
//!
//! The crate covers the s = -1 Heisenberg chain obtained from the lattice
//! nonlinear Schrodinger model: exact Bethe roots, the exterior-Fermi-sea
//! thermodynamics, finite-size scaling of the ground energy, exact
//! diagonalization of truncated boson chains, local quenches and the map
//! from entanglement entropy to deep inelastic scattering observables.

// `!(x > 0.0)` is used on purpose so NaN fails every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bethe;
pub mod chain;
pub mod cli;
pub mod config;
pub mod dis;
pub mod entropy;
pub mod error;
pub mod finite_size;
pub mod io;
pub mod krylov;
pub mod numeric;
pub mod quench;
pub mod sparse;
pub mod special;
pub mod thermo;

pub use error::{Error, Result};
pub use num_complex::Complex64;
