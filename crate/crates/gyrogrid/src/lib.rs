//! Spectral toolkit for a gyrator-coupled superconducting circuit whose
//! low-energy subspace passively encodes GKP grid states.
//!
//! The crate follows the chain from circuit parameters to code words:
//!
//! * [`params`] — physical constants, flux ratios, and the mapping between
//!   circuit quantities (C, L, E_J, G) and the dimensionless electron-in-a-
//!   lattice model (V/ħω_c, ħω₀/V, p/q).
//! * [`operators`] — ladder, quadrature, displacement, and magnetic
//!   translation operators in truncated bases.
//! * [`spectra`] — Hamiltonian assembly (Harper, crystal, confined, LLL),
//!   dense Hermitian eigensolves, and parameter sweeps (Hofstadter butterfly,
//!   confinement gap, LLL weight).
//! * [`states`] — analytic approximate grid states, Hadamard eigenstate
//!   combinations, the 1-D Fourier transform, and fidelities.
//! * [`transform`] — the coherent-state kernel lifting 1-D wavefunctions to
//!   the plane, theta-function closed forms, and Husimi densities.
//! * [`circuit`] — flux-biased circuit spectra, noise matrix elements, and
//!   the current-drive logical-Z protocol.

pub mod circuit;
pub mod eigh;
pub mod error;
pub mod operators;
pub mod params;
pub mod spectra;
pub mod states;
pub mod transform;

pub use error::{Error, Result};

/// Convenient alias used throughout the crate.
pub type C64 = num_complex::Complex64;
