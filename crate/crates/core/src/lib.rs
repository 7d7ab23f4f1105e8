//! Asymptotic eigenvalue and eigenvector machinery for the harmonic
//! oscillator discretised on an integer lattice.
//!
//! The Hamiltonian is an infinite symmetric tridiagonal matrix with diagonal
//! entries (omega^2 / 2)(j - x0)^2 and off-diagonal entries -1/2, shifted so
//! the spectrum starts near -1. Exact rational coefficient tables, an
//! asymptotic series evaluator, a wavefunction builder, a certified
//! tridiagonal reference solver, a Mathieu characteristic-value interface,
//! an order-by-order derivation engine, and numerical experiments live in
//! the submodules.

pub mod derivation;
pub mod error;
pub mod experiments;
pub mod export;
pub mod hatpoly;
pub mod rational;
pub mod solver;
pub mod tables;
pub mod wavefunction;

pub use error::{Error, Result};
