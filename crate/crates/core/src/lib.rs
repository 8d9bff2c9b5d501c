//! Spin-chain eigenvalue densities predicted by the classical/isotropic
//! (IE) mixture `p·classical + (1-p)·isotropic`.
//!
//! [`matgen`] samples local terms and Haar matrices, [`chain`] assembles
//! the nearest-neighbour Hamiltonian, [`spectra`] runs the Monte Carlo
//! convolutions and [`slider`] computes the mixture weight.

pub mod chain;
pub mod cli;
pub mod error;
pub mod field;
pub mod linalg;
pub mod matgen;
pub mod rng;
pub mod slider;
pub mod spectra;

pub use error::{Error, Result};
