//! Metaplectic calculus on sampled wavefunctions.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`symplectic`]: `Sp(n)` matrices, Hamiltonian flows `exp(tJM)`, free-matrix
//!   detection, generating functions and the factorization of any symplectic
//!   matrix into two free ones.
//! * [`metaplectic`]: the quadratic Fourier integral operator attached to a free
//!   symplectic matrix, realized by dense quadrature and by a chirp / chirp-Z /
//!   chirp pipeline, plus Gaussian closed forms and double-cover checks.
//! * [`schrodinger`]: exact propagation for quadratic Weyl symbols through the
//!   metaplectic lift of the flow, with a Strang split-step reference solver.
//! * [`amalgam`]: discrete `W(FL^p, L^q)` norms built from the short-time
//!   Fourier transform, and the boundedness experiments built on them.
//!
//! File formats, configuration and the command line live in the companion
//! `metaplectic-cli` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod amalgam;
pub mod error;
pub mod fft;
pub mod hermite;
pub mod linalg;
pub mod metaplectic;
pub mod schrodinger;
pub mod symplectic;
pub mod wavefunction;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use symplectic::{
    MaslovIndex, QuadraticGeneratingFunction, QuadraticHamiltonian, SymplecticMatrix, Tolerances,
};
pub use wavefunction::{Axis, SampledWavefunction};

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
