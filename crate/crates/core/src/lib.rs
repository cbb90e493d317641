//! Finite-dimensional operator-algebra toolkit for decomposing quantum
//! expectations.
//!
//! The crate works with unital self-adjoint subalgebras of complex matrices and
//! positive linear functionals on them. It computes GNS representations,
//! verifies KMS/Gibbs equilibrium conditions, splits a functional into its
//! absolutely continuous and singular parts relative to a reference functional
//! (via shorted Gram forms), solves for Radon-Nikodym derivatives in the GNS
//! commutant, and cross-validates everything against a classical measure-theory
//! oracle on diagonal embeddings.

pub mod algebra;
pub mod batch;
pub mod classical;
pub mod error;
pub mod functional;
pub mod gns;
pub mod kms;
pub mod lebesgue;
pub mod numerics;
pub mod radon_nikodym;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, Tolerance};
