//! Spectral densities of the hexagonal lattice and its loop-augmented dual
//! triangular lattice: exact closed-walk moments, special-function density
//! and characteristic-function evaluators, the Bessel-cube identity
//! e^{3x/2} Σₙ Iₙ³(x) = ∫₀^∞ I₀³(√(2xt)) e^{−t} dt, and seeded samplers.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod dd;
pub mod density;
pub mod error;
pub mod identity;
pub mod lattice;
pub mod moments;
pub mod quad;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
