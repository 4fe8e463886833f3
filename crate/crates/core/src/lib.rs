//! Norm geometry on section spaces and its toric quantization.
//!
//! * [`normspace`]: d_p distances, relative spectra, geodesics, rooftop and
//!   max norms on finite-dimensional spaces.
//! * [`tensornorms`]: projective, injective, quotient and symmetric-power norms.
//! * [`toric`]: polytopes, grid potentials, discrete Legendre transforms,
//!   envelopes, Mabuchi distances and 1-D Monge–Ampère measures.
//! * [`quantize`]: sup- and L²-norms of sections at level k, Fubini–Study
//!   potentials and the asymptotic experiments built on them.
//! * [`filtration`]: jumping measures, rays of norms and spectral measures.
//! * [`subring`]: dimension density of subrings generated in one degree.

pub mod error;
pub mod filtration;
pub mod graded;
pub mod normspace;
pub mod quantize;
pub mod subring;
pub mod tensornorms;
pub mod toric;

pub use error::{Error, Result};
