//! Shear-frame spectral tools for perturbations of plane Couette flow.
//!
//! The crate is organised bottom-up: [`grid`] holds fields and transforms,
//! [`multiplier`] the Fourier weights, and the remaining modules build
//! solvers and experiment drivers on top of them.

pub mod coords;
pub mod dns;
pub mod error;
pub mod grid;
pub mod linear;
pub mod multiplier;
pub mod ode;
pub mod streak;
pub mod toymodel;
pub mod xrun;

pub use error::{Error, Result};

/// Japanese bracket `(1 + x^2)^{1/2}`.
#[inline]
pub fn jap(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}
