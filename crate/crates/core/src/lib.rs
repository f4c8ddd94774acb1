//! Short-term memory of linear echo state networks driven by an i.i.d. input
//! and a co-injected, possibly correlated, noise.
//!
//! Numerical memory functions come from least-squares readouts of simulated
//! states ([`numeric`]); closed forms come from the eigenvalues of the weight
//! matrix and the spectrum of the noise ([`analytic`]).

pub mod analytic;
pub mod decomposition;
pub mod error;
pub mod experiments;
mod fft;
mod linalg;
pub mod noise;
pub mod numeric;
pub mod reservoir;
pub mod spectral;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
