//! A desk-scale numerical laboratory for weighted estimates on Fourier
//! extension operators: direct oscillatory-sum evaluation of extensions of
//! densities on curved model surfaces, fractal-dimension diagnostics for
//! weights and measures, closed-form exponent thresholds, and reproducible
//! experiment drivers.

pub mod config;
pub mod cubes;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod extension;
pub mod fit;
pub mod grid;
pub mod hoelder;
pub mod measures;
pub mod surface;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
