//! Spectral gaps of symmetric random walks with α-stable long jumps, and of
//! the exclusion and zero-range processes built on them.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix double precision, which is what the CLI uses.

pub mod acceptance;
pub mod comparison;
pub mod error;
mod fit;
pub mod kinetics;
pub mod linalg;
pub mod particles;
pub mod rates;
mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use fit::least_squares;
pub use scalar::Real;

pub type TransitionRate64 = rates::TransitionRate<f64>;
pub type TransitionRate32 = rates::TransitionRate<f32>;
pub type Generator64 = spectrum::Generator<f64>;
pub type Generator32 = spectrum::Generator<f32>;
pub type SpectralReport64 = spectrum::SpectralReport<f64>;
