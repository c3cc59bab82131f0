//! Random walks on trees, free groups and their products: exact n-step
//! probabilities, Green functions at the spectral radius, ρ-harmonic and
//! Martin kernels, and reduced boundaries.

pub mod error;
pub mod geometry;
pub mod kernels;
pub mod matrix_boundary;
pub mod monotone;
pub mod presets;
pub mod products;
pub mod reduced;
pub mod scalar;
pub mod series;
pub mod walks;

pub use error::{Error, Result};
