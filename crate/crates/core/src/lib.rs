//! Spectral analysis of thin twisted waveguides.

pub mod cross_section;
pub mod effective_1d;
pub mod error;
pub mod floquet;
pub mod full_waveguide;
pub mod spectral;
pub mod twist;

pub use error::{Error, Result};
pub use num_complex::Complex64;
