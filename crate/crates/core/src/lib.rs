//! Electric polarization, permanent and transition dipoles, and radiative
//! lifetimes of localized emitters, computed on periodic tight-binding
//! models and on real-space volumetric data.

pub mod constants;
mod error;
pub mod densitygrid;
pub mod fixtures;
pub mod model;
pub mod optics;
pub mod oracle;
pub mod polarization;
pub mod sternheimer;

pub use error::{Error, Result};
