//! Magnetic-oriented nodal analysis of lumped circuits coupled to 2D
//! magnetoquasistatic field devices, with an energy-consistent implicit
//! midpoint integrator.

pub mod circuit;
pub mod coupled;
pub mod demo;
mod error;
pub mod field;
pub mod integrator;

pub use error::{MonaError, Result};
