//! Forward modelling of the damped acoustic wave equation and boundary-data
//! inversion by Neumann-series time reversal.
//!
//! The computational domain is `Omega = [-1, 1]^2`, sampled by a uniform
//! [`Grid2D`]. A [`Medium`] carries the sound speed and attenuation, both
//! trivial outside `Omega`. [`wave::forward_solve`] produces the boundary
//! trace of the damped wave, and [`reconstruct::neumann_series`] recovers the
//! initial pressure from it.

pub mod error;
pub mod field;
pub mod media;
pub mod raygeo;
pub mod reconstruct;
pub mod wave;

pub use error::{Error, Result};
pub use field::{BoundaryTrace, Grid2D, ScalarField2D, WavePair};
pub use media::{AttenuationParams, Medium};
pub use wave::SolveConfig;
pub use reconstruct::Variant;
