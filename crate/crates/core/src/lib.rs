//! Tensor calculus, operator identities and Lichnerowicz spectra on
//! rotationally symmetric asymptotically hyperbolic surfaces.

pub mod config;
pub mod decompositions;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod identities;
mod linalg;
pub mod operators;
pub mod quasimodes;
pub mod report;
pub mod smoothstep;
pub mod spectral;

pub use error::{Error, Result};
