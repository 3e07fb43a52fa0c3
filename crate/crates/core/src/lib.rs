//! Pseudospectral vorticity solver on the periodic box, with diagnostics for
//! the geometry of intense-vorticity regions, multi-scale averages of vortex
//! stretching, and oscillation norms of the vorticity direction.

// `!(x > 0.0)` is how parameter checks reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod harmonic;
pub mod oscillation;
pub mod grid;
pub(crate) mod numeric;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, SpectralField, SpectralVector, VectorField};
