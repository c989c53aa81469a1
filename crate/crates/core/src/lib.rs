//! Semiclassical Schrödinger operators with a potential well in an island,
//! touching the surrounding sea at a single saddle point at energy zero.
//!
//! The crate builds the potential family and its saddle normalization,
//! computes phase-space volume functions, discretizes the operator family
//! (plain, bumped, sea-filled interior reference, well-filled exterior
//! comparison, spectral surgery) on a periodic collocation grid, extracts
//! resonances by complex dilation with dilation-stability filtering, and
//! verifies the counting laws through window counts, relative determinants
//! and argument-principle winding numbers.

pub mod error;
pub mod escape;
pub mod grid;
pub mod potential;

pub use error::{Error, Result};
