//! Randomized spherical graph constructions with exhaustive certificates.
//!
//! The crate builds generalized Ruzsa–Szemerédi graphs on products of
//! spheres, properly edge-coloured graphs without rainbow cliques, and a
//! Behrend-grid baseline, then certifies each instance by exhaustive
//! enumeration and validates the underlying probability estimates by
//! Monte-Carlo simulation.

pub mod construct;
pub mod error;
pub mod estimate;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod pattern;
pub mod rainbow;
pub mod reference;
pub mod seed;
pub mod verify;

pub use error::{Error, Result};
