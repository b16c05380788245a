//! Homogeneous affine surfaces in two dimensions.
//!
//! The crate carries the catalog of Type A (constant Christoffel symbols)
//! and Type B (symbols proportional to `1/x1`) model geometries, and tools to
//! check their properties numerically: quasi-Einstein solution spaces,
//! affine Killing fields and their flows, geodesics with escape detection,
//! strong projective flattening and affine maps between models.

pub mod catalog;
pub mod connection;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod killing;
pub mod ode;
pub mod projective;
pub mod qe;

pub use error::{Error, Result};
