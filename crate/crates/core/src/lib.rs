//! Geodetic computation kernel.
//!
//! Angles are radians everywhere inside the library. Grads, degrees,
//! decimilligrads and hours only appear at I/O boundaries through [`angle`].

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod angle;
pub mod coords;
pub mod datum;
pub mod ellipsoid;
pub mod error;
pub mod geodesics;
pub mod heights;
pub mod orbits;
pub mod projections;
pub mod reductions;
pub mod spherical_astro;

pub use angle::Angle;
pub use coords::{EcefCoord, GeodeticCoord};
pub use ellipsoid::Ellipsoid;
pub use error::{GeoError, Result};
pub use projections::PlaneCoord;
