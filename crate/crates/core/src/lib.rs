//! Numerical laboratory for k-dimensional widths of space-form balls.
//!
//! The crate is organised by subsystem:
//!
//! * [`spaceform`]: `sn_K`, unit ball/sphere constants, warped profiles and
//!   totally geodesic slices.
//! * [`comparison`]: radial `k`-area contracting maps between warped balls.
//! * [`sweepout`]: equatorial sweepouts and tightening of 1-dimensional
//!   polyline sweepouts.
//! * [`varifold`]: discrete varifolds, first variation, densities and the
//!   boundary area estimate built on Brendle's vector field.
//! * [`stability`]: the second variation form with Robin boundary term on
//!   triangulated surfaces and the hyperbolic isoperimetric check.

pub mod comparison;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod spaceform;
pub mod stability;
pub mod sweepout;
pub mod varifold;

pub use error::{Error, Result};
pub use spaceform::{Curvature, SpaceFormBall, WarpedProfile};
