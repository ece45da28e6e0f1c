//! Largest small polygons by sequential convex optimization.
//!
//! The maximal-area problem for a polygon of unit diameter is a nonconvex
//! quadratically constrained program. [`formulation`] writes it as a
//! difference-of-convex program, [`ccp`] solves it by repeatedly maximizing a
//! convex restriction with the interior-point solver in [`conic`], and
//! [`verification`] checks the structure of the resulting polygons.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ccp;
pub mod conic;
pub mod error;
pub mod fmt;
pub mod formulation;
pub mod geometry;
pub mod reporting;
pub mod verification;

pub use error::{Error, Result};
