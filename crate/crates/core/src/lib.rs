//! Curve shortening flow, its rescaled and normal-speed variants, and diagnostics
//! for convergence to the round shrinking circle.

// `!(x > 0.0)` is used on purpose throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod geometry;
pub mod shrinker;
pub mod spectral;
pub mod spline;
pub mod vec2;

pub use error::{Error, Result};
pub use geometry::{ClosedCurve, GeometrySnapshot};
pub use vec2::Vec2;
