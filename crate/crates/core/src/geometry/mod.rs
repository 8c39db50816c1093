//! Discrete differential geometry of closed plane curves.
//!
//! Conventions: curves are counterclockwise, the unit normal is the tangent
//! rotated by +90 degrees (inward on convex curves), and curvature is positive on
//! convex curves so that `x_ss = kappa * nu`. With these signs the round circle of
//! radius `sqrt(2)` about the origin satisfies `kappa + x.nu / 2 = 0`.

mod curve;
mod resample;
mod snapshot;

pub use curve::{centroid, enclosed_area, ClosedCurve, MAX_EDGE_RATIO, MIN_VERTICES};
pub use resample::resample_uniform;
pub use snapshot::{curvature_frame, l_operator, snapshot, weighted_integral, GeometrySnapshot};
