use crate::error::{Error, Result};
use crate::spline::PeriodicSpline;

use super::curve::{ClosedCurve, MIN_VERTICES};

/// Redistributes `n` vertices at equal arclength along the periodic cubic spline
/// through the current vertices. The first new vertex coincides with the old
/// vertex 0.
pub fn resample_uniform(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < MIN_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "resampling needs at least {MIN_VERTICES} vertices, got {n}"
        )));
    }
    let spline = PeriodicSpline::through(curve.vertices())?;
    let segs = spline.segments();
    let lengths: Vec<f64> = (0..segs).map(|k| spline.arclength(k, spline.span(k))).collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NumericDegeneracy {
            vertex: 0,
            reason: "spline has no length".into(),
        });
    }
    let mut out = Vec::with_capacity(n);
    let (mut seg, mut start) = (0usize, 0.0f64);
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while seg + 1 < segs && start + lengths[seg] <= target {
            start += lengths[seg];
            seg += 1;
        }
        let t = spline.invert_arclength(seg, lengths[seg], target - start);
        out.push(spline.point(seg, t));
    }
    ClosedCurve::new(out)
}
