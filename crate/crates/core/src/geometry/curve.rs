use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spectral::{self, grid_step};
use crate::spline::gauss_legendre;
use crate::vec2::Vec2;

/// Minimum number of vertices of a valid curve.
pub const MIN_VERTICES: usize = 16;

/// Largest admissible ratio between the longest and shortest edge of a
/// uniformly resampled curve.
pub const MAX_EDGE_RATIO: f64 = 1.5;

/// A closed, counterclockwise, embedded polygon standing in for a smooth plane
/// curve. Vertex indices wrap modulo the vertex count; the last vertex is not a
/// repeat of the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    vertices: Vec<Vec2>,
}

impl ClosedCurve {
    /// Validates vertex count, finiteness, edge lengths and orientation.
    /// Simplicity is checked separately by [`ClosedCurve::check_simple`].
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < MIN_VERTICES {
            return Err(Error::InvalidArgument(format!(
                "a closed curve needs at least {MIN_VERTICES} vertices, got {n}"
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericDegeneracy {
                vertex: i,
                reason: "non-finite coordinate".into(),
            });
        }
        let scale = vertices.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for i in 0..n {
            let e = (vertices[(i + 1) % n] - vertices[i]).norm();
            if e <= 1e-14 * scale {
                return Err(Error::NumericDegeneracy {
                    vertex: i,
                    reason: "zero-length edge".into(),
                });
            }
        }
        let curve = Self { vertices };
        if curve.polygon_area() <= 0.0 {
            return Err(Error::InvalidCurve(
                "signed area is not positive (curve must be counterclockwise)".into(),
            ));
        }
        Ok(curve)
    }

    /// Regular polygon inscribed in the circle of radius `radius` about `center`.
    pub fn circle(radius: f64, center: Vec2, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("circle radius must be positive, got {radius}")));
        }
        Self::new(
            (0..n)
                .map(|j| center + Vec2::polar(radius, grid_step(n) * j as f64))
                .collect(),
        )
    }

    /// Axis-aligned ellipse about the origin, sampled at equal arclength starting
    /// at `(a, 0)`.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse semi-axes must be positive, got ({a}, {b})"
            )));
        }
        Self::from_parametric(
            n,
            |t| Vec2::new(a * t.cos(), b * t.sin()),
            |t| Vec2::new(-a * t.sin(), b * t.cos()),
        )
    }

    /// Star-shaped curve `rho(theta) * (cos theta, sin theta)` sampled at equal
    /// arclength. `drho` is the derivative of `rho`.
    pub fn radial(n: usize, rho: impl Fn(f64) -> f64, drho: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_parametric(
            n,
            |t| Vec2::polar(rho(t), t),
            |t| Vec2::polar(drho(t), t) + Vec2::polar(rho(t), t).rot90(),
        )
    }

    /// Samples a smooth closed parametric curve on `[0, 2pi)` at `n` points of
    /// equal arclength, the first at parameter 0.
    pub fn from_parametric(
        n: usize,
        pos: impl Fn(f64) -> Vec2,
        vel: impl Fn(f64) -> Vec2,
    ) -> Result<Self> {
        if n < MIN_VERTICES {
            return Err(Error::InvalidArgument(format!(
                "a closed curve needs at least {MIN_VERTICES} vertices, got {n}"
            )));
        }
        let panels = 16 * n;
        let dp = TAU / panels as f64;
        let speed = |t: f64| vel(t).norm();
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        for p in 0..panels {
            let a = dp * p as f64;
            let s = cumulative[p] + gauss_legendre(a, a + dp, speed);
            cumulative.push(s);
        }
        let total = cumulative[panels];
        let mut vertices = Vec::with_capacity(n);
        let mut panel = 0;
        for k in 0..n {
            let target = total * k as f64 / n as f64;
            while panel + 1 < panels && cumulative[panel + 1] <= target {
                panel += 1;
            }
            let a = dp * panel as f64;
            let local = target - cumulative[panel];
            let mut t = a + dp * local / (cumulative[panel + 1] - cumulative[panel]);
            for _ in 0..20 {
                let f = gauss_legendre(a, t, speed) - local;
                let step = f / speed(t);
                t -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            vertices.push(pos(t));
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vec2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .collect()
    }

    /// Ratio of the longest to the shortest edge.
    pub fn edge_ratio(&self) -> f64 {
        let e = self.edge_lengths();
        let (lo, hi) = e
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi / lo
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn polygon_length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Shoelace area of the polygon itself.
    pub fn polygon_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Length of the trigonometric interpolant through the vertices.
    pub fn length(&self) -> f64 {
        let (dx, dy) = self.spectral_derivatives();
        let du = grid_step(self.len());
        dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).sum::<f64>() * du
    }

    pub(crate) fn spectral_derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = self.vertices.iter().map(|v| v.x).collect();
        let ys: Vec<f64> = self.vertices.iter().map(|v| v.y).collect();
        (spectral::derivative(&xs), spectral::derivative(&ys))
    }

    pub fn is_simple(&self) -> bool {
        self.first_crossing().is_none()
    }

    /// Fails with [`Error::InvalidCurve`] naming the first pair of crossing edges.
    pub fn check_simple(&self) -> Result<()> {
        match self.first_crossing() {
            None => Ok(()),
            Some((i, j)) => Err(Error::InvalidCurve(format!(
                "self-intersection between edges {i} and {j}"
            ))),
        }
    }

    fn first_crossing(&self) -> Option<(usize, usize)> {
        if self.is_star_shaped_about_mean() {
            return None;
        }
        let n = self.len();
        let v = &self.vertices;
        for i in 0..n {
            let (a0, a1) = (v[i], v[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (b0, b1) = (v[j], v[(j + 1) % n]);
                if segments_cross(a0, a1, b0, b1) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Cheap sufficient condition for simplicity: seen from the vertex mean, the
    /// polar angle increases strictly along every edge and winds exactly once, so
    /// every ray from the mean meets the polygon once.
    fn is_star_shaped_about_mean(&self) -> bool {
        let n = self.len();
        let c = self.vertices.iter().fold(Vec2::ZERO, |s, &p| s + p) / n as f64;
        let mut winding = 0.0;
        for i in 0..n {
            let (a, b) = (self.vertices[i] - c, self.vertices[(i + 1) % n] - c);
            let cross = a.cross(b);
            if !(cross > 0.0) {
                return false;
            }
            winding += cross.atan2(a.dot(b));
        }
        (winding - std::f64::consts::TAU).abs() < 1e-6
    }

    pub fn translated(&self, d: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + d).collect(),
        }
    }

    /// Scaled about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v * s).collect(),
        }
    }

    /// Rotated about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v.rotate(angle)).collect(),
        }
    }

    /// Symmetric Hausdorff distance between the two polygons.
    pub fn hausdorff_distance(&self, other: &ClosedCurve) -> f64 {
        one_sided(self, other).max(one_sided(other, self))
    }
}

fn one_sided(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let n = b.len();
    a.vertices
        .iter()
        .map(|&p| {
            (0..n)
                .map(|i| point_segment_distance(p, b.vertices[i], b.vertices[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Area enclosed by the trigonometric interpolant through the vertices
/// (the shoelace integral `1/2 * closed-integral(x dy - y dx)` evaluated spectrally).
pub fn enclosed_area(curve: &ClosedCurve) -> f64 {
    let (dx, dy) = curve.spectral_derivatives();
    let du = grid_step(curve.len());
    0.5 * du
        * curve
            .vertices()
            .iter()
            .zip(dx.iter().zip(&dy))
            .map(|(v, (&xu, &yu))| v.x * yu - v.y * xu)
            .sum::<f64>()
}

/// Area centroid of the region bounded by the trigonometric interpolant.
pub fn centroid(curve: &ClosedCurve) -> Vec2 {
    let (dx, dy) = curve.spectral_derivatives();
    let du = grid_step(curve.len());
    let area = enclosed_area(curve);
    let (mut mx, mut my) = (0.0, 0.0);
    for (v, (&xu, &yu)) in curve.vertices().iter().zip(dx.iter().zip(&dy)) {
        mx += 0.5 * v.x * v.x * yu;
        my -= 0.5 * v.y * v.y * xu;
    }
    Vec2::new(mx * du / area, my * du / area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_short_and_clockwise_curves() {
        let c = ClosedCurve::circle(1.0, Vec2::ZERO, 8);
        assert!(matches!(c, Err(Error::InvalidArgument(_))));
        let cw: Vec<Vec2> = ClosedCurve::circle(1.0, Vec2::ZERO, 32)
            .unwrap()
            .vertices()
            .iter()
            .rev()
            .copied()
            .collect();
        assert!(matches!(ClosedCurve::new(cw), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn rejects_repeated_vertex() {
        let mut v = ClosedCurve::circle(1.0, Vec2::ZERO, 32).unwrap().into_vertices();
        v[5] = v[4];
        assert!(matches!(
            ClosedCurve::new(v),
            Err(Error::NumericDegeneracy { vertex: 4, .. })
        ));
    }

    #[test]
    fn unit_circle_area_and_centroid() {
        let c = ClosedCurve::circle(1.0, Vec2::ZERO, 64).unwrap();
        assert_abs_diff_eq!(enclosed_area(&c), PI, epsilon = 1e-12);
        let g = centroid(&c);
        assert_abs_diff_eq!(g.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.length(), TAU, epsilon = 1e-12);
    }

    #[test]
    fn ellipse_area_matches_pi_ab() {
        let c = ClosedCurve::ellipse(2.0, 1.0, 128).unwrap();
        assert_abs_diff_eq!(enclosed_area(&c), 2.0 * PI, epsilon = 1e-9);
        // Equal arclength, so chords differ only through curvature variation.
        assert!(c.edge_ratio() < 1.01);
    }

    #[test]
    fn translated_circle_centroid() {
        let c = ClosedCurve::circle(1.0, Vec2::new(3.0, 0.0), 64).unwrap();
        let g = centroid(&c);
        assert_abs_diff_eq!(g.x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_self_intersection() {
        // Figure-eight-like lemniscate has a crossing at the origin; offset to keep
        // positive signed area.
        let v: Vec<Vec2> = (0..64)
            .map(|j| {
                let t = TAU * j as f64 / 64.0;
                Vec2::new(t.cos() * 2.0, (2.0 * t).sin()) + Vec2::new(0.0, 0.3 * t.sin())
            })
            .collect();
        if let Ok(c) = ClosedCurve::new(v) {
            assert!(!c.is_simple());
            assert!(matches!(c.check_simple(), Err(Error::InvalidCurve(_))));
        }
        assert!(ClosedCurve::ellipse(2.0, 1.0, 64).unwrap().is_simple());
    }
}
