//! Periodic cubic spline through the vertices of a closed polygon, parameterized
//! by cumulative chord length.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

// 6-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Integrate `f` over `[a, b]` with 6-point Gauss-Legendre.
pub(crate) fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    points: Vec<Vec2>,
    /// Knot spacing h_i between point i and i+1 (wrapping).
    spans: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<Vec2>,
}

impl PeriodicSpline {
    pub fn through(points: &[Vec2]) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "periodic spline needs at least 3 points, got {n}"
            )));
        }
        let spans: Vec<f64> = (0..n)
            .map(|i| (points[(i + 1) % n] - points[i]).norm())
            .collect();
        if let Some(i) = spans.iter().position(|&h| !(h > 0.0)) {
            return Err(Error::NumericDegeneracy {
                vertex: i,
                reason: "zero-length edge".into(),
            });
        }

        // Cyclic tridiagonal system for the knot moments.
        let sub: Vec<f64> = (0..n).map(|i| spans[(i + n - 1) % n]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (sub[i] + spans[i])).collect();
        let sup: Vec<f64> = spans.clone();
        let rhs: Vec<Vec2> = (0..n)
            .map(|i| {
                let fwd = (points[(i + 1) % n] - points[i]) / spans[i];
                let bwd = (points[i] - points[(i + n - 1) % n]) / sub[i];
                (fwd - bwd) * 6.0
            })
            .collect();
        let moments = solve_cyclic(&sub, &diag, &sup, &rhs);
        Ok(Self {
            points: points.to_vec(),
            spans,
            moments,
        })
    }

    pub fn segments(&self) -> usize {
        self.points.len()
    }

    pub fn span(&self, seg: usize) -> f64 {
        self.spans[seg]
    }

    /// Position on segment `seg` at local parameter `t` in [0, span].
    pub fn point(&self, seg: usize, t: f64) -> Vec2 {
        let n = self.points.len();
        let h = self.spans[seg];
        let (m0, m1) = (self.moments[seg], self.moments[(seg + 1) % n]);
        let (p0, p1) = (self.points[seg], self.points[(seg + 1) % n]);
        let a = h - t;
        m0 * (a * a * a / (6.0 * h))
            + m1 * (t * t * t / (6.0 * h))
            + (p0 / h - m0 * (h / 6.0)) * a
            + (p1 / h - m1 * (h / 6.0)) * t
    }

    /// Parameter derivative on segment `seg` at local parameter `t`.
    pub fn tangent(&self, seg: usize, t: f64) -> Vec2 {
        let n = self.points.len();
        let h = self.spans[seg];
        let (m0, m1) = (self.moments[seg], self.moments[(seg + 1) % n]);
        let (p0, p1) = (self.points[seg], self.points[(seg + 1) % n]);
        let a = h - t;
        m1 * (t * t / (2.0 * h)) - m0 * (a * a / (2.0 * h)) + (p1 - p0) / h
            - (m1 - m0) * (h / 6.0)
    }

    /// Arclength of segment `seg` between local parameters 0 and `t`.
    pub fn arclength(&self, seg: usize, t: f64) -> f64 {
        gauss_legendre(0.0, t, |s| self.tangent(seg, s).norm())
    }

    /// Local parameter on `seg` at which the arclength from the segment start equals
    /// `target`. Newton iteration seeded by linear interpolation.
    pub fn invert_arclength(&self, seg: usize, seg_len: f64, target: f64) -> f64 {
        let h = self.spans[seg];
        let mut t = (h * target / seg_len).clamp(0.0, h);
        for _ in 0..8 {
            let f = self.arclength(seg, t) - target;
            let df = self.tangent(seg, t).norm();
            let dt = f / df;
            t = (t - dt).clamp(0.0, h);
            // Newton converges quadratically; below this the update is round-off.
            if dt.abs() <= 1e-12 * h {
                break;
            }
        }
        t
    }
}

/// Solve a cyclic tridiagonal system with vector right-hand sides via
/// Sherman-Morrison on top of the Thomas algorithm.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec2]) -> Vec<Vec2> {
    let n = diag.len();
    let alpha = sup[n - 1]; // row n-1, column 0
    let beta = sub[0]; // row 0, column n-1
    let gamma = -diag[0];

    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;

    let x = thomas(sub, &b, sup, rhs);
    let mut u = vec![Vec2::ZERO; n];
    u[0] = Vec2::new(gamma, gamma);
    u[n - 1] = Vec2::new(alpha, alpha);
    let z = thomas(sub, &b, sup, &u);

    let fact_num = x[0] + x[n - 1] * (beta / gamma);
    let fact_den = 1.0 + z[0].x + beta * z[n - 1].x / gamma;
    let fx = fact_num.x / fact_den;
    let fy = fact_num.y / fact_den;
    x.iter()
        .zip(&z)
        .map(|(xi, zi)| Vec2::new(xi.x - fx * zi.x, xi.y - fy * zi.y))
        .collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec2]) -> Vec<Vec2> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Vec2::ZERO; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - d[i - 1] * sub[i]) / m;
    }
    let mut x = vec![Vec2::ZERO; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - x[i + 1] * c[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spline_interpolates_knots() {
        let pts: Vec<Vec2> = (0..20)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / 20.0;
                Vec2::new(2.0 * t.cos(), t.sin() + 0.1 * (3.0 * t).cos())
            })
            .collect();
        let sp = PeriodicSpline::through(&pts).unwrap();
        for i in 0..pts.len() {
            let p = sp.point(i, 0.0);
            assert_abs_diff_eq!(p.x, pts[i].x, epsilon = 1e-13);
            assert_abs_diff_eq!(p.y, pts[i].y, epsilon = 1e-13);
            let q = sp.point(i, sp.span(i));
            let next = pts[(i + 1) % pts.len()];
            assert_abs_diff_eq!(q.x, next.x, epsilon = 1e-13);
            assert_abs_diff_eq!(q.y, next.y, epsilon = 1e-13);
        }
    }

    #[test]
    fn spline_is_c2_across_knots() {
        let pts: Vec<Vec2> = (0..24)
            .map(|j| Vec2::polar(1.0 + 0.2 * (j as f64).sin(), std::f64::consts::TAU * j as f64 / 24.0))
            .collect();
        let sp = PeriodicSpline::through(&pts).unwrap();
        for i in 0..pts.len() {
            let prev = (i + pts.len() - 1) % pts.len();
            let left = sp.tangent(prev, sp.span(prev));
            let right = sp.tangent(i, 0.0);
            assert_abs_diff_eq!(left.x, right.x, epsilon = 1e-11);
            assert_abs_diff_eq!(left.y, right.y, epsilon = 1e-11);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_eleven() {
        let v = gauss_legendre(0.0, 2.0, |x| x.powi(11));
        assert_abs_diff_eq!(v, 2f64.powi(12) / 12.0, epsilon = 1e-10);
    }
}
