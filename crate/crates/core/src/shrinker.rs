//! The round shrinker, normal graphs over it, and rate fitting.

use std::f64::consts::{SQRT_2, TAU};

use serde::Serialize;

use crate::diagnostics::{gaussian_area, least_squares};
use crate::error::{Error, Result};
use crate::geometry::{centroid, snapshot, ClosedCurve};
use crate::spectral::{self, grid_step};
use crate::vec2::Vec2;

/// Radius of the round shrinker in the plane.
pub const SHRINKER_RADIUS: f64 = SQRT_2;

/// Hölder exponent of the discrete `C^{2,alpha}` norm.
pub const HOLDER_EXPONENT: f64 = 0.5;

/// Circle of radius `sqrt 2` about the origin, sampled on `m` equispaced angles.
#[derive(Debug, Clone)]
pub struct ReferenceShrinker {
    curve: ClosedCurve,
    omega: f64,
}

impl ReferenceShrinker {
    pub fn new(m: usize) -> Result<Self> {
        let curve = ClosedCurve::circle(SHRINKER_RADIUS, Vec2::ZERO, m)?;
        let omega = gaussian_area(&snapshot(&curve)?);
        Ok(Self { curve, omega })
    }

    pub fn grid_size(&self) -> usize {
        self.curve.len()
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    /// Gaussian area of the shrinker, `2 pi sqrt(2) e^{-1/2}` up to quadrature.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The grid angle `theta_j = 2 pi j / m`.
    pub fn angle(&self, j: usize) -> f64 {
        grid_step(self.grid_size()) * j as f64
    }
}

/// A star-shaped curve written as `c + (sqrt2 - v(theta)) e_theta` over the
/// shrinker, with `v` positive where the curve lies inside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphOverShrinker {
    pub center: Vec2,
    pub v: Vec<f64>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Discrete Hölder seminorm of `v''` with exponent one half.
    pub holder: f64,
    /// `c0 + c1 + c2 + holder`.
    pub c2_alpha: f64,
}

impl GraphOverShrinker {
    /// Builds the graph from offsets on the uniform angle grid.
    pub fn from_offsets(center: Vec2, v: Vec<f64>) -> Self {
        let m = v.len();
        let dt = grid_step(m);
        let d1: Vec<f64> = (0..m)
            .map(|j| (v[(j + 1) % m] - v[(j + m - 1) % m]) / (2.0 * dt))
            .collect();
        let d2: Vec<f64> = (0..m)
            .map(|j| (v[(j + 1) % m] - 2.0 * v[j] + v[(j + m - 1) % m]) / (dt * dt))
            .collect();
        let sup = |f: &[f64]| f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        // Pairwise quotient over all grid pairs; the weight depends only on the
        // periodic index gap.
        let weight: Vec<f64> = (0..m)
            .map(|k| {
                let gap = k.min(m - k) as f64 * dt;
                if k == 0 { 0.0 } else { gap.powf(-HOLDER_EXPONENT) }
            })
            .collect();
        let mut holder = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                holder = holder.max((d2[i] - d2[j]).abs() * weight[j - i]);
            }
        }
        let (c0, c1, c2) = (sup(&v), sup(&d1), sup(&d2));
        Self {
            center,
            v,
            c0,
            c1,
            c2,
            holder,
            c2_alpha: c0 + c1 + c2 + holder,
        }
    }

    /// Radii `rho_j = sqrt2 - v_j`.
    pub fn radii(&self) -> Vec<f64> {
        self.v.iter().map(|v| SHRINKER_RADIUS - v).collect()
    }

    /// The polygon `c + rho_j e_{theta_j}`.
    pub fn reconstruct(&self) -> Result<ClosedCurve> {
        let m = self.v.len();
        ClosedCurve::new(
            self.radii()
                .iter()
                .enumerate()
                .map(|(j, &r)| self.center + Vec2::polar(r, grid_step(m) * j as f64))
                .collect(),
        )
    }
}

/// Writes `curve` as a radial graph over the shrinker about its area centroid,
/// sampling the trigonometric interpolant of the curve at the shrinker's grid
/// angles.
pub fn graph_decompose(curve: &ClosedCurve, reference: &ReferenceShrinker) -> Result<GraphOverShrinker> {
    let center = centroid(curve);
    let xs: Vec<f64> = curve.vertices().iter().map(|p| p.x - center.x).collect();
    let ys: Vec<f64> = curve.vertices().iter().map(|p| p.y - center.y).collect();
    // Interpolant and its derivative on a refined grid; between refined nodes the
    // curve is a cubic Hermite segment, whose error is negligible at this density.
    let fx = spectral::upsample(&xs, REFINEMENT);
    let fy = spectral::upsample(&ys, REFINEMENT);
    let dfx = spectral::derivative(&fx);
    let dfy = spectral::derivative(&fy);
    let n = fx.len();
    let du = grid_step(n);
    let p: Vec<Vec2> = (0..n).map(|k| Vec2::new(fx[k], fy[k])).collect();
    let dp: Vec<Vec2> = (0..n).map(|k| Vec2::new(dfx[k], dfy[k])).collect();
    for k in 0..n {
        if !(p[k].cross(dp[k]) > 0.0) {
            return Err(Error::GraphDecompositionFailed { angle: p[k].y.atan2(p[k].x) });
        }
    }
    // Unwrapped polar angles of the refined nodes, increasing by 2 pi over one turn.
    let mut phi = Vec::with_capacity(n + 1);
    phi.push(p[0].y.atan2(p[0].x));
    for k in 1..=n {
        let (a, b) = (p[k - 1], p[k % n]);
        phi.push(phi[k - 1] + a.cross(b).atan2(a.dot(b)));
    }
    if (phi[n] - phi[0] - TAU).abs() > 1e-6 {
        return Err(Error::GraphDecompositionFailed { angle: phi[0] });
    }
    let m = reference.grid_size();
    let mut v = Vec::with_capacity(m);
    let mut seg = 0usize;
    for j in 0..m {
        let target = phi[0] + (reference.angle(j) - phi[0]).rem_euclid(TAU);
        while seg > 0 && phi[seg] > target {
            seg -= 1;
        }
        while seg + 1 < n && phi[seg + 1] <= target {
            seg += 1;
        }
        let hermite = Hermite::new(p[seg], dp[seg] * du, p[(seg + 1) % n], dp[(seg + 1) % n] * du);
        let mut s = ((target - phi[seg]) / (phi[seg + 1] - phi[seg])).clamp(0.0, 1.0);
        // Newton from the linear guess; stop once the correction reaches round-off.
        for _ in 0..12 {
            let (q, dq) = hermite.eval(s);
            let raw = q.y.atan2(q.x);
            let angle = raw + TAU * ((target - raw) / TAU).round();
            let rate = q.cross(dq) / q.norm_sq();
            if !(rate > 0.0) {
                return Err(Error::GraphDecompositionFailed { angle: target });
            }
            let step = (angle - target) / rate;
            s -= step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        v.push(SHRINKER_RADIUS - hermite.eval(s).0.norm());
    }
    Ok(GraphOverShrinker::from_offsets(center, v))
}

/// Refinement factor of the interpolant used by [`graph_decompose`].
const REFINEMENT: usize = 8;

/// Cubic Hermite segment on `[0, 1]` with end values and scaled end tangents.
struct Hermite {
    p0: Vec2,
    m0: Vec2,
    p1: Vec2,
    m1: Vec2,
}

impl Hermite {
    fn new(p0: Vec2, m0: Vec2, p1: Vec2, m1: Vec2) -> Self {
        Self { p0, m0, p1, m1 }
    }

    fn eval(&self, s: f64) -> (Vec2, Vec2) {
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (
            self.p0 * h00 + self.m0 * h10 + self.p1 * h01 + self.m1 * h11,
            self.p0 * d00 + self.m0 * d10 + self.p1 * d01 + self.m1 * d11,
        )
    }
}

/// `Q = Omega(curve) - Omega(shrinker)`.
pub fn q_value(curve: &ClosedCurve, reference: &ReferenceShrinker) -> Result<f64> {
    Ok(gaussian_area(&snapshot(curve)?) - reference.omega())
}

/// Gaussian area of the graph as an integral over the angle grid,
/// `sum exp(-|c + rho e_theta|^2 / 4) sqrt(rho^2 + rho'^2) dtheta` with `rho'` the
/// spectral derivative.
pub fn graph_gaussian_area(graph: &GraphOverShrinker) -> f64 {
    let rho = graph.radii();
    let drho = spectral::derivative(&rho);
    let m = rho.len();
    let dt = grid_step(m);
    (0..m)
        .map(|j| {
            let p = graph.center + Vec2::polar(rho[j], dt * j as f64);
            (-p.norm_sq() / 4.0).exp() * rho[j].hypot(drho[j])
        })
        .sum::<f64>()
        * dt
}

/// Exponential fit `y ~ C e^{-m t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub c: f64,
    pub m: f64,
    pub window: (f64, f64),
    /// RMS residual of `log y` about the fitted line.
    pub rms: f64,
    /// Largest deviation of `log y` from the fitted line.
    pub convexity_defect: f64,
    /// Set when the deviation exceeds [`NON_EXPONENTIAL_DEFECT`].
    pub non_exponential: bool,
    pub used: usize,
    pub dropped: usize,
}

/// Deviation of `log y` from its fitted line above which decay is flagged as
/// not exponential.
pub const NON_EXPONENTIAL_DEFECT: f64 = 0.5;

/// Minimum number of positive samples for [`fit_rate`].
pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares fit of `log y = log C - m t` over the samples with `t` in
/// `window`. Non-positive `y` are dropped.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    if !(window.1 > window.0) {
        return Err(Error::InvalidArgument(format!(
            "fit window must be increasing, got [{}, {}]",
            window.0, window.1
        )));
    }
    let in_window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12)
        .collect();
    let pts: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: pts.len(),
        });
    }
    let (slope, intercept, rms) =
        least_squares(&pts).ok_or_else(|| Error::FitDegenerate("all samples share one time".into()))?;
    let defect = pts
        .iter()
        .fold(0.0f64, |a, (t, ly)| a.max((ly - slope * t - intercept).abs()));
    Ok(RateFit {
        c: intercept.exp(),
        m: -slope,
        window,
        rms,
        convexity_defect: defect,
        non_exponential: defect > NON_EXPONENTIAL_DEFECT,
        used: pts.len(),
        dropped: in_window.len() - pts.len(),
    })
}

/// Boundedness of `Q / |v|` along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateLemmaCheck {
    /// Largest ratio over the first half of the samples.
    pub c_tilde: f64,
    /// Largest ratio over the second half.
    pub late_max_ratio: f64,
    /// Largest ratio overall.
    pub max_ratio: f64,
    /// Least-squares slope of the ratio against sample index over the second half.
    pub late_trend: f64,
    /// Late ratios stay within `1 + growth` of `c_tilde`.
    pub bounded: bool,
    /// The fitted increase over the late half is at most `growth * c_tilde`.
    pub no_increasing_trend: bool,
    pub pass: bool,
    /// Every sample had `Q` and `|v|` at round-off level (the shrinker itself).
    pub vacuous: bool,
}

/// Checks `Q <= C |v|` along samples `(Q, |v|)`. Samples with `|v|` and `|Q|`
/// both at most `tol` are skipped as round-off; `|v| <= tol` with `Q > tol` fails.
/// `growth` is the relative increase of the ratio tolerated over the second half.
pub fn rate_lemma_check(series: &[(f64, f64)], tol: f64, growth: f64) -> Result<RateLemmaCheck> {
    let mut ratios = Vec::with_capacity(series.len());
    for (k, &(q, norm)) in series.iter().enumerate() {
        if norm > tol {
            ratios.push(q / norm);
        } else if q > tol {
            return Err(Error::CheckFailed(format!(
                "sample {k}: Q = {q:e} with vanishing graph norm"
            )));
        }
    }
    if ratios.is_empty() {
        return Ok(RateLemmaCheck {
            c_tilde: 0.0,
            late_max_ratio: 0.0,
            max_ratio: 0.0,
            late_trend: 0.0,
            bounded: true,
            no_increasing_trend: true,
            pass: true,
            vacuous: true,
        });
    }
    let half = ratios.len() / 2;
    let max = |r: &[f64]| r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_tilde = if half > 0 { max(&ratios[..half]) } else { ratios[0] };
    let late = &ratios[half..];
    let late_max_ratio = max(late);
    let pts: Vec<(f64, f64)> = late.iter().enumerate().map(|(i, r)| (i as f64, *r)).collect();
    let late_trend = if pts.len() >= 2 {
        least_squares(&pts).map_or(0.0, |fit| fit.0)
    } else {
        0.0
    };
    let allowance = growth * c_tilde.max(0.0);
    let bounded = late_max_ratio <= c_tilde.max(0.0) + allowance || late_max_ratio <= tol;
    let no_increasing_trend = late_trend * late.len() as f64 <= allowance.max(tol);
    Ok(RateLemmaCheck {
        c_tilde,
        late_max_ratio,
        max_ratio: max(&ratios),
        late_trend,
        bounded,
        no_increasing_trend,
        pass: bounded && no_increasing_trend,
        vacuous: false,
    })
}
