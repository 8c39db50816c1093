//! Gaussian area, the defect energy and its quotient, the lower bound on the
//! quotient's rate, and checks on recorded time series.

mod identities;

pub use identities::{
    identity_convergence, identity_residual, meets_requirement, roundoff_floor, verification_step,
    verification_suite, IdentityKind, IdentityReport, MaterialWindow, CONVERGENCE_GATED,
    IDENTITY_NAMES, REQUIRED_ORDER, SHRINKER_RESIDUAL_LIMIT,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;

/// Relative floor: the quotient `N = E'/E` is reported only when `E > floor * Omega`.
pub const QUOTIENT_FLOOR: f64 = 1e-14;

/// Gaussian area `Omega = integral of exp(-|x|^2/4) ds`.
pub fn gaussian_area(snap: &GeometrySnapshot) -> f64 {
    snap.integral(&vec![1.0; snap.len()], true)
}

/// Defect energy `E = integral of S^2 exp(-|x|^2/4) ds`.
pub fn energy(snap: &GeometrySnapshot) -> f64 {
    let s2: Vec<f64> = snap.defect.iter().map(|s| s * s).collect();
    snap.integral(&s2, true)
}

/// `F = L S + (kappa^2 + 1/2) S`, the time derivative of `S` along the normal flow.
pub fn defect_rate(snap: &GeometrySnapshot) -> Vec<f64> {
    let ls = snap.l(&snap.defect);
    ls.iter()
        .zip(snap.defect.iter().zip(&snap.curvature))
        .map(|(l, (s, k))| l + (k * k + 0.5) * s)
        .collect()
}

/// `E' = -integral S^4 + 2 integral S F` (weighted), evaluated by quadrature.
pub fn energy_rate(snap: &GeometrySnapshot) -> f64 {
    let f = defect_rate(snap);
    let integrand: Vec<f64> = snap
        .defect
        .iter()
        .zip(&f)
        .map(|(s, f)| -s.powi(4) + 2.0 * s * f)
        .collect();
    snap.integral(&integrand, true)
}

/// `N = E'/E`, undefined when `E <= QUOTIENT_FLOOR * omega`.
pub fn dirichlet_quotient(energy: f64, energy_rate: f64, omega: f64) -> Result<f64> {
    let floor = QUOTIENT_FLOOR * omega.abs();
    if !(energy > floor) {
        return Err(Error::QuotientUndefined { energy, floor });
    }
    Ok(energy_rate / energy)
}

/// Sup-norms entering the lower bound on `N'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NdotIngredients {
    pub sup_s: f64,
    pub sup_ds: f64,
    pub sup_d2s: f64,
    /// `sup |S L S|`
    pub sup_s_ls: f64,
    /// `sup |kappa^2 + 1/2|`
    pub sup_curvature_sq_half: f64,
    pub sup_curvature: f64,
    pub sup_curvature_cubed: f64,
    pub sup_d_curvature: f64,
    pub sup_position: f64,
}

/// Lower bound `N' >= -C (|S| + |S_s| + |S_ss|)` in sup-norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NdotBound {
    /// `-C (sup_s + sup_ds + sup_d2s)`; never positive.
    pub value: f64,
    /// The assembled constant `C`; zero when all defect norms vanish.
    pub constant: f64,
    /// `sup_s + sup_ds + sup_d2s`.
    pub norm_sum: f64,
    /// Contribution of the term-by-term estimates of the displayed `N'` formula.
    pub displayed_terms: f64,
    /// Contribution of the two integrals the displayed formula omits,
    /// `-integral [S S_s^2 (x.nu) + kappa S^2 (x.T) S_s]`, after integrating by parts.
    pub omitted_terms: f64,
    pub ingredients: NdotIngredients,
}

impl NdotIngredients {
    pub fn from_snapshot(snap: &GeometrySnapshot) -> Self {
        let sup = |f: &dyn Fn(usize) -> f64| (0..snap.len()).fold(0.0f64, |m, i| m.max(f(i).abs()));
        let ls = snap.l(&snap.defect);
        let ks = snap.d_s(&snap.curvature);
        Self {
            sup_s: sup(&|i| snap.defect[i]),
            sup_ds: sup(&|i| snap.d_defect[i]),
            sup_d2s: sup(&|i| snap.d2_defect[i]),
            sup_s_ls: sup(&|i| snap.defect[i] * ls[i]),
            sup_curvature_sq_half: sup(&|i| snap.curvature[i].powi(2) + 0.5),
            sup_curvature: sup(&|i| snap.curvature[i]),
            sup_curvature_cubed: sup(&|i| snap.curvature[i].powi(3)),
            sup_d_curvature: sup(&|i| ks[i]),
            sup_position: sup(&|i| snap.position[i].norm()),
        }
    }

    /// Sums the term-by-term estimates. Each bounds one integral of the `N'`
    /// formula divided by `E`:
    ///
    /// - `2 int S^3 F`: `2 (|S LS| + |kappa^2+1/2| |S|^2)`
    /// - `2 int S (4 kappa S S_ss + S S_s kappa_s + 2 S^2 kappa^3)`: `2 (4 |kappa| |S_ss| + |kappa_s| |S_s| + 2 |kappa^3| |S|)`
    /// - `int S^2 (kappa_s S_s + kappa L S)`: `|kappa_s| |S_s| + |kappa| (|x|/2 |S_s| + |S_ss|)`
    /// - `2 int S^2 (kappa_s S_s + kappa S_ss - c (x.T) kappa S_s)`, `c <= 1`: `2 (|kappa_s| |S_s| + |kappa| |S_ss| + |x| |kappa| |S_s|)`
    /// - omitted `int S S_s^2 (x.nu)`: `(|x| |kappa| |S_s| + |x| |S_ss| + |x|^2 |S_s| / 2) / 2`
    /// - omitted `int kappa S^2 (x.T) S_s`: `|kappa| |x| |S_s|`
    pub fn assemble(&self) -> NdotBound {
        let (s0, s1, s2) = (self.sup_s, self.sup_ds, self.sup_d2s);
        let (k, k3, ks, x) = (
            self.sup_curvature,
            self.sup_curvature_cubed,
            self.sup_d_curvature,
            self.sup_position,
        );
        let cubic = 2.0 * (self.sup_s_ls + self.sup_curvature_sq_half * s0 * s0);
        let hessian = 2.0 * (4.0 * k * s2 + ks * s1 + 2.0 * k3 * s0);
        let mean_curvature = ks * s1 + k * (0.5 * x * s1 + s2);
        let second_form = 2.0 * (ks * s1 + k * s2 + x * k * s1);
        let displayed_terms = cubic + hessian + mean_curvature + second_form;
        let omitted_terms = 0.5 * (x * k * s1 + x * s2 + 0.5 * x * x * s1) + k * x * s1;
        let total = displayed_terms + omitted_terms;
        let norm_sum = s0 + s1 + s2;
        let constant = if norm_sum > 0.0 { total / norm_sum } else { 0.0 };
        NdotBound {
            value: -total,
            constant,
            norm_sum,
            displayed_terms,
            omitted_terms,
            ingredients: *self,
        }
    }
}

/// The lower bound on `N'` at one instant. The bound itself does not involve
/// `E`; callers compare it with `N'` only where the quotient is defined.
pub fn ndot_bound(snap: &GeometrySnapshot) -> NdotBound {
    NdotIngredients::from_snapshot(snap).assemble()
}

/// Cauchy-Schwarz gap `int S^2 int G^2 - (int S G)^2 >= 0` with `G = -S^3 + 2F`.
pub fn cauchy_schwarz_gap(snap: &GeometrySnapshot) -> f64 {
    let f = defect_rate(snap);
    let g: Vec<f64> = snap.defect.iter().zip(&f).map(|(s, f)| -s.powi(3) + 2.0 * f).collect();
    let ss: Vec<f64> = snap.defect.iter().map(|s| s * s).collect();
    let gg: Vec<f64> = g.iter().map(|v| v * v).collect();
    let sg: Vec<f64> = snap.defect.iter().zip(&g).map(|(s, g)| s * g).collect();
    let cross = snap.integral(&sg, true);
    snap.integral(&ss, true) * snap.integral(&gg, true) - cross * cross
}

/// Per-interval residual `|Omega_{k+1} - Omega_k + (E_k + E_{k+1}) dt / 2|` of the
/// integrated monotonicity formula along samples `(t, Omega, E)`.
pub fn monotonicity_residual(series: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "monotonicity check needs at least 3 samples, got {}",
            series.len()
        )));
    }
    if let Some(k) = series.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidArgument(format!(
            "sample times must be strictly increasing (violated at index {})",
            k + 1
        )));
    }
    Ok(series
        .windows(2)
        .map(|w| {
            let (t0, o0, e0) = w[0];
            let (t1, o1, e1) = w[1];
            (o1 - o0 + 0.5 * (e0 + e1) * (t1 - t0)).abs()
        })
        .collect())
}

/// Power-law fit `|S| ~ Q^theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LojasiewiczFit {
    pub theta: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// Samples discarded for non-positive `Q` or norm.
    pub dropped: usize,
    pub used: usize,
}

/// Least-squares slope of `log |S|` against `log Q` over samples `(Q, |S|)`, with
/// `|S|` the weighted L2 norm of the defect.
pub fn lojasiewicz_probe(samples: &[(f64, f64)]) -> Result<LojasiewiczFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(q, s)| *q > 0.0 && *s > 0.0)
        .map(|(q, s)| (q.ln(), s.ln()))
        .collect();
    let dropped = samples.len() - pts.len();
    if pts.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pts.len(),
        });
    }
    let (slope, intercept, residual) = least_squares(&pts)
        .ok_or_else(|| Error::FitDegenerate("all retained samples share the same Q".into()))?;
    let _ = intercept;
    Ok(LojasiewiczFit {
        theta: slope,
        residual,
        dropped,
        used: pts.len(),
    })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b, rms residual)`, or
/// `None` when the abscissae do not vary.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-300) || sxx <= 1e-24 * pts.iter().map(|p| p.0 * p.0).sum::<f64>() {
        return None;
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    Some((a, b, rms))
}

/// One time sample of the run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub omega: f64,
    pub energy: f64,
    /// `N = E'/E`; `None` below the energy floor.
    pub quotient: Option<f64>,
    pub energy_rate: f64,
    pub sup_s: f64,
    pub sup_ds: f64,
    pub sup_d2s: f64,
    pub ndot_bound: f64,
    /// `sup (2 kappa^2 + 1)`, the pointwise growth bound for `E`.
    pub growth_bound: f64,
    pub q: f64,
    pub v_c0: Option<f64>,
    pub v_c1: Option<f64>,
    pub v_c2: Option<f64>,
    pub v_c2_alpha: Option<f64>,
}

impl DiagnosticsRecord {
    /// Fills every field except the graph norms. `reference_omega` is the
    /// Gaussian area of the round shrinker.
    pub fn from_snapshot(t: f64, snap: &GeometrySnapshot, reference_omega: f64) -> Self {
        let omega = gaussian_area(snap);
        let e = energy(snap);
        let edot = energy_rate(snap);
        let bound = ndot_bound(snap);
        let kmax2 = snap.curvature.iter().fold(0.0f64, |m, k| m.max(k * k));
        Self {
            t,
            omega,
            energy: e,
            quotient: dirichlet_quotient(e, edot, omega).ok(),
            energy_rate: edot,
            sup_s: bound.ingredients.sup_s,
            sup_ds: bound.ingredients.sup_ds,
            sup_d2s: bound.ingredients.sup_d2s,
            ndot_bound: bound.value,
            growth_bound: 2.0 * (kmax2 + 0.5),
            q: omega - reference_omega,
            v_c0: None,
            v_c1: None,
            v_c2: None,
            v_c2_alpha: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{snapshot, ClosedCurve};
    use crate::vec2::Vec2;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, SQRT_2, TAU};

    fn circle_snap(r: f64) -> GeometrySnapshot {
        snapshot(&ClosedCurve::circle(r, Vec2::ZERO, 256).unwrap()).unwrap()
    }

    #[test]
    fn circle_functionals_match_closed_forms() {
        let s = circle_snap(SQRT_2);
        assert_abs_diff_eq!(gaussian_area(&s), TAU * SQRT_2 * (-0.5f64).exp(), epsilon = 1e-10);
        assert!(energy(&s) < 1e-18);
        assert!(energy_rate(&s).abs() < 1e-12);
        let s = circle_snap(2.0);
        assert_abs_diff_eq!(gaussian_area(&s), 4.0 * PI * (-1.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(energy(&s), PI * (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn circle_energy_rate_matches_radius_ode() {
        // Circles stay circles under the normal flow with dr/dt = r/2 - 1/r.
        let e_of = |r: f64| TAU * r * (-r * r / 4.0).exp() * (1.0 / r - r / 2.0).powi(2);
        let r = 1.2;
        let d = 1e-4;
        let rdot = r / 2.0 - 1.0 / r;
        let fd = (e_of(r + d * rdot) - e_of(r - d * rdot)) / (2.0 * d);
        assert_abs_diff_eq!(energy_rate(&circle_snap(r)), fd, epsilon = 1e-6);
    }

    #[test]
    fn quotient_and_floor() {
        assert_eq!(dirichlet_quotient(2.0, -1.0, 5.0).unwrap(), -0.5);
        assert!(matches!(
            dirichlet_quotient(0.0, 0.0, 5.0),
            Err(Error::QuotientUndefined { .. })
        ));
    }

    #[test]
    fn ndot_bound_vanishes_on_shrinker_and_scales() {
        let b = ndot_bound(&circle_snap(SQRT_2));
        // Only round-off in S survives on the discrete shrinker.
        assert!(b.value.abs() < 1e-7 && b.value <= 0.0);
        let ing = ndot_bound(&circle_snap(1.7)).ingredients;
        let mut scaled = ing;
        scaled.sup_s *= 3.0;
        scaled.sup_ds *= 3.0;
        scaled.sup_d2s *= 3.0;
        assert_abs_diff_eq!(scaled.assemble().norm_sum, 3.0 * ing.assemble().norm_sum, epsilon = 1e-12);
    }

    #[test]
    fn monotonicity_residual_checks_input() {
        assert!(monotonicity_residual(&[(0.0, 1.0, 0.0), (1.0, 1.0, 0.0)]).is_err());
        assert!(monotonicity_residual(&[(0.0, 1.0, 0.0), (1.0, 1.0, 0.0), (1.0, 1.0, 0.0)]).is_err());
        let flat = [(0.0, 5.0, 0.0), (0.5, 5.0, 0.0), (1.0, 5.0, 0.0)];
        assert!(monotonicity_residual(&flat).unwrap().iter().all(|r| *r < 1e-12));
        // Omega = e^{-t}, E = e^{-t}: trapezoid error is O(dt^3) per interval.
        let series: Vec<_> = (0..11).map(|k| {
            let t = 0.1 * k as f64;
            (t, (-t).exp(), (-t).exp())
        }).collect();
        assert!(monotonicity_residual(&series).unwrap().iter().all(|r| *r < 1e-3));
    }

    #[test]
    fn lojasiewicz_exact_power_law() {
        let samples: Vec<(f64, f64)> = (1..20).map(|k| {
            let q = 0.9f64.powi(k);
            (q, q.sqrt())
        }).collect();
        let fit = lojasiewicz_probe(&samples).unwrap();
        assert_abs_diff_eq!(fit.theta, 0.5, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);

        let mut with_bad = samples.clone();
        with_bad.push((-1.0, 0.1));
        assert_eq!(lojasiewicz_probe(&with_bad).unwrap().dropped, 1);

        let flat = vec![(0.3, 0.1), (0.3, 0.2), (0.3, 0.3)];
        assert!(matches!(lojasiewicz_probe(&flat), Err(Error::FitDegenerate(_))));
    }
}
