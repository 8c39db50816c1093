//! Time evolution under curve shortening flow, its parabolic rescaling, and the
//! normal-speed rescaled flow; plus the exact round-sphere radius ODE.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, curvature_frame, enclosed_area, resample_uniform, ClosedCurve};
use crate::vec2::Vec2;

/// Default CFL constant of the parabolic stability bound.
pub const DEFAULT_CFL: f64 = 0.25;

/// Flow law driving the vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// `x_tau = kappa nu` in unrescaled time.
    Mcf,
    /// `x_t = kappa nu + x / 2`.
    Rescaled,
    /// `x_t = S nu`, the normal part of the rescaled flow.
    NormalRescaled,
}

impl FlowMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowMode::Mcf => "mcf",
            FlowMode::Rescaled => "rescaled",
            FlowMode::NormalRescaled => "normal_rescaled",
        }
    }

    /// Whether the clock is the rescaled time `t` rather than `tau`.
    pub fn is_rescaled(self) -> bool {
        !matches!(self, FlowMode::Mcf)
    }
}

impl fmt::Display for FlowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mcf" => Ok(FlowMode::Mcf),
            "rescaled" => Ok(FlowMode::Rescaled),
            "normal_rescaled" | "normal" => Ok(FlowMode::NormalRescaled),
            other => Err(Error::InvalidArgument(format!(
                "unknown flow mode `{other}` (expected mcf, rescaled or normal_rescaled)"
            ))),
        }
    }
}

/// A curve together with its clock. `clock` is `tau` for [`FlowMode::Mcf`] and the
/// rescaled time `t` otherwise.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub curve: ClosedCurve,
    pub clock: f64,
    pub mode: FlowMode,
    pub step_count: u64,
}

impl FlowState {
    pub fn new(curve: ClosedCurve, mode: FlowMode, clock: f64) -> Self {
        Self {
            curve,
            clock,
            mode,
            step_count: 0,
        }
    }
}

/// Knobs of the time stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Constant `c` of the bound `dt <= c h^2 min(1, 1/max kappa^2)`.
    pub cfl: f64,
    /// Resample to uniform arclength after every `resample_every`-th step; 0 never.
    pub resample_every: u64,
    /// After every step, translate the centroid to the origin and scale the
    /// enclosed area to `2 pi`. Only meaningful in the rescaled modes, where it
    /// removes the unstable dilation and translation modes of the round shrinker.
    pub pin: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            resample_every: 1,
            pin: false,
        }
    }
}

impl StepOptions {
    /// No resampling, no pinning: vertices follow material points.
    pub fn material(cfl: f64) -> Self {
        Self {
            cfl,
            resample_every: 0,
            pin: false,
        }
    }
}

fn velocity_of(vertices: &[Vec2], mode: FlowMode) -> Result<Vec<Vec2>> {
    let (kappa, normal) = curvature_frame(vertices)?;
    Ok(vertices
        .iter()
        .zip(kappa.iter().zip(&normal))
        .map(|(&x, (&k, &nu))| match mode {
            FlowMode::Mcf => nu * k,
            FlowMode::Rescaled => nu * k + x * 0.5,
            FlowMode::NormalRescaled => nu * (k + 0.5 * x.dot(nu)),
        })
        .collect())
}

/// Per-vertex velocity of the state's flow law.
pub fn velocity(state: &FlowState) -> Result<Vec<Vec2>> {
    velocity_of(state.curve.vertices(), state.mode)
}

/// Largest admissible explicit step `cfl * h^2 * min(1, 1/max kappa^2)` with `h`
/// the shortest edge.
pub fn stability_bound(curve: &ClosedCurve, cfl: f64) -> Result<f64> {
    let (kappa, _) = curvature_frame(curve.vertices())?;
    let kmax2 = kappa.iter().fold(0.0f64, |m, k| m.max(k * k));
    let h = curve.min_edge();
    Ok(cfl * h * h * (1.0f64).min(1.0 / kmax2))
}

/// One RK4 step with the default options (resampling on, no pinning).
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    step_with(state, dt, &StepOptions::default())
}

/// One RK4 step of size `dt`, rejected if `dt` exceeds the stability bound.
pub fn step_with(state: &FlowState, dt: f64, opts: &StepOptions) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let admissible = stability_bound(&state.curve, opts.cfl)?;
    if dt > admissible * (1.0 + 1e-12) {
        return Err(Error::StepRejected { dt, admissible });
    }
    rk4_step(state, dt, opts)
}

fn rk4_step(state: &FlowState, dt: f64, opts: &StepOptions) -> Result<FlowState> {
    let time = state.clock + dt;
    let blow_up = |e: Error| match e {
        Error::BlowUp { .. } => e,
        other => Error::BlowUp {
            time,
            reason: other.to_string(),
        },
    };
    let x0 = state.curve.vertices();
    let stage = |base: &[Vec2], k: &[Vec2], h: f64| -> Vec<Vec2> {
        base.iter().zip(k).map(|(&x, &v)| x + v * h).collect()
    };
    let k1 = velocity_of(x0, state.mode).map_err(blow_up)?;
    let k2 = velocity_of(&stage(x0, &k1, 0.5 * dt), state.mode).map_err(blow_up)?;
    let k3 = velocity_of(&stage(x0, &k2, 0.5 * dt), state.mode).map_err(blow_up)?;
    let k4 = velocity_of(&stage(x0, &k3, dt), state.mode).map_err(blow_up)?;
    let next: Vec<Vec2> = (0..x0.len())
        .map(|i| x0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    let mut curve = ClosedCurve::new(next).map_err(blow_up)?;
    let step_count = state.step_count + 1;
    if opts.resample_every > 0 && step_count.is_multiple_of(opts.resample_every) {
        curve = resample_uniform(&curve, curve.len()).map_err(blow_up)?;
    }
    if opts.pin {
        curve = pin_to_shrinker_scale(&curve).map_err(blow_up)?;
    }
    Ok(FlowState {
        curve,
        clock: time,
        mode: state.mode,
        step_count,
    })
}

/// Advances by `duration` using as many equal substeps as the stability bound
/// requires (re-evaluated between substeps).
pub fn advance(state: &FlowState, duration: f64, opts: &StepOptions) -> Result<FlowState> {
    if !(duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be non-negative, got {duration}")));
    }
    let target = state.clock + duration;
    let mut s = state.clone();
    loop {
        let remaining = target - s.clock;
        if remaining <= 1e-13 * target.abs().max(1.0) {
            s.clock = target;
            return Ok(s);
        }
        let bound = stability_bound(&s.curve, opts.cfl).map_err(|e| Error::BlowUp {
            time: s.clock,
            reason: e.to_string(),
        })?;
        let substeps = (remaining / bound).ceil().max(1.0);
        s = rk4_step(&s, remaining / substeps, opts)?;
    }
}

/// Translates the area centroid to the origin and scales about it so that the
/// enclosed area is `2 pi`, the area of the round shrinker.
pub fn pin_to_shrinker_scale(curve: &ClosedCurve) -> Result<ClosedCurve> {
    let c = centroid(curve);
    let area = enclosed_area(curve);
    if !(area > 0.0) {
        return Err(Error::InvalidCurve(format!("non-positive enclosed area {area}")));
    }
    ClosedCurve::new(
        curve
            .translated(-c)
            .scaled((TAU / area).sqrt())
            .into_vertices(),
    )
}

/// Singular time of curve shortening flow started from `curve` at `tau = 0`:
/// the area decreases at rate exactly `2 pi`, so `T = A / (2 pi)`.
pub fn estimate_singular_time(curve: &ClosedCurve) -> f64 {
    enclosed_area(curve) / TAU
}

/// Parabolic rescaling `x / sqrt(T - tau)` of a curve at unrescaled time `tau`,
/// returning the rescaled curve and rescaled time `t = -ln(T - tau)`.
pub fn rescale_to_normalized(
    curve: &ClosedCurve,
    tau: f64,
    singular_time: f64,
) -> Result<(ClosedCurve, f64)> {
    let gap = singular_time - tau;
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rescaling needs tau < T, got tau = {tau}, T = {singular_time}"
        )));
    }
    let scaled = ClosedCurve::new(curve.scaled(1.0 / gap.sqrt()).into_vertices())?;
    Ok((scaled, -gap.ln()))
}

/// Terminal event of the sphere radius ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereEvent {
    /// The radius collapsed towards zero.
    Extinct { t: f64 },
    /// The radius left every bounded region.
    Escaped { t: f64 },
}

/// Radius samples `(t, r)` of the round sphere under the rescaled flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereTrajectory {
    pub dimension: u32,
    pub samples: Vec<(f64, f64)>,
    pub event: Option<SphereEvent>,
}

/// Integrates `dr/dt = r/2 - n/r` by RK4. The sphere of radius `sqrt(2n)` is the
/// fixed point. Integration stops at extinction or escape.
pub fn sphere_radius_ode(n: u32, r0: f64, t_end: f64, dt: f64) -> Result<SphereTrajectory> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial radius must be positive, got {r0}")));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let nf = f64::from(n);
    let fixed = (2.0 * nf).sqrt();
    let floor = 1e-3 * r0.min(fixed);
    let ceiling = 1e3 * r0.max(fixed);
    let rhs = |r: f64| 0.5 * r - nf / r;
    let steps = (t_end / dt).round() as u64;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    let mut r = r0;
    samples.push((0.0, r));
    for k in 1..=steps {
        let k1 = rhs(r);
        let k2 = rhs(r + 0.5 * dt * k1);
        let k3 = rhs(r + 0.5 * dt * k2);
        let k4 = rhs(r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t = k as f64 * dt;
        if !r.is_finite() || r < floor {
            return Ok(SphereTrajectory {
                dimension: n,
                samples,
                event: Some(SphereEvent::Extinct { t }),
            });
        }
        samples.push((t, r));
        if r > ceiling {
            return Ok(SphereTrajectory {
                dimension: n,
                samples,
                event: Some(SphereEvent::Escaped { t }),
            });
        }
    }
    Ok(SphereTrajectory {
        dimension: n,
        samples,
        event: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn circle(r: f64, n: usize) -> ClosedCurve {
        ClosedCurve::circle(r, Vec2::ZERO, n).unwrap()
    }

    fn mean_radius(c: &ClosedCurve) -> f64 {
        c.vertices().iter().map(|v| v.norm()).sum::<f64>() / c.len() as f64
    }

    #[test]
    fn parses_modes() {
        assert_eq!("normal".parse::<FlowMode>().unwrap(), FlowMode::NormalRescaled);
        assert_eq!("mcf".parse::<FlowMode>().unwrap(), FlowMode::Mcf);
        assert!("heat".parse::<FlowMode>().is_err());
    }

    #[test]
    fn velocity_examples() {
        let s = FlowState::new(circle(SQRT_2, 64), FlowMode::NormalRescaled, 0.0);
        assert!(velocity(&s).unwrap().iter().all(|v| v.norm() < 1e-10));

        let s = FlowState::new(circle(1.0, 64), FlowMode::Rescaled, 0.0);
        for (v, x) in velocity(&s).unwrap().iter().zip(s.curve.vertices()) {
            assert_abs_diff_eq!(v.dot(*x), -0.5, epsilon = 1e-12);
        }

        let s = FlowState::new(circle(2.0, 64), FlowMode::Mcf, 0.0);
        for (v, x) in velocity(&s).unwrap().iter().zip(s.curve.vertices()) {
            assert_abs_diff_eq!(v.dot(*x) / 2.0, -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_step_beyond_bound() {
        let s = FlowState::new(circle(SQRT_2, 256), FlowMode::NormalRescaled, 0.0);
        match step(&s, 1e-3) {
            Err(Error::StepRejected { dt, admissible }) => {
                assert_eq!(dt, 1e-3);
                assert!(admissible < 1e-3 && admissible > 0.0);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn shrinker_is_fixed() {
        let mut s = FlowState::new(circle(SQRT_2, 128), FlowMode::NormalRescaled, 0.0);
        let dt = stability_bound(&s.curve, DEFAULT_CFL).unwrap();
        for _ in 0..20 {
            let next = step(&s, dt).unwrap();
            for (a, b) in next.curve.vertices().iter().zip(s.curve.vertices()) {
                assert!((*a - *b).norm() < 1e-8);
            }
            assert!(next.clock > s.clock);
            s = next;
        }
    }

    #[test]
    fn circle_mcf_radius_law() {
        let mut s = FlowState::new(circle(2.0, 256), FlowMode::Mcf, 0.0);
        for _ in 0..10_000 {
            s = step(&s, 1e-4).unwrap();
        }
        assert_abs_diff_eq!(s.clock, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mean_radius(&s.curve), SQRT_2, epsilon = 5e-4);
    }

    fn circle_error(dt: f64) -> f64 {
        let mut s = FlowState::new(circle(2.0, 16), FlowMode::Mcf, 0.0);
        let steps = (1.5 / dt).round() as usize;
        for _ in 0..steps {
            s = step(&s, dt).unwrap();
        }
        (mean_radius(&s.curve) - (4.0f64 - 2.0 * 1.5).sqrt()).abs()
    }

    #[test]
    fn rk4_temporal_order() {
        // A regular polygon stays regular with dr/dtau = -1/r exactly, so the
        // only error is temporal.
        let (coarse, fine) = (circle_error(0.03), circle_error(0.015));
        let order = (coarse / fine).log2();
        assert!(order >= 3.5, "order {order} ({coarse:e}, {fine:e})");
    }

    #[test]
    fn advance_substeps_to_target() {
        let s = FlowState::new(circle(2.0, 64), FlowMode::Mcf, 0.0);
        let out = advance(&s, 0.5, &StepOptions::default()).unwrap();
        assert_eq!(out.clock, 0.5);
        assert!(out.step_count > 1);
        assert_abs_diff_eq!(mean_radius(&out.curve), 3.0f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn singular_time_and_rescaling() {
        assert_abs_diff_eq!(estimate_singular_time(&circle(2.0, 128)), 2.0, epsilon = 1e-10);
        let e = ClosedCurve::ellipse(2.0, 1.0, 128).unwrap();
        assert_abs_diff_eq!(estimate_singular_time(&e), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(estimate_singular_time(&e.scaled(3.0)), 9.0, epsilon = 1e-8);

        let (same, t) = rescale_to_normalized(&e, 0.0, 1.0).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(same.vertices(), e.vertices());
        let (c, _) = rescale_to_normalized(&circle((2.0f64 * 0.75).sqrt(), 64), 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(mean_radius(&c), SQRT_2, epsilon = 1e-12);
        assert!(matches!(rescale_to_normalized(&e, 1.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sphere_fixed_points_and_instability() {
        for n in 1..=5u32 {
            let fixed = (2.0 * f64::from(n)).sqrt();
            let traj = sphere_radius_ode(n, fixed, 10.0, 1e-3).unwrap();
            assert!(traj.event.is_none());
            assert!(traj.samples.iter().all(|&(_, r)| (r - fixed).abs() < 1e-10));
        }
        let traj = sphere_radius_ode(1, 1.4, 20.0, 1e-3).unwrap();
        assert!(matches!(traj.event, Some(SphereEvent::Extinct { .. })));
        assert!(traj.samples.windows(2).all(|w| w[1].1 < w[0].1));
        let traj = sphere_radius_ode(2, 2.1, 40.0, 1e-3).unwrap();
        assert!(matches!(traj.event, Some(SphereEvent::Escaped { .. })));
        assert!(sphere_radius_ode(1, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn pinning_normalises_area_and_centre() {
        let e = ClosedCurve::ellipse(3.0, 1.0, 128).unwrap().translated(Vec2::new(1.0, 2.0));
        let p = pin_to_shrinker_scale(&e).unwrap();
        assert_abs_diff_eq!(enclosed_area(&p), TAU, epsilon = 1e-10);
        assert_abs_diff_eq!(centroid(&p).norm(), 0.0, epsilon = 1e-10);
    }
}
