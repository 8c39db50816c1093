//! End-to-end runs: build the initial curve, flow it, sample diagnostics and
//! graph norms, and evaluate the convergence checks on the recorded series.

use std::collections::BTreeMap;
use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{monotonicity_residual, lojasiewicz_probe, DiagnosticsRecord, LojasiewiczFit};
use crate::error::{Error, Result};
use crate::flow::{
    advance, estimate_singular_time, pin_to_shrinker_scale, rescale_to_normalized, FlowMode, FlowState,
    StepOptions, DEFAULT_CFL,
};
use crate::geometry::{enclosed_area, resample_uniform, snapshot, ClosedCurve};
use crate::shrinker::{fit_rate, graph_decompose, rate_lemma_check, RateFit, RateLemmaCheck, ReferenceShrinker};
use crate::vec2::Vec2;

/// Initial curve of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCurve {
    /// Circle of the given radius about the origin.
    Circle { radius: f64 },
    /// Axis-aligned ellipse about the origin.
    Ellipse { a: f64, b: f64 },
    /// `rho(theta) = sqrt 2 + sum a_k cos(k theta)` over the round shrinker.
    Fourier { modes: Vec<(u32, f64)> },
    /// Explicit vertices (resampled to the run's vertex count).
    Points { label: String, vertices: Vec<Vec2> },
}

impl InitialCurve {
    pub fn build(&self, n: usize) -> Result<ClosedCurve> {
        match self {
            InitialCurve::Circle { radius } => ClosedCurve::circle(*radius, Vec2::ZERO, n),
            InitialCurve::Ellipse { a, b } => ClosedCurve::ellipse(*a, *b, n),
            InitialCurve::Fourier { modes } => {
                let rho = |t: f64| SQRT_2 + modes.iter().map(|&(k, a)| a * (f64::from(k) * t).cos()).sum::<f64>();
                let drho = |t: f64| {
                    -modes
                        .iter()
                        .map(|&(k, a)| a * f64::from(k) * (f64::from(k) * t).sin())
                        .sum::<f64>()
                };
                if let Some(t) = (0..720).map(|j| TAU * j as f64 / 720.0).find(|&t| !(rho(t) > 0.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "fourier radius is not positive at angle {t:.3}"
                    )));
                }
                ClosedCurve::radial(n, rho, drho)
            }
            InitialCurve::Points { vertices, .. } => {
                let raw = ClosedCurve::new(vertices.clone())?;
                raw.check_simple()?;
                resample_uniform(&raw, n)
            }
        }
    }
}

impl fmt::Display for InitialCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCurve::Circle { radius } => write!(f, "circle:{radius}"),
            InitialCurve::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            InitialCurve::Fourier { modes } => {
                let parts: Vec<String> = modes.iter().map(|(k, a)| format!("{k}={a}")).collect();
                write!(f, "fourier:{}", parts.join(","))
            }
            InitialCurve::Points { label, .. } => write!(f, "file:{label}"),
        }
    }
}

fn parse_number(field: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("{field}: `{s}` is not a finite number")))
}

impl FromStr for InitialCurve {
    type Err = Error;

    /// Parses `circle:r`, `ellipse:a,b` and `fourier:k=a,k=a,...`. Files are
    /// loaded by the caller and passed as [`InitialCurve::Points`].
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("initial: `{s}` lacks a `kind:` prefix")))?;
        match kind.trim() {
            "circle" => {
                let radius = parse_number("initial circle radius", rest)?;
                if !(radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("initial circle radius must be positive, got {radius}")));
                }
                Ok(InitialCurve::Circle { radius })
            }
            "ellipse" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "initial ellipse needs `a,b`, got `{rest}`"
                    )));
                }
                let a = parse_number("initial ellipse a", parts[0])?;
                let b = parse_number("initial ellipse b", parts[1])?;
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidArgument(format!("initial ellipse axes must be positive, got {a},{b}")));
                }
                Ok(InitialCurve::Ellipse { a, b })
            }
            "fourier" => {
                let mut modes = Vec::new();
                for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
                    let (k, a) = item.split_once('=').ok_or_else(|| {
                        Error::InvalidArgument(format!("initial fourier mode `{item}` must look like k=amplitude"))
                    })?;
                    let k: u32 = k.trim().parse().map_err(|_| {
                        Error::InvalidArgument(format!("initial fourier wavenumber `{k}` is not a non-negative integer"))
                    })?;
                    modes.push((k, parse_number("initial fourier amplitude", a)?));
                }
                if modes.is_empty() {
                    return Err(Error::InvalidArgument("initial fourier needs at least one mode".into()));
                }
                Ok(InitialCurve::Fourier { modes })
            }
            other => Err(Error::InvalidArgument(format!(
                "initial: unknown kind `{other}` (expected circle, ellipse, fourier or file)"
            ))),
        }
    }
}

/// Thresholds of the pass flags in [`RunSummary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest admissible `| |x| - sqrt 2 |` on a fixed-point run.
    pub fixed_point_drift: f64,
    /// Largest admissible energy on a fixed-point run.
    pub fixed_point_energy: f64,
    /// Relative slack on the upper pinching bound `d/dt log E <= K`.
    pub pinching_slack: f64,
    /// Relative slack on the lower bound of the quotient's rate.
    pub ndot_slack: f64,
    /// Relative slack on the exponential lower bounds of `E` and `Q`.
    pub energy_bound_slack: f64,
    /// Largest admissible share of the integrals beyond the tail start.
    pub tail_fraction: f64,
    /// Growth of `Q / |v|` over the late window tolerated by the rate lemma check.
    pub rate_lemma_growth: f64,
    /// Margin `m' - m` of the exponential lower bound on `|v|`.
    pub lower_rate_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fixed_point_drift: 1e-6,
            fixed_point_energy: 1e-10,
            pinching_slack: 0.02,
            ndot_slack: 0.05,
            energy_bound_slack: 0.10,
            tail_fraction: 1e-3,
            rate_lemma_growth: 0.10,
            lower_rate_margin: 0.2,
        }
    }
}

impl Tolerances {
    /// Names accepted by [`Tolerances::set`].
    pub const NAMES: &'static [&'static str] = &[
        "fixed_point_drift",
        "fixed_point_energy",
        "pinching_slack",
        "ndot_slack",
        "energy_bound_slack",
        "tail_fraction",
        "rate_lemma_growth",
        "lower_rate_margin",
    ];

    /// Overrides one tolerance by name; values must be non-negative.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {name} must be a non-negative number, got {value}"
            )));
        }
        let slot = match name {
            "fixed_point_drift" => &mut self.fixed_point_drift,
            "fixed_point_energy" => &mut self.fixed_point_energy,
            "pinching_slack" => &mut self.pinching_slack,
            "ndot_slack" => &mut self.ndot_slack,
            "energy_bound_slack" => &mut self.energy_bound_slack,
            "tail_fraction" => &mut self.tail_fraction,
            "rate_lemma_growth" => &mut self.rate_lemma_growth,
            "lower_rate_margin" => &mut self.lower_rate_margin,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown tolerance `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// Parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub initial: InitialCurve,
    pub mode: FlowMode,
    pub n_points: usize,
    /// Sampling interval of the recorded series.
    pub dt: f64,
    pub t_end: f64,
    pub resample_every: u64,
    pub cfl: f64,
    /// Pin centroid and area in the rescaled modes (see [`StepOptions::pin`]).
    pub normalize: bool,
    /// Burn-in time `T0` of the energy bounds.
    pub burn_in: f64,
    pub fit_window: (f64, f64),
    /// For [`FlowMode::Mcf`]: stop once the area falls below this fraction of the
    /// initial area.
    pub area_stop: f64,
    /// Time after which the integrability tail is measured.
    pub tail_start: f64,
    pub tolerances: Tolerances,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            initial: InitialCurve::Ellipse { a: 2.0, b: 1.0 },
            mode: FlowMode::Rescaled,
            n_points: 256,
            dt: 0.01,
            t_end: 10.0,
            resample_every: 1,
            cfl: DEFAULT_CFL,
            normalize: true,
            burn_in: 2.0,
            fit_window: (2.0, 6.0),
            area_stop: 0.01,
            tail_start: 8.0,
            tolerances: Tolerances::default(),
        }
    }
}

impl SimulationConfig {
    /// Rejects non-positive or inconsistent numeric fields, naming the field.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        if self.n_points < crate::geometry::MIN_VERTICES {
            return Err(Error::InvalidArgument(format!(
                "n_points must be at least {}, got {}",
                crate::geometry::MIN_VERTICES,
                self.n_points
            )));
        }
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("cfl", self.cfl)?;
        if !(self.burn_in >= 0.0) {
            return Err(Error::InvalidArgument(format!("burn_in must be non-negative, got {}", self.burn_in)));
        }
        if !(self.fit_window.1 > self.fit_window.0 && self.fit_window.0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fit_window must be an increasing pair of non-negative times, got {:?}",
                self.fit_window
            )));
        }
        if !(self.area_stop > 0.0 && self.area_stop < 1.0) {
            return Err(Error::InvalidArgument(format!("area_stop must lie in (0, 1), got {}", self.area_stop)));
        }
        Ok(())
    }
}

/// Two-sided pinching of `d/dt log E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchingCheck {
    /// `max 2 (sup kappa^2 + 1/2)` over the samples from the burn-in on.
    pub k: f64,
    /// `-min N` over the same samples.
    pub k_prime: f64,
    /// Largest centered difference of `log E`.
    pub max_log_rate: f64,
    /// Smallest centered difference of `log E`.
    pub min_log_rate: f64,
    /// `max_log_rate <= 1.02 K`.
    pub upper_pass: bool,
    /// `K'` is finite.
    pub lower_finite: bool,
    /// `E(t) >= E(T0) e^{-K'(t - T0)}` on the samples (10% slack).
    pub energy_lower_pass: bool,
    /// `Q(t) >= (E(T0)/K') e^{-K'(t - T0)}` on the fit window (10% slack).
    pub q_lower_pass: bool,
}

/// `N' >= bound` at every sample where `N` is defined on both neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NdotCheck {
    pub checked: usize,
    /// Smallest `N'_fd - 1.05 * bound` (non-negative when passing).
    pub min_margin: f64,
    /// Largest assembled constant `C`.
    pub max_constant: f64,
    pub pass: bool,
}

/// Tail fractions of `int sup |d^l S| dt` beyond `tail_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityCheck {
    pub tail_start: f64,
    pub totals: [f64; 3],
    pub tail_fractions: [f64; 3],
    pub pass: bool,
}

/// Graph norms at or below this level are round-off: the curve is the shrinker.
pub const GRAPH_NOISE_FLOOR: f64 = 1e-12;

/// Below this energy the decrease of `Omega` over an interval is at round-off
/// level and is not required to be strict.
pub const DECREASE_ENERGY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    /// `Omega` decreases strictly over every interval on which `max E` exceeds
    /// [`DECREASE_ENERGY_FLOOR`].
    pub strictly_decreasing: bool,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointCheck {
    /// Largest `| |x_i| - sqrt 2 |` over all samples.
    pub max_radial_drift: f64,
    pub max_energy: f64,
    pub pass: bool,
}

/// Unrescaled-flow results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McfCheck {
    pub initial_area: f64,
    /// `A0 / (2 pi)`.
    pub singular_time: f64,
    /// Time at which the area crossed `area_stop * A0` (linear interpolation).
    pub stop_time: Option<f64>,
    /// Largest `|dA/dtau + 2 pi|` over the sample intervals.
    pub max_area_law_residual: f64,
}

/// `|v(t)| >= C e^{-(m + 0.2) t}` on the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerRateCheck {
    pub m_prime: f64,
    pub pass: bool,
}

/// Everything evaluated on a finished run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: FlowMode,
    pub samples: usize,
    pub t_final: f64,
    /// Hausdorff distance from the (normalized) initial curve to the shrinker.
    pub initial_distance: f64,
    /// Every graph norm stayed within [`GRAPH_NOISE_FLOOR`]: the run sits on the
    /// shrinker, so rate fits are skipped.
    pub on_shrinker: bool,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub m: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "K_prime")]
    pub k_prime: Option<f64>,
    #[serde(rename = "C_tilde")]
    pub c_tilde: Option<f64>,
    pub theta: Option<f64>,
    pub v_c0_final: Option<f64>,
    pub rate_fit: Option<RateFit>,
    pub fixed_point: Option<FixedPointCheck>,
    pub monotonicity: Option<MonotonicityCheck>,
    pub pinching: Option<PinchingCheck>,
    pub ndot: Option<NdotCheck>,
    pub rate_lemma: Option<RateLemmaCheck>,
    pub integrability: Option<IntegrabilityCheck>,
    pub lojasiewicz: Option<LojasiewiczFit>,
    pub lower_rate: Option<LowerRateCheck>,
    pub mcf: Option<McfCheck>,
    /// Checks that could not be evaluated, with the reason.
    pub notes: Vec<String>,
}

impl RunSummary {
    /// Pass flags of every check that could be evaluated, keyed by name.
    pub fn checks(&self) -> BTreeMap<&'static str, bool> {
        let mut out = BTreeMap::new();
        if let Some(c) = &self.fixed_point {
            out.insert("fixed_point", c.pass);
        }
        if let Some(c) = &self.monotonicity {
            out.insert("gaussian_area_decreasing", c.strictly_decreasing);
        }
        if let Some(c) = &self.rate_fit {
            out.insert("exponential_decay", !c.non_exponential);
        }
        if let Some(c) = &self.lower_rate {
            out.insert("lower_rate", c.pass);
        }
        // Either the run sits on the shrinker or it decays at a finite rate that
        // also bounds the decay from below.
        if self.on_shrinker || self.lower_rate.is_some() {
            let decays = self.m.is_some_and(f64::is_finite) && self.lower_rate.is_some_and(|c| c.pass);
            out.insert("dichotomy", self.on_shrinker || decays);
        }
        if let Some(c) = &self.pinching {
            out.insert("pinching_upper", c.upper_pass);
            out.insert("pinching_lower_finite", c.lower_finite);
            out.insert("energy_lower_bound", c.energy_lower_pass);
            out.insert("q_lower_bound", c.q_lower_pass);
        }
        if let Some(c) = &self.ndot {
            out.insert("quotient_rate_bound", c.pass);
        }
        if let Some(c) = &self.rate_lemma {
            out.insert("rate_lemma", c.pass);
        }
        if let Some(c) = &self.integrability {
            out.insert("integrability", c.pass);
        }
        out
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_curve: ClosedCurve,
    pub summary: RunSummary,
}

fn record_for(t: f64, curve: &ClosedCurve, reference: &ReferenceShrinker) -> Result<DiagnosticsRecord> {
    let snap = snapshot(curve)?;
    let mut rec = DiagnosticsRecord::from_snapshot(t, &snap, reference.omega());
    if let Ok(g) = graph_decompose(curve, reference) {
        rec.v_c0 = Some(g.c0);
        rec.v_c1 = Some(g.c1);
        rec.v_c2 = Some(g.c2);
        rec.v_c2_alpha = Some(g.c2_alpha);
    }
    Ok(rec)
}

fn max_radial_drift(curve: &ClosedCurve) -> f64 {
    curve
        .vertices()
        .iter()
        .fold(0.0f64, |m, p| m.max((p.norm() - SQRT_2).abs()))
}

/// Runs the configured flow and evaluates every check on the recorded series.
pub fn run(config: &SimulationConfig) -> Result<RunOutput> {
    config.validate()?;
    let reference = ReferenceShrinker::new(config.n_points)?;
    let curve = config.initial.build(config.n_points)?;
    let opts = StepOptions {
        cfl: config.cfl,
        resample_every: config.resample_every,
        pin: config.normalize && config.mode.is_rescaled(),
    };
    match config.mode {
        FlowMode::Mcf => run_mcf(config, curve, &reference, &opts),
        _ => run_rescaled(config, curve, &reference, &opts),
    }
}

fn run_rescaled(
    config: &SimulationConfig,
    curve: ClosedCurve,
    reference: &ReferenceShrinker,
    opts: &StepOptions,
) -> Result<RunOutput> {
    let curve = if opts.pin { pin_to_shrinker_scale(&curve)? } else { curve };
    let initial_distance = curve.hausdorff_distance(reference.curve());
    let mut state = FlowState::new(curve, config.mode, 0.0);
    let steps = (config.t_end / config.dt).round().max(1.0) as usize;
    let mut records = Vec::with_capacity(steps + 1);
    // Radial drift is only meaningful when the run starts on a circle.
    let track_drift = matches!(config.initial, InitialCurve::Circle { .. });
    let mut drift = max_radial_drift(&state.curve);
    records.push(record_for(0.0, &state.curve, reference)?);
    for k in 1..=steps {
        state = advance(&state, config.dt, opts)?;
        // Land exactly on the sample grid.
        state.clock = k as f64 * config.dt;
        drift = drift.max(max_radial_drift(&state.curve));
        state.curve.check_simple().map_err(|e| Error::BlowUp {
            time: state.clock,
            reason: e.to_string(),
        })?;
        records.push(record_for(state.clock, &state.curve, reference)?);
    }
    let summary = summarize(config, &records, initial_distance, track_drift.then_some(drift), None);
    Ok(RunOutput {
        records,
        final_curve: state.curve,
        summary,
    })
}

fn run_mcf(
    config: &SimulationConfig,
    curve: ClosedCurve,
    reference: &ReferenceShrinker,
    opts: &StepOptions,
) -> Result<RunOutput> {
    let a0 = enclosed_area(&curve);
    let singular = estimate_singular_time(&curve);
    let stop_area = config.area_stop * a0;
    let mut state = FlowState::new(curve, FlowMode::Mcf, 0.0);
    let mut records = Vec::new();
    let mut areas = vec![(0.0, a0)];
    let (rescaled, t) = rescale_to_normalized(&state.curve, 0.0, singular)?;
    let initial_distance = rescaled.hausdorff_distance(reference.curve());
    records.push(record_for(t, &rescaled, reference)?);
    let mut stop_time = None;
    while state.clock < config.t_end {
        let area = areas.last().map(|a| a.1).unwrap_or(a0);
        // Never step past the predicted extinction: aim slightly below the stop area.
        let to_stop = (area - 0.9 * stop_area) / TAU;
        let h = config.dt.min(to_stop).min(config.t_end - state.clock);
        if !(h > 0.0) {
            break;
        }
        state = advance(&state, h, opts)?;
        let area_now = enclosed_area(&state.curve);
        let (prev_tau, prev_area) = *areas.last().expect("at least the initial sample");
        areas.push((state.clock, area_now));
        if state.clock < singular {
            let (rescaled, t) = rescale_to_normalized(&state.curve, state.clock, singular)?;
            records.push(record_for(t, &rescaled, reference)?);
        }
        if area_now <= stop_area {
            let frac = (prev_area - stop_area) / (prev_area - area_now);
            stop_time = Some(prev_tau + frac * (state.clock - prev_tau));
            break;
        }
    }
    let max_area_law_residual = areas
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0) + TAU).abs())
        .fold(0.0, f64::max);
    let mcf = McfCheck {
        initial_area: a0,
        singular_time: singular,
        stop_time,
        max_area_law_residual,
    };
    let summary = summarize(config, &records, initial_distance, None, Some(mcf));
    Ok(RunOutput {
        records,
        final_curve: state.curve,
        summary,
    })
}

/// Evaluates the convergence checks on a recorded series.
pub fn summarize(
    config: &SimulationConfig,
    records: &[DiagnosticsRecord],
    initial_distance: f64,
    radial_drift: Option<f64>,
    mcf: Option<McfCheck>,
) -> RunSummary {
    let tol = &config.tolerances;
    let mut notes = Vec::new();
    let mut summary = RunSummary {
        mode: config.mode,
        samples: records.len(),
        t_final: records.last().map_or(0.0, |r| r.t),
        initial_distance,
        on_shrinker: false,
        c: None,
        m: None,
        k: None,
        k_prime: None,
        c_tilde: None,
        theta: None,
        v_c0_final: records.last().and_then(|r| r.v_c0),
        rate_fit: None,
        fixed_point: None,
        monotonicity: None,
        pinching: None,
        ndot: None,
        rate_lemma: None,
        integrability: None,
        lojasiewicz: None,
        lower_rate: None,
        mcf,
        notes: Vec::new(),
    };
    if records.len() < 3 {
        notes.push("fewer than 3 samples recorded".to_string());
        summary.notes = notes;
        return summary;
    }
    let max_energy = records.iter().map(|r| r.energy).fold(0.0, f64::max);
    if let Some(drift) = radial_drift {
        summary.fixed_point = Some(FixedPointCheck {
            max_radial_drift: drift,
            max_energy,
            pass: drift < tol.fixed_point_drift && max_energy < tol.fixed_point_energy,
        });
    }

    let triples: Vec<(f64, f64, f64)> = records.iter().map(|r| (r.t, r.omega, r.energy)).collect();
    match monotonicity_residual(&triples) {
        Ok(res) => {
            summary.monotonicity = Some(MonotonicityCheck {
                strictly_decreasing: records
                    .windows(2)
                    .filter(|w| w[0].energy.max(w[1].energy) > DECREASE_ENERGY_FLOOR)
                    .all(|w| w[1].omega < w[0].omega),
                max_residual: res.iter().copied().fold(0.0, f64::max),
            })
        }
        Err(e) => notes.push(format!("monotonicity: {e}")),
    }

    let window = config.fit_window;
    let in_window = |t: f64| t >= window.0 - 1e-12 && t <= window.1 + 1e-12;
    let norms: Vec<(f64, f64)> = records.iter().filter_map(|r| r.v_c0.map(|v| (r.t, v))).collect();
    summary.on_shrinker = norms.len() == records.len() && norms.iter().all(|(_, v)| *v <= GRAPH_NOISE_FLOOR);
    let rate_fit = if summary.on_shrinker {
        Err(Error::CheckFailed("graph norm at round-off level throughout; no rate to fit".into()))
    } else {
        fit_rate(&norms, window)
    };
    match rate_fit {
        Ok(fit) => {
            summary.c = Some(fit.c);
            summary.m = Some(fit.m);
            summary.rate_fit = Some(fit);
            let m_prime = fit.m + tol.lower_rate_margin;
            let pass = norms
                .iter()
                .filter(|(t, _)| in_window(*t))
                .all(|(t, v)| *v >= fit.c * (-m_prime * t).exp());
            summary.lower_rate = Some(LowerRateCheck { m_prime, pass });
        }
        Err(e) => notes.push(format!("rate fit: {e}")),
    }

    // Pinching of d/dt log E from the burn-in on.
    let late: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.t >= config.burn_in).collect();
    let k = late.iter().map(|r| r.growth_bound).fold(f64::NEG_INFINITY, f64::max);
    let min_n = late.iter().filter_map(|r| r.quotient).fold(f64::INFINITY, f64::min);
    let mut log_rates = Vec::new();
    for w in records.windows(3) {
        if w[1].t >= config.burn_in && w[0].quotient.is_some() && w[2].quotient.is_some() {
            log_rates.push((w[2].energy.ln() - w[0].energy.ln()) / (w[2].t - w[0].t));
        }
    }
    if late.len() >= 3 && min_n.is_finite() && !log_rates.is_empty() {
        let k_prime = -min_n;
        summary.k = Some(k);
        summary.k_prime = Some(k_prime);
        let max_log_rate = log_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_log_rate = log_rates.iter().copied().fold(f64::INFINITY, f64::min);
        let start = late[0];
        let energy_lower_pass = late
            .iter()
            .all(|r| r.energy >= (1.0 - tol.energy_bound_slack) * start.energy * (-k_prime * (r.t - start.t)).exp());
        let q_lower_pass = k_prime > 0.0
            && late
                .iter()
                .filter(|r| r.t <= window.1 + 1e-12)
                .all(|r| r.q >= (1.0 - tol.energy_bound_slack) * start.energy / k_prime * (-k_prime * (r.t - start.t)).exp());
        summary.pinching = Some(PinchingCheck {
            k,
            k_prime,
            max_log_rate,
            min_log_rate,
            upper_pass: max_log_rate <= (1.0 + tol.pinching_slack) * k,
            lower_finite: k_prime.is_finite(),
            energy_lower_pass,
            q_lower_pass,
        });
    } else {
        notes.push("pinching: energy below the quotient floor after burn-in".to_string());
    }

    // Finite-difference N' against the assembled lower bound.
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    let mut max_constant = 0.0f64;
    for w in records.windows(3) {
        if let (Some(a), Some(_), Some(c)) = (w[0].quotient, w[1].quotient, w[2].quotient) {
            let ndot = (c - a) / (w[2].t - w[0].t);
            min_margin = min_margin.min(ndot - (1.0 + tol.ndot_slack) * w[1].ndot_bound);
            let norm_sum = w[1].sup_s + w[1].sup_ds + w[1].sup_d2s;
            if norm_sum > 0.0 {
                max_constant = max_constant.max(-w[1].ndot_bound / norm_sum);
            }
            checked += 1;
        }
    }
    if checked > 0 {
        summary.ndot = Some(NdotCheck {
            checked,
            min_margin,
            max_constant,
            pass: min_margin >= 0.0,
        });
    } else {
        notes.push("quotient rate: no sample with a defined quotient on both sides".to_string());
    }

    // Rate lemma over the fit window.
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| in_window(r.t))
        .filter_map(|r| r.v_c2_alpha.map(|v| (r.q, v)))
        .collect();
    if pairs.is_empty() {
        notes.push("rate lemma: no graph samples in the fit window".to_string());
    } else {
        match rate_lemma_check(&pairs, GRAPH_NOISE_FLOOR, tol.rate_lemma_growth) {
            Ok(c) => {
                summary.c_tilde = Some(c.c_tilde);
                summary.rate_lemma = Some(c);
            }
            Err(e) => notes.push(format!("rate lemma: {e}")),
        }
    }

    // Integrability of sup |d^l S| beyond the tail start.
    if summary.t_final > config.tail_start {
        let mut totals = [0.0; 3];
        let mut tails = [0.0; 3];
        for w in records.windows(2) {
            let dt = w[1].t - w[0].t;
            let vals = [
                0.5 * (w[0].sup_s + w[1].sup_s) * dt,
                0.5 * (w[0].sup_ds + w[1].sup_ds) * dt,
                0.5 * (w[0].sup_d2s + w[1].sup_d2s) * dt,
            ];
            for l in 0..3 {
                totals[l] += vals[l];
                if w[0].t >= config.tail_start - 1e-12 {
                    tails[l] += vals[l];
                }
            }
        }
        let fractions = [0, 1, 2].map(|l| if totals[l] > 0.0 { tails[l] / totals[l] } else { 0.0 });
        summary.integrability = Some(IntegrabilityCheck {
            tail_start: config.tail_start,
            totals,
            tail_fractions: fractions,
            pass: fractions.iter().all(|f| *f < tol.tail_fraction),
        });
    } else {
        notes.push(format!("integrability: run ends before t = {}", config.tail_start));
    }

    // Lojasiewicz exponent over the fit window.
    let loj: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| in_window(r.t))
        .map(|r| (r.q, r.energy.sqrt()))
        .collect();
    match lojasiewicz_probe(&loj) {
        Ok(fit) => {
            summary.theta = Some(fit.theta);
            summary.lojasiewicz = Some(fit);
        }
        Err(e) => notes.push(format!("lojasiewicz: {e}")),
    }
    summary.notes = notes;
    summary
}
