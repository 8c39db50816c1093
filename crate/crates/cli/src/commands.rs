//! The subcommands. Each returns what it wrote so tests can inspect it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use shrinkflow::diagnostics::{
    identity_convergence, meets_requirement, verification_step, IdentityReport, MaterialWindow,
    IDENTITY_NAMES,
};
use shrinkflow::experiment::{self, InitialCurve, RunOutput, RunSummary};
use shrinkflow::flow::{sphere_radius_ode, SphereEvent};

use crate::config::{ResolvedConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{create_dir, number, opt, write_curve, write_json, write_rows, write_series, SCHEMA_VERSION};
use crate::{ConfigArgs, SphereArgs, SweepArgs, VerifyArgs};

/// Contents of `summary.json`.
#[derive(Debug, Serialize)]
pub struct SummaryDocument<'a> {
    pub schema: u32,
    pub config: ResolvedConfig,
    pub summary: &'a RunSummary,
    pub checks: BTreeMap<&'static str, bool>,
    pub all_pass: bool,
}

/// Runs one configured flow and writes its files into the output directory.
pub fn execute_run(config: &RunConfig) -> CliResult<RunOutput> {
    let out = experiment::run(&config.simulation)?;
    let dir = &config.output_dir;
    create_dir(dir)?;
    write_series(&dir.join("series.csv"), &out.records)?;
    write_curve(&dir.join("final_curve.csv"), &out.final_curve)?;
    let checks = out.summary.checks();
    let doc = SummaryDocument {
        schema: SCHEMA_VERSION,
        config: config.resolved(),
        summary: &out.summary,
        all_pass: checks.values().all(|&p| p),
        checks,
    };
    write_json(&dir.join("summary.json"), &doc)?;
    Ok(out)
}

pub fn run(args: &ConfigArgs) -> CliResult<RunOutput> {
    let config = RunConfig::resolve(&args.settings()?)?;
    let out = execute_run(&config)?;
    let s = &out.summary;
    println!(
        "{} samples to t = {}; m = {}, theta = {}",
        s.samples,
        s.t_final,
        fmt_opt(s.m),
        fmt_opt(s.theta)
    );
    for (name, pass) in s.checks() {
        println!("  {name}: {}", if pass { "pass" } else { "FAIL" });
    }
    for note in &s.notes {
        println!("  note: {note}");
    }
    println!("wrote {}", config.output_dir.display());
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// Entry of `identities.json`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifiedIdentity {
    #[serde(flatten)]
    pub report: IdentityReport,
    /// Whether the identity's convergence order is required.
    pub gated: bool,
    /// Outcome for gated identities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

/// Vertex count of the coarse verification level when none is configured; the
/// coarsest at which every gated identity on the 2:1 ellipse is in its
/// asymptotic regime.
pub const DEFAULT_VERIFY_POINTS: usize = 512;

pub fn verify(args: &VerifyArgs) -> CliResult<Vec<VerifiedIdentity>> {
    let settings = args.config.settings()?;
    let config = RunConfig::resolve(&settings)?;
    let names: Vec<&str> = if args.identities.is_empty() {
        IDENTITY_NAMES.to_vec()
    } else {
        for name in &args.identities {
            if !IDENTITY_NAMES.contains(&name.as_str()) {
                return Err(CliError::Usage(format!(
                    "identity: unknown name `{name}` (expected one of {})",
                    IDENTITY_NAMES.join(", ")
                )));
            }
        }
        args.identities.iter().map(String::as_str).collect()
    };
    let n = if settings.contains("n_points") {
        config.simulation.n_points
    } else {
        DEFAULT_VERIFY_POINTS
    };
    let sim = &config.simulation;
    let coarse = MaterialWindow::capture(&sim.initial.build(n)?, verification_step(n), sim.cfl)?;
    let fine = MaterialWindow::capture(&sim.initial.build(2 * n)?, verification_step(2 * n), sim.cfl)?;
    let reports = names
        .iter()
        .map(|name| {
            let report = identity_convergence(name, &coarse, &fine)?;
            let pass = meets_requirement(&report);
            Ok(VerifiedIdentity {
                report,
                gated: pass.is_some(),
                pass,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    create_dir(&config.output_dir)?;
    write_json(&config.output_dir.join("identities.json"), &reports)?;
    println!("{:<36} {:>12} {:>12} {:>7}  status", "identity", "coarse", "fine", "order");
    for v in &reports {
        let r = &v.report;
        println!(
            "{:<36} {:>12.3e} {:>12.3e} {:>7}  {}",
            r.name,
            r.coarse_residual.unwrap_or(f64::NAN),
            r.residual,
            r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}")),
            match v.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "report",
            }
        );
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|v| v.pass == Some(false))
        .map(|v| v.report.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::CheckFailed(format!("identities below the required order: {}", failed.join(", "))))
    }
}

/// One row of `rates.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub k: u32,
    pub amplitude: f64,
    pub m: Option<f64>,
    pub c: Option<f64>,
    /// `k^2 / 2 - 1`, the decay rate of mode `k` at the shrinker.
    pub m_expected: f64,
    pub rate_pass: bool,
    pub checks_pass: bool,
    pub error: Option<String>,
}

/// Relative deviation of the fitted rate accepted by the sweep.
pub const SWEEP_RATE_TOLERANCE: f64 = 0.15;

/// Sorted, deduplicated cartesian grid of wavenumbers and amplitudes.
pub fn sweep_grid(modes: &[u32], amplitudes: &[f64]) -> CliResult<Vec<(u32, f64)>> {
    if modes.is_empty() || amplitudes.is_empty() {
        return Err(CliError::Usage("sweep: the mode-amplitude grid is empty (set modes and amplitudes)".into()));
    }
    if let Some(k) = modes.iter().find(|&&k| k < 2) {
        return Err(CliError::Usage(format!(
            "modes: wavenumber {k} is not a decaying mode (need at least 2)"
        )));
    }
    if let Some(a) = amplitudes.iter().find(|a| !(a.abs() > 0.0 && a.abs() < 1.0)) {
        return Err(CliError::Usage(format!("amplitudes: {a} is outside 0 < |a| < 1")));
    }
    let mut seen = BTreeSet::new();
    let mut grid: Vec<(u32, f64)> = Vec::new();
    for &k in modes {
        for &a in amplitudes {
            if seen.insert((k, a.to_bits())) {
                grid.push((k, a));
            }
        }
    }
    grid.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(grid)
}

fn run_directory(base: &Path, k: u32, a: f64) -> PathBuf {
    base.join(format!("k{k}_a{a}"))
}

pub fn sweep(args: &SweepArgs) -> CliResult<Vec<RateRow>> {
    let mut settings = args.config.settings()?;
    settings.overlay("modes", args.modes.as_deref())?;
    settings.overlay("amplitudes", args.amplitudes.as_deref())?;
    let template = RunConfig::resolve(&settings)?;
    let modes: Vec<u32> = settings.list("modes", "a non-negative integer")?;
    let amplitudes: Vec<f64> = settings.list("amplitudes", "a number")?;
    let grid = sweep_grid(&modes, &amplitudes)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("jobs: must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("jobs: cannot start worker pool: {e}")))?;
    create_dir(&template.output_dir)?;
    let rows: Vec<RateRow> = pool.install(|| {
        grid.par_iter()
            .map(|&(k, a)| {
                let mut config = template.clone();
                config.simulation.initial = InitialCurve::Fourier { modes: vec![(k, a)] };
                config.output_dir = run_directory(&template.output_dir, k, a);
                let m_expected = f64::from(k * k) / 2.0 - 1.0;
                match execute_run(&config) {
                    Ok(out) => {
                        let m = out.summary.m;
                        RateRow {
                            k,
                            amplitude: a,
                            m,
                            c: out.summary.c,
                            m_expected,
                            rate_pass: m.is_some_and(|m| ((m - m_expected) / m_expected).abs() <= SWEEP_RATE_TOLERANCE),
                            checks_pass: out.summary.checks().values().all(|&p| p),
                            error: None,
                        }
                    }
                    Err(e) => RateRow {
                        k,
                        amplitude: a,
                        m: None,
                        c: None,
                        m_expected,
                        rate_pass: false,
                        checks_pass: false,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    write_rates(&template.output_dir.join("rates.csv"), &rows)?;
    for r in &rows {
        println!(
            "k = {} a = {}: m = {} (expected {}) {}",
            r.k,
            r.amplitude,
            fmt_opt(r.m),
            r.m_expected,
            r.error.as_deref().unwrap_or(if r.rate_pass { "pass" } else { "FAIL" })
        );
    }
    let failed = rows.iter().filter(|r| !r.rate_pass).count();
    if failed == 0 {
        Ok(rows)
    } else {
        Err(CliError::CheckFailed(format!("{failed} of {} sweep runs missed the expected rate", rows.len())))
    }
}

fn write_rates(path: &Path, rows: &[RateRow]) -> CliResult<()> {
    let err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["k", "amplitude", "m", "C", "m_expected", "rate_pass", "checks_pass", "error"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            number(r.amplitude),
            opt(r.m),
            opt(r.c),
            number(r.m_expected),
            r.rate_pass.to_string(),
            r.checks_pass.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Contents of `sphere.json`.
#[derive(Debug, Serialize)]
pub struct SphereDocument {
    pub schema: u32,
    pub dimension: u32,
    pub r0: f64,
    pub fixed_point: f64,
    pub t_end: f64,
    pub dt: f64,
    pub final_radius: f64,
    pub event: Option<SphereEvent>,
}

pub fn sphere_ode(args: &SphereArgs) -> CliResult<SphereDocument> {
    let fixed_point = (2.0 * f64::from(args.dimension)).sqrt();
    let r0 = args.r0.unwrap_or(fixed_point);
    let traj = sphere_radius_ode(args.dimension, r0, args.t_end, args.dt).map_err(|e| match e {
        shrinkflow::Error::InvalidArgument(msg) => CliError::Usage(msg),
        other => CliError::Numerical(other),
    })?;
    create_dir(&args.output_dir)?;
    write_rows(&args.output_dir.join("sphere.csv"), ["t", "r"], traj.samples.iter().map(|&(t, r)| [t, r]))?;
    let doc = SphereDocument {
        schema: SCHEMA_VERSION,
        dimension: args.dimension,
        r0,
        fixed_point,
        t_end: args.t_end,
        dt: args.dt,
        final_radius: traj.samples.last().map_or(r0, |s| s.1),
        event: traj.event,
    };
    write_json(&args.output_dir.join("sphere.json"), &doc)?;
    match doc.event {
        Some(SphereEvent::Extinct { t }) => println!("radius collapsed at t = {t}"),
        Some(SphereEvent::Escaped { t }) => println!("radius escaped at t = {t}"),
        None => println!("radius {} at t = {}", doc.final_radius, args.t_end),
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_sorted_and_deduplicated() {
        let g = sweep_grid(&[3, 2, 3], &[0.1, 0.05, 0.1]).unwrap();
        assert_eq!(g, vec![(2, 0.05), (2, 0.1), (3, 0.05), (3, 0.1)]);
    }

    #[test]
    fn empty_or_invalid_grid_is_a_usage_error() {
        for (modes, amps) in [(vec![], vec![0.1]), (vec![2], vec![]), (vec![1], vec![0.1]), (vec![2], vec![0.0])] {
            let e = sweep_grid(&modes, &amps).unwrap_err();
            assert_eq!(e.exit_code(), 2);
        }
    }

    #[test]
    fn run_directories_are_distinct() {
        let base = Path::new("out");
        assert_ne!(run_directory(base, 2, 0.05), run_directory(base, 2, 0.5));
    }
}
