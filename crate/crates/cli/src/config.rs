//! Run configuration from a flat `key = value` file overlaid with flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shrinkflow::experiment::{InitialCurve, SimulationConfig, Tolerances};
use shrinkflow::flow::FlowMode;

use crate::error::{CliError, CliResult};
use crate::output::read_curve;

/// Keys accepted in configuration files, besides `tol.<name>`.
pub const KEYS: &[&str] = &[
    "initial",
    "mode",
    "n_points",
    "dt",
    "t_end",
    "resample_every",
    "cfl",
    "normalize",
    "burn_in",
    "fit_window",
    "area_stop",
    "tail_start",
    "output_dir",
    "modes",
    "amplitudes",
];

/// Raw settings before validation; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{origin}:{}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            check_key(&key).map_err(|e| match e {
                CliError::Usage(msg) => CliError::Usage(format!("{origin}:{}: {msg}", lineno + 1)),
                other => other,
            })?;
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!("{origin}:{}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config: cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Sets `key` unless `value` is `None`.
    pub fn overlay(&mut self, key: &str, value: Option<&str>) -> CliResult<()> {
        if let Some(v) = value {
            check_key(key)?;
            self.values.insert(key.to_string(), v.to_string());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Usage(format!("{key}: `{v}` is not {what}")))
            })
            .transpose()
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        match self.parsed::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => Err(CliError::Usage(format!("{key}: `{v}` is not finite"))),
            other => Ok(other),
        }
    }

    fn positive(&self, key: &str) -> CliResult<Option<f64>> {
        match self.number(key)? {
            Some(v) if v <= 0.0 => Err(CliError::Usage(format!("{key}: must be positive, got {v}"))),
            other => Ok(other),
        }
    }

    /// Comma-separated list under `key`.
    pub fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Vec<T>> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>()
                        .map_err(|_| CliError::Usage(format!("{key}: `{s}` is not {what}")))
                })
                .collect(),
        }
    }
}

fn check_key(key: &str) -> CliResult<()> {
    if KEYS.contains(&key) {
        return Ok(());
    }
    if let Some(name) = key.strip_prefix("tol.") {
        if Tolerances::NAMES.contains(&name) {
            return Ok(());
        }
        return Err(CliError::Usage(format!(
            "unknown tolerance `{name}` (expected one of {})",
            Tolerances::NAMES.join(", ")
        )));
    }
    Err(CliError::Usage(format!("unknown key `{key}`")))
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub output_dir: PathBuf,
}

/// Serialized form embedded in `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub initial: String,
    pub mode: FlowMode,
    pub n_points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub resample_every: u64,
    pub cfl: f64,
    pub normalize: bool,
    pub burn_in: f64,
    pub fit_window: [f64; 2],
    pub area_stop: f64,
    pub tail_start: f64,
    pub output_dir: String,
    pub tolerances: Tolerances,
}

impl RunConfig {
    /// Validates `settings` over the defaults. Every error names the offending key.
    pub fn resolve(settings: &Settings) -> CliResult<Self> {
        let mut sim = SimulationConfig::default();
        if let Some(spec) = settings.get("initial") {
            sim.initial = parse_initial(spec)?;
        }
        if let Some(mode) = settings.parsed::<FlowMode>("mode", "one of mcf, rescaled, normal_rescaled")? {
            sim.mode = mode;
        }
        if let Some(n) = settings.parsed::<usize>("n_points", "a positive integer")? {
            sim.n_points = n;
        }
        if let Some(v) = settings.positive("dt")? {
            sim.dt = v;
        }
        if let Some(v) = settings.positive("t_end")? {
            sim.t_end = v;
        }
        if let Some(v) = settings.parsed::<u64>("resample_every", "a non-negative integer")? {
            sim.resample_every = v;
        }
        if let Some(v) = settings.positive("cfl")? {
            sim.cfl = v;
        }
        if let Some(v) = settings.parsed::<bool>("normalize", "true or false")? {
            sim.normalize = v;
        }
        if let Some(v) = settings.number("burn_in")? {
            sim.burn_in = v;
        }
        if settings.contains("fit_window") {
            let w: Vec<f64> = settings.list("fit_window", "a number")?;
            if w.len() != 2 {
                return Err(CliError::Usage(format!(
                    "fit_window: expected `start,end`, got {} values",
                    w.len()
                )));
            }
            sim.fit_window = (w[0], w[1]);
        }
        if let Some(v) = settings.positive("area_stop")? {
            sim.area_stop = v;
        }
        if let Some(v) = settings.number("tail_start")? {
            sim.tail_start = v;
        }
        for name in Tolerances::NAMES {
            let key = format!("tol.{name}");
            if let Some(v) = settings.number(&key)? {
                sim.tolerances
                    .set(name, v)
                    .map_err(|e| CliError::Usage(format!("{key}: {e}")))?;
            }
        }
        sim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let output_dir = PathBuf::from(settings.get("output_dir").unwrap_or("out"));
        Ok(Self {
            simulation: sim,
            output_dir,
        })
    }

    pub fn resolved(&self) -> ResolvedConfig {
        let s = &self.simulation;
        ResolvedConfig {
            initial: s.initial.to_string(),
            mode: s.mode,
            n_points: s.n_points,
            dt: s.dt,
            t_end: s.t_end,
            resample_every: s.resample_every,
            cfl: s.cfl,
            normalize: s.normalize,
            burn_in: s.burn_in,
            fit_window: [s.fit_window.0, s.fit_window.1],
            area_stop: s.area_stop,
            tail_start: s.tail_start,
            output_dir: self.output_dir.display().to_string(),
            tolerances: s.tolerances,
        }
    }
}

/// Parses an initial-curve spec, loading `file:path` curves from CSV.
pub fn parse_initial(spec: &str) -> CliResult<InitialCurve> {
    if let Some(path) = spec.strip_prefix("file:") {
        let vertices = read_curve(Path::new(path))
            .map_err(|e| CliError::Usage(format!("initial: {e}")))?;
        return Ok(InitialCurve::Points {
            label: path.to_string(),
            vertices,
        });
    }
    spec.parse::<InitialCurve>()
        .map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let mut s = Settings::parse("# comment\nmode = mcf\nn_points = 64 # trailing\n", "cfg").unwrap();
        s.overlay("n_points", Some("128")).unwrap();
        s.overlay("dt", None).unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert_eq!(c.simulation.mode, FlowMode::Mcf);
        assert_eq!(c.simulation.n_points, 128);
        assert_eq!(c.simulation.dt, SimulationConfig::default().dt);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("n_points = many", "n_points"),
            ("dt = -1", "dt"),
            ("initial = blob:1", "initial"),
            ("fit_window = 1", "fit_window"),
            ("tol.ndot_slack = x", "tol.ndot_slack"),
            ("mode = fast", "mode"),
        ];
        for (text, field) in cases {
            let err = Settings::parse(text, "cfg").and_then(|s| RunConfig::resolve(&s)).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(field), "{err} lacks {field}");
        }
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(Settings::parse("colour = red", "cfg").unwrap_err().to_string().contains("colour"));
        assert!(Settings::parse("dt = 1\ndt = 2", "cfg").unwrap_err().to_string().contains("duplicate"));
        assert!(Settings::parse("tol.nope = 1", "cfg").unwrap_err().to_string().contains("nope"));
    }

    #[test]
    fn tolerances_resolve() {
        let s = Settings::parse("tol.pinching_slack = 0.05", "cfg").unwrap();
        assert_eq!(RunConfig::resolve(&s).unwrap().simulation.tolerances.pinching_slack, 0.05);
    }
}
