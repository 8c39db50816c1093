//! File formats written and read by the commands.

use std::fs;
use std::path::Path;

use serde::Serialize;
use shrinkflow::diagnostics::DiagnosticsRecord;
use shrinkflow::{ClosedCurve, Vec2};

use crate::error::{CliError, CliResult};

/// Header of `series.csv`.
pub const SERIES_HEADER: [&str; 11] = [
    "t", "omega", "energy", "N", "sup_S", "sup_dS", "sup_d2S", "q", "v_c0", "v_c1", "v_c2",
];

/// Version of the JSON documents.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip decimal, in exponent form for very small or large
/// magnitudes.
pub fn number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// One row per sample; undefined values are empty cells.
pub fn write_series(path: &Path, records: &[DiagnosticsRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(SERIES_HEADER).map_err(csv_error(path))?;
    for r in records {
        w.write_record([
            number(r.t),
            number(r.omega),
            number(r.energy),
            opt(r.quotient),
            number(r.sup_s),
            number(r.sup_ds),
            number(r.sup_d2s),
            number(r.q),
            opt(r.v_c0),
            opt(r.v_c1),
            opt(r.v_c2),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Vertices as `x,y` rows.
pub fn write_curve(path: &Path, curve: &ClosedCurve) -> CliResult<()> {
    write_rows(path, ["x", "y"], curve.vertices().iter().map(|p| [p.x, p.y]))
}

/// Numeric rows under a fixed header.
pub fn write_rows<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: impl IntoIterator<Item = [f64; K]>,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(row.iter().map(|&x| number(x))).map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an `x,y` curve file as written by [`write_curve`].
pub fn read_curve(path: &Path) -> Result<Vec<Vec2>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let header = r.headers().map_err(|e| format!("{}: {e}", path.display()))?.clone();
    if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
        return Err(format!("{}: expected header `x,y`", path.display()));
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let coord = |i: usize| -> Result<f64, String> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{}: row {} is not a pair of finite numbers", path.display(), k + 2))
        };
        out.push(Vec2::new(coord(0)?, coord(1)?));
    }
    Ok(out)
}
