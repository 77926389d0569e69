//! Deterministic writers and readers: time series, snapshots, manifests and tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::besov::FriedrichsResult;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{AuditReport, State};
use crate::timestep::RunOutcome;

pub const TIMESERIES_HEADER: [&str; 11] = [
    "t",
    "E",
    "min_ux",
    "max_ux",
    "argmin_x",
    "argmax_x",
    "blowup_integrand",
    "lemma52_upper_bound",
    "lemma52_lower_bound",
    "lemma52_upper_ok",
    "lemma52_lower_ok",
];

pub const BESOV_COLUMNS: [&str; 2] = ["besov_u_s", "besov_zeta_sm1"];

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Time-series CSV text for `outcome`; Besov columns appear when any record has them.
pub fn timeseries_csv(outcome: &RunOutcome) -> String {
    let with_besov = outcome.records.iter().any(|r| r.besov.is_some());
    let mut out = TIMESERIES_HEADER.join(",");
    if with_besov {
        out.push(',');
        out.push_str(&BESOV_COLUMNS.join(","));
    }
    out.push('\n');
    for r in &outcome.records {
        let mut cols: Vec<String> = [
            r.t,
            r.energy,
            r.min_ux,
            r.max_ux,
            r.argmin_x,
            r.argmax_x,
            r.blowup_integrand,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        match &r.lemma52 {
            Some(s) => cols.extend([
                fmt_f64(s.upper_bound),
                fmt_f64(s.lower_bound),
                s.upper_ok.to_string(),
                s.lower_ok.to_string(),
            ]),
            None => cols.extend(std::iter::repeat(String::new()).take(4)),
        }
        if with_besov {
            match &r.besov {
                Some(b) => cols.extend([fmt_f64(b.u_s), fmt_f64(b.zeta_sm1)]),
                None => cols.extend([String::new(), String::new()]),
            }
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_timeseries(outcome: &RunOutcome, path: &Path) -> Result<()> {
    write_file(path, &timeseries_csv(outcome))
}

/// Header-only time series, for modes that do not integrate.
pub fn write_empty_timeseries(path: &Path) -> Result<()> {
    write_file(path, &format!("{}\n", TIMESERIES_HEADER.join(",")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub vortex2ch: String,
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            vortex2ch: env!("CARGO_PKG_VERSION").to_string(),
            format: 1,
        }
    }
}

/// Run manifest. Field order is fixed, so equal runs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub mode: String,
    pub status: String,
    pub final_time: f64,
    /// Last recorded time of a breaking run.
    pub breaking_time: Option<f64>,
    pub steps: usize,
    pub abort_reason: Option<String>,
    pub grid: GridInfo,
    pub coefficients: [f64; 10],
    pub warnings: Vec<String>,
    pub versions: Versions,
    /// Mode-specific summary.
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridInfo {
    pub n: usize,
    pub length: f64,
}

impl From<Grid> for GridInfo {
    fn from(g: Grid) -> Self {
        Self {
            n: g.n_points(),
            length: g.length(),
        }
    }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Validation(format!("manifest serialisation: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

/// Snapshot CSV: `# t = ...` and `# length = ...` comments, then `x,u,zeta` rows.
pub fn snapshot_csv(state: &State) -> String {
    let g = state.grid();
    let mut out = format!(
        "# t = {}\n# length = {}\nx,u,zeta\n",
        fmt_f64(state.t),
        fmt_f64(g.length())
    );
    for (j, (u, z)) in state.u.values().iter().zip(state.zeta.values()).enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(g.x(j)), fmt_f64(*u), fmt_f64(*z));
    }
    out
}

pub fn write_snapshot(state: &State, path: &Path) -> Result<()> {
    write_file(path, &snapshot_csv(state))
}

/// Reads a snapshot; with `expect` set, the stored grid must match it.
pub fn read_snapshot(path: &Path, expect: Option<Grid>) -> Result<State> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, expect).map_err(|msg| Error::Schema {
        path: path.to_path_buf(),
        msg,
    })
}

fn parse_snapshot(text: &str, expect: Option<Grid>) -> std::result::Result<State, String> {
    let mut t = None;
    let mut length = None;
    let mut header_seen = false;
    let (mut xs, mut us, mut zs) = (Vec::new(), Vec::new(), Vec::new());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| format!("line {}: bad number in header", lineno + 1))?;
                match k.trim() {
                    "t" => t = Some(v),
                    "length" => length = Some(v),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != "x,u,zeta" {
                return Err(format!("line {}: expected header 'x,u,zeta'", lineno + 1));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(format!(
                "line {}: expected 3 columns, found {}",
                lineno + 1,
                cols.len()
            ));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("line {}: bad number '{s}'", lineno + 1))
        };
        xs.push(num(cols[0])?);
        us.push(num(cols[1])?);
        zs.push(num(cols[2])?);
    }
    let t = t.ok_or("missing '# t = ...' header")?;
    let length = length.ok_or("missing '# length = ...' header")?;
    let grid = Grid::new(us.len(), length).map_err(|e| e.to_string())?;
    for (j, x) in xs.iter().enumerate() {
        if (x - grid.x(j)).abs() > 1e-9 * length {
            return Err(format!("x column does not match a uniform grid at row {j}"));
        }
    }
    if let Some(g) = expect {
        if g.n_points() != grid.n_points() || (g.length() - grid.length()).abs() > 1e-12 * g.length()
        {
            return Err(format!(
                "grid mismatch: file has n = {}, length = {}; expected n = {}, length = {}",
                grid.n_points(),
                grid.length(),
                g.n_points(),
                g.length()
            ));
        }
    }
    let u = Field::new(grid, us).map_err(|e| e.to_string())?;
    let zeta = Field::new(grid, zs).map_err(|e| e.to_string())?;
    Ok(State { t, u, zeta })
}

pub fn audit_csv(report: &AuditReport) -> String {
    let mut out = String::from("A,c,beta1,beta2,alpha1,alpha2");
    for n in AuditReport::RESIDUAL_NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for e in &report.entries {
        let mut cols: Vec<String> = [e.a, e.c, e.beta1, e.beta2, e.alpha1, e.alpha2]
            .iter()
            .map(|v| fmt_f64(*v))
            .collect();
        cols.extend(e.residuals().iter().map(|v| fmt_f64(*v)));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_audit(report: &AuditReport, path: &Path) -> Result<()> {
    write_file(path, &audit_csv(report))
}

/// `j,d_j,ratio` with `ratio = d_j / d_{j-1}` (empty for `j = 0`).
pub fn friedrichs_csv(result: &FriedrichsResult) -> String {
    let mut out = String::from("j,d_j,ratio\n");
    for (j, d) in result.differences.iter().enumerate() {
        let ratio = if j == 0 {
            String::new()
        } else {
            fmt_f64(d / result.differences[j - 1])
        };
        let _ = writeln!(out, "{j},{},{ratio}", fmt_f64(*d));
    }
    out
}

pub fn write_friedrichs(result: &FriedrichsResult, path: &Path) -> Result<()> {
    write_file(path, &friedrichs_csv(result))
}

/// One row of the sweep index.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dir: String,
    pub values: Vec<String>,
    pub status: String,
    pub final_time: f64,
}

pub fn write_sweep_index(keys: &[String], rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = String::from("index,dir");
    for k in keys {
        out.push(',');
        out.push_str(k);
    }
    out.push_str(",status,final_time\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{}",
            r.dir,
            r.values.join(","),
            r.status,
            fmt_f64(r.final_time)
        );
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0, -0.0, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn snapshot_round_trip_in_memory() {
        let g = Grid::new(16, 3.7).unwrap();
        let s = State {
            t: 0.3,
            u: Field::from_fn(g, |x| (1.3 * x).sin() / 7.0),
            zeta: Field::from_fn(g, |x| (0.7 * x).cos() * 1e-9),
        };
        let back = parse_snapshot(&snapshot_csv(&s), Some(g)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn snapshot_schema_errors() {
        let bad = "# t = 0\n# length = 1\nx,u,zeta\n0,1\n";
        assert!(parse_snapshot(bad, None).unwrap_err().contains("3 columns"));
        let g = Grid::new(16, 3.7).unwrap();
        let text = snapshot_csv(&State::zeros(g));
        let other = Grid::new(32, 3.7).unwrap();
        assert!(parse_snapshot(&text, Some(other)).unwrap_err().contains("grid mismatch"));
    }
}
