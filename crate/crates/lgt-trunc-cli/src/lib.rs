//! Experiment runner for the truncation-error library: presets for every
//! figure/table, a generic parameter sweep, and a bound-vs-measurement
//! comparison verb. Artifacts are CSV (17 significant digits, deterministic),
//! JSON metadata, and self-contained SVG plots.

pub mod presets;
pub mod svg;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "LGT_TRUNC_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config, unknown preset, malformed input files. Exit code 2.
    #[error("validation: {0}")]
    Validation(String),
    /// A computation failed after validation. Exit code 3.
    #[error("numerical: {0}")]
    Numerical(String),
    /// `compare` found at least one bound below its measurement. Exit code 4.
    #[error("comparison: {0} row(s) FAIL")]
    ComparisonFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::ComparisonFailed(_) => 4,
        }
    }

    /// Machine-readable error payload printed on stderr.
    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::ComparisonFailed(_) => "comparison",
        };
        serde_json::json!({ "error": { "kind": kind, "message": self.to_string() } }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

/// One experiment: a preset plus optional overrides. Unknown keys are
/// rejected so configs stay re-runnable provenance records.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Trotter / propagation step override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Evolution horizon override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Bond-dimension cap override for MPS presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<usize>,
    /// Relative discarded-weight budget override for MPS presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_tol: Option<f64>,
}

impl RunConfig {
    pub fn new(preset: &str) -> Self {
        RunConfig {
            preset: preset.to_string(),
            out_dir: None,
            dt: None,
            t_max: None,
            chi: None,
            trunc_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !presets::PRESET_NAMES.contains(&self.preset.as_str()) {
            return Err(CliError::Validation(format!(
                "unknown preset '{}'; available: {}",
                self.preset,
                presets::PRESET_NAMES.join(", ")
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(CliError::Validation(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0) {
                return Err(CliError::Validation(format!("t_max must be positive, got {t}")));
            }
        }
        if self.chi == Some(0) {
            return Err(CliError::Validation("chi must be >= 1".into()));
        }
        if let Some(tol) = self.trunc_tol {
            if !(0.0..1.0).contains(&tol) {
                return Err(CliError::Validation(format!("trunc_tol must be in [0, 1), got {tol}")));
            }
        }
        Ok(())
    }

    /// Output directory resolution: explicit config, then `LGT_TRUNC_OUT`,
    /// then `./out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Cartesian sweep over override values applied to a base config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Override name -> list of values. Allowed keys: dt, t_max, chi,
    /// trunc_tol.
    pub grid: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

const SWEEP_KEYS: [&str; 4] = ["dt", "t_max", "chi", "trunc_tol"];

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(CliError::Validation("sweep grid must declare at least one parameter".into()));
        }
        for (k, vs) in &self.grid {
            if !SWEEP_KEYS.contains(&k.as_str()) {
                return Err(CliError::Validation(format!(
                    "unknown sweep parameter '{k}'; allowed: {}",
                    SWEEP_KEYS.join(", ")
                )));
            }
            if vs.is_empty() {
                return Err(CliError::Validation(format!("empty value list for sweep parameter '{k}'")));
            }
        }
        Ok(())
    }

    /// All points of the Cartesian product, each as (name, value) pairs in
    /// key order.
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (k, vs) in &self.grid {
            let mut next = Vec::with_capacity(points.len() * vs.len());
            for p in &points {
                for &v in vs {
                    let mut q = p.clone();
                    q.push((k.clone(), v));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

fn apply_overrides(base: &RunConfig, point: &[(String, f64)]) -> RunConfig {
    let mut c = base.clone();
    for (k, v) in point {
        match k.as_str() {
            "dt" => c.dt = Some(*v),
            "t_max" => c.t_max = Some(*v),
            "chi" => c.chi = Some(*v as usize),
            "trunc_tol" => c.trunc_tol = Some(*v),
            _ => unreachable!("validated sweep key"),
        }
    }
    c
}

/// Fixed 17-significant-digit float formatting for byte-identical CSV.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular output table: string key columns plus float value columns.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// CSV with `# key=value` metadata comment lines before the header.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# lgt-trunc v{VERSION}");
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Artifacts produced by one run.
#[derive(Debug, Default)]
pub struct RunOutput {
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    /// One-line summary for sweep tables.
    pub summary: String,
}

/// Runs one config and writes its artifacts (plus the resolved config as
/// `run.json` for re-runnable provenance) under `<out>/<preset>/`.
pub fn run(config: &RunConfig) -> Result<PathBuf> {
    config.validate()?;
    let out = config.resolved_out_dir().join(&config.preset);
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out.display())))?;
    let produced = presets::run_preset(config)?;
    for (name, contents) in &produced.files {
        std::fs::write(out.join(name), contents)
            .map_err(|e| CliError::Numerical(format!("cannot write {name}: {e}")))?;
    }
    let echo = serde_json::to_string_pretty(config).expect("config serializes");
    std::fs::write(out.join("run.json"), echo)
        .map_err(|e| CliError::Numerical(format!("cannot write run.json: {e}")))?;
    Ok(out)
}

/// One row of a sweep summary.
#[derive(Debug)]
pub struct SweepRow {
    pub point: Vec<(String, f64)>,
    pub status: std::result::Result<String, String>,
}

/// Executes the Cartesian product on a bounded worker pool. Per-point
/// failures are isolated into their row; the sweep always completes.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let points = config.points();
    let workers = config
        .workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
        .clamp(1, points.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepRow>>> =
        Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= points.len() {
                    break;
                }
                let point = &points[i];
                let mut cfg = apply_overrides(&config.base, point);
                let base_out = cfg.resolved_out_dir();
                cfg.out_dir = Some(base_out.join(format!("point_{i:04}")));
                let status = run(&cfg)
                    .map(|dir| dir.display().to_string())
                    .map_err(|e| e.to_string());
                results.lock().expect("no poisoned lock").as_mut_slice()[i] =
                    Some(SweepRow { point: point.clone(), status });
            });
        }
    });
    Ok(results
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|r| r.expect("all points executed"))
        .collect())
}

/// Renders the sweep summary CSV (one row per point).
pub fn sweep_summary_csv(config: &SweepConfig, rows: &[SweepRow]) -> String {
    let keys: Vec<&String> = config.grid.keys().collect();
    let mut cols: Vec<&str> = vec!["point"];
    cols.extend(keys.iter().map(|k| k.as_str()));
    cols.extend(["status", "detail"]);
    let mut table = Table::new(&cols);
    for (i, row) in rows.iter().enumerate() {
        let mut r = vec![i.to_string()];
        for (_, v) in &row.point {
            r.push(fmt_f64(*v));
        }
        match &row.status {
            Ok(dir) => {
                r.push("ok".into());
                r.push(dir.clone());
            }
            Err(e) => {
                r.push("error".into());
                r.push(e.replace(',', ";").replace('\n', " "));
            }
        }
        table.push(r);
    }
    table.to_csv(&[("preset".into(), config.base.preset.clone())])
}

/// Parsed CSV: non-comment lines, header plus rows.
fn parse_csv(text: &str, what: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{what}: empty CSV")))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{what}: row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// One row of a compare verdict.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub key: String,
    pub bound: f64,
    pub measurement: f64,
    pub log10_slack: f64,
    pub pass: bool,
}

/// Joins two CSVs on all-but-last columns and checks bound >= measurement
/// per row. The key sets must match exactly.
pub fn compare(bounds_csv: &str, measured_csv: &str) -> Result<Vec<CompareRow>> {
    let (bh, brows) = parse_csv(bounds_csv, "bounds file")?;
    let (mh, mrows) = parse_csv(measured_csv, "measurement file")?;
    if bh.len() < 2 || mh.len() < 2 {
        return Err(CliError::Validation("compare needs at least one key column and one value column".into()));
    }
    if bh[..bh.len() - 1] != mh[..mh.len() - 1] {
        return Err(CliError::Validation(format!(
            "key columns differ: [{}] vs [{}]",
            bh[..bh.len() - 1].join(","),
            mh[..mh.len() - 1].join(",")
        )));
    }
    let value = |row: &[String], what: &str| -> Result<f64> {
        row.last()
            .expect("width checked")
            .parse::<f64>()
            .map_err(|e| CliError::Validation(format!("{what}: bad value '{}': {e}", row.last().expect("width checked"))))
    };
    let key_of = |row: &[String]| row[..row.len() - 1].join(",");
    let mut measured: BTreeMap<String, f64> = BTreeMap::new();
    for row in &mrows {
        measured.insert(key_of(row), value(row, "measurement file")?);
    }
    let mut out = Vec::new();
    for row in &brows {
        let key = key_of(row);
        let m = *measured
            .get(&key)
            .ok_or_else(|| CliError::Validation(format!("key '{key}' missing from measurement file")))?;
        measured.remove(&key);
        let b = value(row, "bounds file")?;
        let slack = if b > 0.0 && m > 0.0 { b.log10() - m.log10() } else { f64::NAN };
        out.push(CompareRow { key, bound: b, measurement: m, log10_slack: slack, pass: b >= m });
    }
    if let Some(extra) = measured.keys().next() {
        return Err(CliError::Validation(format!("key '{extra}' missing from bounds file")));
    }
    Ok(out)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut table = Table::new(&["key", "bound", "measurement", "log10_slack", "verdict"]);
    for r in rows {
        table.push(vec![
            r.key.clone(),
            fmt_f64(r.bound),
            fmt_f64(r.measurement),
            fmt_f64(r.log10_slack),
            if r.pass { "PASS".into() } else { "FAIL".into() },
        ]);
    }
    table.to_csv(&[])
}
