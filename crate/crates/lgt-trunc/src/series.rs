//! Uniform-grid observable time series with CSV/JSON output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("time grid must be strictly increasing")]
    NonMonotonicGrid,
    #[error("series has {cols} columns but {vals} value rows")]
    ShapeMismatch { cols: usize, vals: usize },
    #[error("column {0:?} not present")]
    UnknownColumn(String),
    #[error("value at (column {col}, index {idx}) is not finite")]
    NonFinite { col: usize, idx: usize },
    #[error("series is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Real expectation values of named observables on a shared time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// `values[c][i]` is column `c` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    /// Arbitrary run metadata (model parameters, truncations, solver info).
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SeriesError::NonMonotonicGrid);
        }
        if values.len() != columns.len() {
            return Err(SeriesError::ShapeMismatch { cols: columns.len(), vals: values.len() });
        }
        for (c, col) in values.iter().enumerate() {
            if col.len() != times.len() {
                return Err(SeriesError::ShapeMismatch { cols: times.len(), vals: col.len() });
            }
            if let Some(idx) = col.iter().position(|v| !v.is_finite()) {
                return Err(SeriesError::NonFinite { col: c, idx });
            }
        }
        Ok(TimeSeries { times, columns, values, metadata: serde_json::Value::Null })
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| SeriesError::UnknownColumn(name.to_string()))?;
        Ok(&self.values[i])
    }

    /// Grid maximum of a column and the time where it is attained.
    pub fn max_over_time(&self, name: &str) -> Result<(f64, f64)> {
        let col = self.column(name)?;
        if col.is_empty() {
            return Err(SeriesError::Empty);
        }
        let (i, &v) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        Ok((self.times[i], v))
    }

    /// Pointwise absolute difference of one column against the same column
    /// of another series on the same grid.
    pub fn abs_diff(&self, other: &TimeSeries, name: &str) -> Result<TimeSeries> {
        let a = self.column(name)?;
        let b = other.column(name)?;
        if a.len() != b.len() {
            return Err(SeriesError::ShapeMismatch { cols: a.len(), vals: b.len() });
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
        let mut running = Vec::with_capacity(diff.len());
        let mut m = f64::NEG_INFINITY;
        for &d in &diff {
            m = m.max(d);
            running.push(m);
        }
        TimeSeries::new(
            self.times.clone(),
            vec![name.to_string(), format!("{name}_running_max")],
            vec![diff, running],
        )
    }

    /// CSV with a `t` column followed by one column per observable,
    /// 17 significant digits (round-trip exact for f64).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for c in &self.columns {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            write!(w, "{:.17e}", self.times[i])?;
            for col in &self.values {
                write!(w, ",{:.17e}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }
}
