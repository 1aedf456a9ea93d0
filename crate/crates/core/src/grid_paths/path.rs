use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::TimeGrid;
use crate::error::{invalid, Error, Result};

/// A real process sampled on a uniform grid.
///
/// Outside `[0, T]` the path is extended by constants: `X_t = X_0` for
/// `t <= 0` and `X_t = X_T` for `t >= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    values: Vec<f64>,
    label: String,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(invalid(format!(
                "path needs {} values, got {}",
                grid.steps() + 1,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite path value at node {i}")));
        }
        Ok(Self { grid, values, label: label.into() })
    }

    pub fn from_fn(grid: TimeGrid, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values, label)
    }

    pub fn zeros(grid: TimeGrid, label: impl Into<String>) -> Self {
        Self { grid, values: vec![0.0; grid.steps() + 1], label: label.into() }
    }

    /// Internal constructor for kernels whose outputs are finite by construction.
    pub(crate) fn from_values_unchecked(grid: TimeGrid, values: Vec<f64>, label: impl Into<String>) -> Self {
        debug_assert_eq!(values.len(), grid.steps() + 1);
        Self { grid, values, label: label.into() }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn initial(&self) -> f64 {
        self.values[0]
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Value at node index `i`, with the constant extension for indices outside `0..=N`.
    #[inline]
    pub fn at(&self, i: isize) -> f64 {
        let n = self.values.len() as isize - 1;
        self.values[i.clamp(0, n) as usize]
    }

    /// `X_t` for any real `t`: constant extension outside `[0, T]`, linear
    /// interpolation between nodes inside.
    pub fn eval_extended(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.initial();
        }
        if t >= self.grid.horizon() {
            return self.terminal();
        }
        let x = t / self.grid.mesh();
        let i = (x.floor() as usize).min(self.grid.steps() - 1);
        let w = x - i as f64;
        if w == 0.0 {
            return self.values[i];
        }
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    fn check_same_grid(&self, other: &Path) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Path, b: f64) -> Result<Path> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Path::new(self.grid, values, format!("{a}*{}+{b}*{}", self.label, other.label))
    }

    pub fn add(&self, other: &Path) -> Result<Path> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(Path::from_values_unchecked(self.grid, values, format!("{}+{}", self.label, other.label)))
    }

    pub fn scale(&self, c: f64) -> Path {
        let values = self.values.iter().map(|x| c * x).collect();
        Path::from_values_unchecked(self.grid, values, format!("{c}*{}", self.label))
    }

    /// `t -> X_{t - lag}` with the constant extension; `lag` is a whole number of mesh steps.
    pub fn delayed(&self, lag_steps: usize) -> Path {
        let values = (0..=self.grid.steps()).map(|i| self.at(i as isize - lag_steps as isize)).collect();
        Path::from_values_unchecked(self.grid, values, format!("{}(t-{lag_steps}dt)", self.label))
    }

    /// `sup_i |X_{t_i} - Y_{t_i}|`.
    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Writes `t,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt17(self.grid.node(i)), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, file: &FsPath) -> Result<()> {
        let f = std::fs::File::create(file)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a `t,value` CSV produced by [`write_csv`](Self::write_csv).
    pub fn read_csv(text: &str, label: impl Into<String>) -> Result<Path> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("t,value") {
            return Err(invalid("path CSV must start with header 't,value'"));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (t, v) = line.split_once(',').ok_or_else(|| invalid(format!("bad CSV row '{line}'")))?;
            ts.push(t.trim().parse::<f64>().map_err(|e| invalid(e.to_string()))?);
            vs.push(v.trim().parse::<f64>().map_err(|e| invalid(e.to_string()))?);
        }
        if ts.len() < 3 {
            return Err(invalid("path CSV needs at least 3 rows"));
        }
        let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
        Path::new(grid, vs, label)
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sidecar record stored next to a path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetadata {
    pub spec: super::GaussianSpec,
    pub seed: u64,
    pub grid: TimeGrid,
    pub label: String,
    /// Seeds actually used for each mixture component, in order (empty otherwise).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub component_seeds: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 4).unwrap()
    }

    #[test]
    fn extension_convention() {
        let p = Path::new(grid(), vec![0.5, 1.0, 3.0, 2.0, -1.0], "p").unwrap();
        assert_eq!(p.eval_extended(-0.5), 0.5);
        assert_eq!(p.eval_extended(2.0), -1.0);
        assert_eq!(p.eval_extended(0.375), 2.0);
        assert_eq!(p.eval_extended(0.5), 3.0);
        assert_eq!(p.at(-3), 0.5);
        assert_eq!(p.at(9), -1.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Path::new(grid(), vec![0.0; 4], "short").is_err());
        assert!(Path::new(grid(), vec![0.0, 1.0, f64::NAN, 0.0, 0.0], "nan").is_err());
    }

    #[test]
    fn delayed_uses_initial_value() {
        let p = Path::new(grid(), vec![1.0, 2.0, 3.0, 4.0, 5.0], "p").unwrap();
        assert_eq!(p.delayed(2).values(), &[1.0, 1.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let p = Path::new(grid(), vec![0.0, 1.0 / 3.0, -2.0e-17, 7.123456789012345, 1e300], "p").unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,value\n0.0000000000000000e0,"));
        let q = Path::read_csv(&text, "p").unwrap();
        assert_eq!(q.values(), p.values());
        assert_eq!(q.grid(), p.grid());
    }
}
