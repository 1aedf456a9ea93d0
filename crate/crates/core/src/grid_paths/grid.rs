use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform time grid `t_i = i * T / N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if steps < 2 {
            return Err(invalid(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn mesh(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node `t_i`. Computed as `i * T / N` so that `t_N == T` exactly.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 * self.horizon) / self.steps as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }

    /// Converts a time lag to a whole number of mesh steps.
    ///
    /// Fails unless `lag` is within `1e-9` mesh of `m * mesh` with `1 <= m < N`.
    pub fn node_multiple(&self, lag: f64) -> Result<usize> {
        let mesh = self.mesh();
        let err = || Error::EpsilonNotNodeMultiple { eps: lag, mesh };
        if !lag.is_finite() || lag <= 0.0 {
            return Err(err());
        }
        let m = (lag / mesh).round();
        if (lag - m * mesh).abs() > 1e-9 * mesh || m < 1.0 || m >= self.steps as f64 {
            return Err(err());
        }
        Ok(m as usize)
    }

    /// Like [`node_multiple`](Self::node_multiple) but also accepts `lag == T`.
    pub(crate) fn lag_multiple(&self, lag: f64) -> Result<usize> {
        let mesh = self.mesh();
        let m = (lag / mesh).round();
        if lag.is_finite() && m >= 1.0 && m <= self.steps as f64 && (lag - m * mesh).abs() <= 1e-9 * mesh {
            Ok(m as usize)
        } else {
            Err(invalid(format!("lag {lag} must be a positive node multiple of {mesh} not exceeding T")))
        }
    }
}

/// `make_grid` from the operation table: a uniform grid on `[0, T]` with `N` steps.
pub fn make_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps)
}
