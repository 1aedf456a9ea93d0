//! Epsilon-regularized forward integrals and covariations of real processes,
//! and the replica harness that checks their convergence along a ladder of
//! epsilons.
//!
//! With `eps = m * dt` every estimator is an exact left-endpoint sum on the grid:
//!
//! ```text
//! I_eps(Y, X)(t_i) = dt/eps * sum_{j<i} Y_j (X_{j+m} - X_j)
//! C_eps(X, Y)(t_i) = dt/eps * sum_{j<i} (X_{j+m} - X_j)(Y_{j+m} - Y_j)
//! ```
//!
//! where indices beyond `N` read the constant extension `X_T`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid_paths::{Path, TimeGrid};
use crate::report::{ConvergenceReport, ErrorStatistic};
use crate::rng::replica_seed;

fn same_grid(a: &Path, b: &Path) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Left-endpoint sum `dt/eps * sum_{j<i} term(j)` as a path.
fn running_sum(grid: TimeGrid, m: usize, label: String, term: impl Fn(usize) -> f64) -> Path {
    let n = grid.steps();
    let scale = 1.0 / m as f64;
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for j in 0..n {
        acc += term(j);
        values.push(acc * scale);
    }
    Path::from_values_unchecked(grid, values, label)
}

/// `t -> int_0^t Y_s (X_{s+eps} - X_s) / eps ds`.
pub fn forward_integral_eps(y: &Path, x: &Path, eps: f64) -> Result<Path> {
    same_grid(y, x)?;
    let m = x.grid().node_multiple(eps)?;
    let (yv, xv) = (y.values(), x.values());
    Ok(running_sum(*x.grid(), m, format!("fwd_eps({},{})", y.label(), x.label()), |j| {
        yv[j] * (x.at((j + m) as isize) - xv[j])
    }))
}

/// `t -> (1/eps) int_0^t (X_{s+eps} - X_s)(Y_{s+eps} - Y_s) ds`.
pub fn covariation_eps(x: &Path, y: &Path, eps: f64) -> Result<Path> {
    same_grid(x, y)?;
    let m = x.grid().node_multiple(eps)?;
    let (xv, yv) = (x.values(), y.values());
    Ok(running_sum(*x.grid(), m, format!("cov_eps({},{})", x.label(), y.label()), |j| {
        let dx = x.at((j + m) as isize) - xv[j];
        let dy = y.at((j + m) as isize) - yv[j];
        dx * dy
    }))
}

/// Matrix of all pairwise covariation estimates; entry `(i, j)` is computed once and mirrored.
pub fn mutual_covariations(components: &[Path], eps: f64) -> Result<Vec<Vec<Path>>> {
    if components.is_empty() {
        return Err(invalid("need at least one component"));
    }
    let n = components.len();
    let mut out: Vec<Vec<Option<Path>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let c = covariation_eps(&components[i], &components[j], eps)?;
            out[j][i] = Some(c.clone());
            out[i][j] = Some(c);
        }
    }
    Ok(out.into_iter().map(|row| row.into_iter().map(Option::unwrap).collect()).collect())
}

/// Forward integral restricted to `[0, T - eps]`, where no increment reads the
/// extension, plus a linear extrapolation to `T` from the last two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ImproperForward {
    /// Values at `t_0 .. t_{N-m}`.
    pub values: Vec<f64>,
    /// Extrapolated value at `T`. Flagged: it is not a computed Riemann sum.
    pub extrapolated_terminal: f64,
}

pub fn improper_forward_integral(y: &Path, x: &Path, eps: f64) -> Result<ImproperForward> {
    let full = forward_integral_eps(y, x, eps)?;
    let m = x.grid().node_multiple(eps)?;
    let last = x.grid().steps() - m;
    let values = full.values()[..=last].to_vec();
    let extrapolated_terminal = if last == 0 {
        values[0]
    } else {
        let slope = values[last] - values[last - 1];
        values[last] + slope * m as f64
    };
    Ok(ImproperForward { values, extrapolated_terminal })
}

/// Decreasing epsilons, each a multiple of the grid mesh, and a replica count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonLadder {
    multiples: Vec<usize>,
    values: Vec<f64>,
    replicas: usize,
}

impl EpsilonLadder {
    pub fn new(grid: &TimeGrid, multiples: &[usize], replicas: usize) -> Result<Self> {
        if multiples.is_empty() {
            return Err(invalid("ladder needs at least one epsilon"));
        }
        if replicas == 0 {
            return Err(invalid("ladder needs at least one replica"));
        }
        if multiples.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("ladder must be strictly decreasing"));
        }
        if multiples.iter().any(|&m| m < 1 || m >= grid.steps()) {
            return Err(invalid("ladder multiples must lie in 1..N"));
        }
        let values = multiples.iter().map(|&m| m as f64 * grid.mesh()).collect();
        Ok(Self { multiples: multiples.to_vec(), values, replicas })
    }

    /// Desk-scale default: `eps / dt` in {64, 32, 16, 8}.
    pub fn desk(grid: &TimeGrid, replicas: usize) -> Result<Self> {
        Self::new(grid, &[64, 32, 16, 8], replicas)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multiples(&self) -> &[usize] {
        &self.multiples
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("nonempty ladder")
    }

    /// Every epsilon must be strictly smaller than the window lag.
    pub fn check_below(&self, tau: f64) -> Result<()> {
        if self.values.iter().all(|&e| e < tau) {
            Ok(())
        } else {
            Err(invalid(format!("every epsilon must be < tau = {tau}")))
        }
    }
}

/// Runs `estimate(seed, eps)` against `target(seed)` for replicas with seeds
/// `base_seed + r` and summarizes the error statistic per epsilon.
pub fn converge<E, T>(
    estimate: E,
    target: T,
    ladder: &EpsilonLadder,
    tolerance: f64,
    statistic: ErrorStatistic,
    base_seed: u64,
) -> Result<ConvergenceReport>
where
    E: Fn(u64, f64) -> Result<Path> + Sync,
    T: Fn(u64) -> Result<Path> + Sync,
{
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let per_replica: Vec<Vec<f64>> = (0..ladder.replicas())
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(base_seed, r);
            let tgt = target(seed)?;
            ladder
                .values()
                .iter()
                .map(|&eps| {
                    let est = estimate(seed, eps)?;
                    same_grid(&est, &tgt)?;
                    Ok(statistic.eval(est.values(), tgt.values()))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let samples = (0..ladder.values().len())
        .map(|k| per_replica.iter().map(|row| row[k]).collect())
        .collect();
    Ok(ConvergenceReport::from_samples(ladder.values(), samples, statistic, tolerance))
}
