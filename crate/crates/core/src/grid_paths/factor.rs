use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{GaussianSpec, TimeGrid};
use crate::error::{invalid, Error, Result};

/// Relative jitter added to the diagonal when a factorization fails.
pub const JITTER_SCALE: f64 = 1e-12;
/// Maximum number of jittered retries.
pub const MAX_JITTER_ATTEMPTS: usize = 3;

const BLOCK: usize = 64;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    /// Covariance of `(X_{t_1}, ..., X_{t_N})` for `spec` on `grid`.
    pub fn assemble(spec: &GaussianSpec, grid: &TimeGrid) -> Self {
        Self::from_fn(grid.steps(), |i, j| spec.covariance(grid.node(i + 1), grid.node(j + 1)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }
}

/// Lower Cholesky factor in packed row-major storage (row `i` holds `i + 1` entries).
#[derive(Debug, Clone)]
pub struct LowerFactor {
    n: usize,
    data: Vec<f64>,
    /// Jitter added to the diagonal to make the factorization succeed (0 if none).
    pub jitter: f64,
}

#[inline]
fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = acc.iter().sum::<f64>();
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

impl LowerFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[row_offset(i) + j]
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[row_offset(i)..row_offset(i + 1)]
    }

    /// `L z`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), &z[..=i])).collect()
    }
}

/// Cholesky factorization with the jitter policy: a plain attempt, then up to
/// [`MAX_JITTER_ATTEMPTS`] retries adding `attempt * 1e-12 * max_diag` to the diagonal.
pub fn cholesky(cov: &CovarianceMatrix) -> Result<LowerFactor> {
    let base = JITTER_SCALE * cov.max_diagonal().max(f64::MIN_POSITIVE);
    let mut last = (0, 0.0);
    for attempt in 0..=MAX_JITTER_ATTEMPTS {
        let shift = attempt as f64 * base;
        match cholesky_shifted(cov, shift) {
            Ok(data) => {
                if attempt > 0 {
                    log::warn!("covariance factorization needed diagonal jitter {shift:e} (attempt {attempt})");
                }
                return Ok(LowerFactor { n: cov.n, data, jitter: shift });
            }
            Err(fail) => last = fail,
        }
    }
    Err(Error::CovarianceNotPsd { minor: last.0, pivot: last.1, jitter_attempts: MAX_JITTER_ATTEMPTS })
}

/// Blocked Cholesky-Banachiewicz. Rows inside a block are first reduced against
/// all finished rows in parallel, then completed sequentially within the block.
fn cholesky_shifted(cov: &CovarianceMatrix, shift: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let n = cov.n;
    let mut data = vec![0.0; row_offset(n)];
    for i in 0..n {
        for j in 0..=i {
            data[row_offset(i) + j] = cov.get(i, j);
        }
        data[row_offset(i) + i] += shift;
    }
    for b0 in (0..n).step_by(BLOCK) {
        let b1 = (b0 + BLOCK).min(n);
        let (done, rest) = data.split_at_mut(row_offset(b0));
        let done: &[f64] = done;
        let mut rows: Vec<&mut [f64]> = Vec::with_capacity(b1 - b0);
        let mut tail = rest;
        for i in b0..b1 {
            let (row, t) = tail.split_at_mut(i + 1);
            rows.push(row);
            tail = t;
        }
        rows.par_iter_mut().for_each(|row| {
            for j in 0..b0 {
                let rj = &done[row_offset(j)..row_offset(j) + j + 1];
                let (head, cur) = row.split_at_mut(j);
                cur[0] = (cur[0] - dot(head, &rj[..j])) / rj[j];
            }
        });
        for idx in 0..rows.len() {
            let i = b0 + idx;
            let (prev, cur) = rows.split_at_mut(idx);
            let row = &mut cur[0];
            for j in b0..i {
                let rj = &prev[j - b0];
                let (head, c) = row.split_at_mut(j);
                c[0] = (c[0] - dot(head, &rj[..j])) / rj[j];
            }
            let (head, c) = row.split_at_mut(i);
            let pivot = c[0] - dot(head, head);
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err((i + 1, pivot));
            }
            c[0] = pivot.sqrt();
        }
    }
    Ok(data)
}

/// Square-root factor of the grid covariance of an atomic family.
#[derive(Debug)]
pub enum Factor {
    /// Brownian motion: the Cholesky factor of `min(t_i, t_j)` is
    /// `sqrt(dt)` on and below the diagonal, so `L z` is a scaled cumulative sum.
    Brownian { sqrt_mesh: f64, n: usize },
    Dense(LowerFactor),
}

impl Factor {
    /// One draw of `(X_{t_1}, ..., X_{t_N})`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Factor::Brownian { sqrt_mesh, n } => {
                let mut acc = 0.0;
                (0..*n)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        acc += sqrt_mesh * z;
                        acc
                    })
                    .collect()
            }
            Factor::Dense(l) => {
                let z: Vec<f64> = (0..l.dim()).map(|_| rng.sample(StandardNormal)).collect();
                l.apply(&z)
            }
        }
    }
}

type FactorKey = (String, u64, usize);

static FACTORS: Lazy<Mutex<HashMap<FactorKey, Arc<Factor>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Factor for an atomic spec on `grid`, computed once per process and cached.
pub fn factorize(spec: &GaussianSpec, grid: &TimeGrid) -> Result<Arc<Factor>> {
    if !spec.is_atomic() {
        return Err(invalid(format!("'{spec}' is composite; factor its components")));
    }
    spec.validate()?;
    let key = (serde_json::to_string(spec)?, grid.horizon().to_bits(), grid.steps());
    let mut cache = FACTORS.lock().expect("factor cache poisoned");
    if let Some(f) = cache.get(&key) {
        return Ok(Arc::clone(f));
    }
    let factor = match spec {
        GaussianSpec::Brownian => Factor::Brownian { sqrt_mesh: grid.mesh().sqrt(), n: grid.steps() },
        _ => Factor::Dense(cholesky(&CovarianceMatrix::assemble(spec, grid))?),
    };
    let factor = Arc::new(factor);
    cache.insert(key, Arc::clone(&factor));
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_factor_is_closed_form() {
        let grid = TimeGrid::new(1.0, 37).unwrap();
        let cov = CovarianceMatrix::assemble(&GaussianSpec::Brownian, &grid);
        let l = cholesky(&cov).unwrap();
        assert_eq!(l.jitter, 0.0);
        let s = grid.mesh().sqrt();
        for i in 0..37 {
            for j in 0..37 {
                let want = if j <= i { s } else { 0.0 };
                assert!((l.get(i, j) - want).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn reconstructs_covariance() {
        let grid = TimeGrid::new(1.0, 150).unwrap();
        let cov = CovarianceMatrix::assemble(&GaussianSpec::bifractional(0.625, 0.8), &grid);
        let l = cholesky(&cov).unwrap();
        for i in (0..150).step_by(7) {
            for j in (0..=i).step_by(5) {
                let v: f64 = (0..=j).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert!((v - cov.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reports_offending_minor() {
        // Rank-one 3x3 matrix: second pivot vanishes even with jitter scaled 1e-12.
        let cov = CovarianceMatrix::from_fn(3, |i, j| if i == 2 && j == 2 { -1.0 } else { 1.0 });
        match cholesky(&cov) {
            Err(Error::CovarianceNotPsd { minor, jitter_attempts, .. }) => {
                assert_eq!(jitter_attempts, MAX_JITTER_ATTEMPTS);
                assert_eq!(minor, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jitter_rescues_singular_psd() {
        let cov = CovarianceMatrix::from_fn(3, |_, _| 1.0);
        let l = cholesky(&cov).unwrap();
        assert!(l.jitter > 0.0);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..29).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..29).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-9);
    }
}
