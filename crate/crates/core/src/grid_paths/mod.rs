//! Time grids and exact Gaussian path generators.
//!
//! Every family is drawn by multiplying a standard normal vector by a square
//! root of its grid covariance, so draws are exact at the grid nodes. The
//! bifractional covariance is
//!
//! ```text
//! R(s,t) = 2^{-K} [ (s^{2H} + t^{2H})^K - |t - s|^{2HK} ]
//! ```
//!
//! which reduces to fractional Brownian motion at `K = 1`.

mod factor;
mod grid;
mod path;
mod spec;

pub use factor::{cholesky, factorize, CovarianceMatrix, Factor, LowerFactor, JITTER_SCALE, MAX_JITTER_ATTEMPTS};
pub use grid::{make_grid, TimeGrid};
pub use path::{fmt17, Path, PathMetadata};
pub use spec::GaussianSpec;

pub(crate) use factor::dot;
pub(crate) use spec::parse_number;

use crate::error::Result;
use crate::rng::{derive_seed, rng_from_seed};

/// One exact draw of `spec` on `grid`, with `X_0 = 0`.
///
/// Deterministic in `(spec, grid, seed)`. Mixture component `k` is drawn
/// with seed `derive_seed(seed, k)`; a scaled spec multiplies the base draw.
pub fn sample(spec: &GaussianSpec, grid: &TimeGrid, seed: u64) -> Result<Path> {
    spec.validate()?;
    let values = sample_values(spec, grid, seed)?;
    Ok(Path::from_values_unchecked(*grid, values, spec.to_string()))
}

fn sample_values(spec: &GaussianSpec, grid: &TimeGrid, seed: u64) -> Result<Vec<f64>> {
    match spec {
        GaussianSpec::Scaled { base, c } => {
            let mut v = sample_values(base, grid, seed)?;
            v.iter_mut().for_each(|x| *x *= c);
            Ok(v)
        }
        GaussianSpec::Mixed { components } => {
            let mut acc = vec![0.0; grid.steps() + 1];
            for (k, comp) in components.iter().enumerate() {
                let v = sample_values(comp, grid, derive_seed(seed, k as u64))?;
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            }
            Ok(acc)
        }
        _ => {
            let factor = factorize(spec, grid)?;
            let mut rng = rng_from_seed(seed);
            let mut values = Vec::with_capacity(grid.steps() + 1);
            values.push(0.0);
            values.extend(factor.draw(&mut rng));
            Ok(values)
        }
    }
}

/// A process family on a grid with a base seed; replica `r` uses seed `base_seed + r`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathSource {
    pub spec: GaussianSpec,
    pub grid: TimeGrid,
    pub base_seed: u64,
}

impl PathSource {
    pub fn new(spec: GaussianSpec, grid: TimeGrid, base_seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, grid, base_seed })
    }

    pub fn with_seed(&self, seed: u64) -> Result<Path> {
        sample(&self.spec, &self.grid, seed)
    }

    pub fn replica(&self, r: usize) -> Result<Path> {
        self.with_seed(crate::rng::replica_seed(self.base_seed, r))
    }
}

/// Seeds used for the direct components of a mixed spec (empty otherwise).
pub fn component_seeds(spec: &GaussianSpec, seed: u64) -> Vec<u64> {
    match spec {
        GaussianSpec::Mixed { components } => (0..components.len()).map(|k| derive_seed(seed, k as u64)).collect(),
        _ => Vec::new(),
    }
}

/// Dense grid covariance of any spec, including composites.
pub fn covariance_matrix(spec: &GaussianSpec, grid: &TimeGrid) -> CovarianceMatrix {
    CovarianceMatrix::assemble(spec, grid)
}

/// `eval_extended` from the operation table.
pub fn eval_extended(path: &Path, t: f64) -> f64 {
    path.eval_extended(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cov(spec: &GaussianSpec, grid: &TimeGrid, draws: usize, i: usize, j: usize) -> f64 {
        (0..draws)
            .map(|r| {
                let p = sample(spec, grid, 1000 + r as u64).unwrap();
                p.values()[i] * p.values()[j]
            })
            .sum::<f64>()
            / draws as f64
    }

    #[test]
    fn brownian_sample_covariance() {
        let grid = make_grid(1.0, 8).unwrap();
        let c = sample_cov(&GaussianSpec::Brownian, &grid, 20_000, 3, 6);
        // min(3/8, 6/8) = 0.375; standard error about sqrt((0.375*0.75+0.375^2)/2e4) ~ 0.0047
        assert!((c - 0.375).abs() < 0.02, "{c}");
    }

    #[test]
    fn half_hurst_marginal_variance() {
        let grid = make_grid(1.0, 8).unwrap();
        let c = sample_cov(&GaussianSpec::fbm(0.5), &grid, 20_000, 4, 4);
        assert!((c - 0.5).abs() < 0.025, "{c}");
    }

    #[test]
    fn unit_k_bifractional_draw_equals_fbm_draw() {
        let grid = make_grid(1.0, 64).unwrap();
        let a = CovarianceMatrix::assemble(&GaussianSpec::bifractional(0.25, 1.0), &grid);
        let b = CovarianceMatrix::assemble(&GaussianSpec::fbm(0.25), &grid);
        assert_eq!(a, b);
        let pa = sample(&GaussianSpec::bifractional(0.25, 1.0), &grid, 11).unwrap();
        let pb = sample(&GaussianSpec::fbm(0.25), &grid, 11).unwrap();
        assert_eq!(pa.values(), pb.values());
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let grid = make_grid(1.0, 128).unwrap();
        let spec: GaussianSpec = "mixed:brownian,fbm:0.75".parse().unwrap();
        assert_eq!(sample(&spec, &grid, 5).unwrap(), sample(&spec, &grid, 5).unwrap());
        assert_ne!(sample(&spec, &grid, 5).unwrap(), sample(&spec, &grid, 6).unwrap());
    }

    #[test]
    fn starts_at_zero() {
        let grid = make_grid(2.0, 32).unwrap();
        for spec in ["brownian", "fbm:0.3", "bifractional:0.625:0.8", "scaled:3:brownian"] {
            let p = sample(&spec.parse().unwrap(), &grid, 1).unwrap();
            assert_eq!(p.initial(), 0.0);
        }
    }

    #[test]
    fn mixed_is_sum_of_component_draws() {
        let grid = make_grid(1.0, 64).unwrap();
        let spec: GaussianSpec = "mixed:brownian,fbm:0.75".parse().unwrap();
        let seeds = component_seeds(&spec, 9);
        let w = sample(&GaussianSpec::Brownian, &grid, seeds[0]).unwrap();
        let b = sample(&GaussianSpec::fbm(0.75), &grid, seeds[1]).unwrap();
        let m = sample(&spec, &grid, 9).unwrap();
        assert_eq!(m.values(), w.add(&b).unwrap().values());
    }

    #[test]
    fn scaled_is_multiple_of_base() {
        let grid = make_grid(1.0, 16).unwrap();
        let base = sample(&GaussianSpec::Brownian, &grid, 3).unwrap();
        let s = sample(&GaussianSpec::scaled(GaussianSpec::Brownian, -2.0), &grid, 3).unwrap();
        assert_eq!(s.values(), base.scale(-2.0).values());
    }

    #[test]
    fn fbm_diagonal_is_power_law() {
        let grid = make_grid(1.0, 50).unwrap();
        let h = 0.75;
        let cov = covariance_matrix(&GaussianSpec::fbm(h), &grid);
        for i in 0..50 {
            let t = grid.node(i + 1);
            assert!((cov.get(i, i) - t.powf(2.0 * h)).abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_covariance_is_sum() {
        let grid = make_grid(1.0, 20).unwrap();
        let comps = vec![GaussianSpec::Brownian, GaussianSpec::fbm(0.75), GaussianSpec::bifractional(0.625, 0.8)];
        let m = covariance_matrix(&GaussianSpec::mixed(comps.clone()), &grid);
        let parts: Vec<_> = comps.iter().map(|c| covariance_matrix(c, &grid)).collect();
        for i in 0..20 {
            for j in 0..20 {
                let s: f64 = parts.iter().map(|p| p.get(i, j)).sum();
                assert!((m.get(i, j) - s).abs() < 1e-14);
            }
        }
        assert!(m.is_symmetric());
    }

    #[test]
    fn brownian_increments_uncorrelated() {
        let grid = make_grid(1.0, 16).unwrap();
        let draws = 10_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for r in 0..draws {
            let p = sample(&GaussianSpec::Brownian, &grid, r as u64).unwrap();
            let v = p.values();
            let (x, y) = (v[3] - v[2], v[9] - v[8]);
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let corr = sxy / (sxx * syy).sqrt();
        // standard error of a null correlation is 1/sqrt(draws) = 0.01
        assert!(corr.abs() < 0.03, "{corr}");
    }
}
