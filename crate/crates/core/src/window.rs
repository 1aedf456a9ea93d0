//! Window processes on `C([-tau, 0])` and finite signed measures acting on them.
//!
//! A window segment at time `t` holds `eta(u_k) = X_{t + u_k}` on the lag nodes
//! `u_k = -tau + k dt`, `k = 0..=tau/dt`, always on the path's own grid. Measures
//! are atoms sitting on lag nodes plus a density sampled on the same nodes, so
//! every pairing is a finite sum (trapezoidal for densities).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid_paths::{Path, TimeGrid};

/// The lag interval `[-tau, 0]` discretized with the path mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagInterval {
    steps: usize,
    mesh: f64,
}

impl LagInterval {
    pub fn new(steps: usize, mesh: f64) -> Result<Self> {
        if steps == 0 || !(mesh > 0.0) {
            return Err(invalid("lag interval needs at least one step and a positive mesh"));
        }
        Ok(Self { steps, mesh })
    }

    /// Lag `tau` on `grid`; `tau` must be a node multiple with `0 < tau <= T`.
    pub fn on_grid(grid: &TimeGrid, tau: f64) -> Result<Self> {
        Ok(Self { steps: grid.lag_multiple(tau)?, mesh: grid.mesh() })
    }

    pub fn tau(&self) -> f64 {
        self.steps as f64 * self.mesh
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// Number of lag nodes, `tau/dt + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        -((self.steps - k) as f64) * self.mesh
    }

    /// Index of the lag node at `loc`, if `loc` is one.
    pub fn index_of(&self, loc: f64) -> Option<usize> {
        let x = (loc + self.tau()) / self.mesh;
        let k = x.round();
        ((x - k).abs() <= 1e-9 && k >= 0.0 && k <= self.steps as f64).then_some(k as usize)
    }

    /// Trapezoidal weight of lag node `k`.
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.steps {
            0.5 * self.mesh
        } else {
            self.mesh
        }
    }

    /// Trapezoidal quadrature of `f(k)` over `[-tau, 0]`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let inner: f64 = (1..self.steps).map(&f).sum();
        self.mesh * (inner + 0.5 * (f(0) + f(self.steps)))
    }

    fn check(&self, other: &LagInterval) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LagMismatch(format!(
                "tau {} / {} steps vs tau {} / {} steps",
                self.tau(),
                self.steps,
                other.tau(),
                other.steps
            )))
        }
    }
}

/// `u -> X_{t+u}` on the lag nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSegment {
    lag: LagInterval,
    reference_time: f64,
    samples: Vec<f64>,
}

impl WindowSegment {
    pub fn new(lag: LagInterval, reference_time: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != lag.len() {
            return Err(invalid(format!("window needs {} samples, got {}", lag.len(), samples.len())));
        }
        Ok(Self { lag, reference_time, samples })
    }

    pub fn from_fn(lag: LagInterval, reference_time: f64, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..lag.len()).map(|k| f(lag.node(k))).collect();
        Self { lag, reference_time, samples }
    }

    pub fn constant(lag: LagInterval, c: f64) -> Self {
        Self { lag, reference_time: 0.0, samples: vec![c; lag.len()] }
    }

    pub fn lag(&self) -> &LagInterval {
        &self.lag
    }

    pub fn reference_time(&self) -> f64 {
        self.reference_time
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `eta(0)`.
    pub fn head(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn integral(&self) -> f64 {
        self.lag.integrate(|k| self.samples[k])
    }

    pub fn axpy(&self, a: f64, other: &WindowSegment) -> Result<WindowSegment> {
        self.lag.check(&other.lag)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| x + a * y).collect();
        Ok(Self { lag: self.lag, reference_time: self.reference_time, samples })
    }

    pub fn scale(&self, c: f64) -> WindowSegment {
        Self { lag: self.lag, reference_time: self.reference_time, samples: self.samples.iter().map(|x| c * x).collect() }
    }
}

/// Window of `path` at grid node `i` (reads the constant extension before 0).
pub(crate) fn window_at_node(path: &Path, i: usize, lag: LagInterval) -> WindowSegment {
    let start = i as isize - lag.steps() as isize;
    let samples = (0..lag.len()).map(|k| path.at(start + k as isize)).collect();
    WindowSegment { lag, reference_time: path.grid().node(i), samples }
}

/// Fills `buf` with the window increment `u -> X_{t_i + eps + u} - X_{t_i + u}`, `eps = m dt`.
pub(crate) fn fill_increment(path: &Path, i: usize, m: usize, lag: LagInterval, buf: &mut [f64]) {
    let start = i as isize - lag.steps() as isize;
    for (k, b) in buf.iter_mut().enumerate() {
        let r = start + k as isize;
        *b = path.at(r + m as isize) - path.at(r);
    }
}

#[cfg(test)]
pub(crate) fn window_increment(path: &Path, i: usize, m: usize, lag: LagInterval) -> WindowSegment {
    let mut samples = vec![0.0; lag.len()];
    fill_increment(path, i, m, lag, &mut samples);
    WindowSegment { lag, reference_time: path.grid().node(i), samples }
}

/// Window of `path` at time `t` with lag `tau`.
pub fn window_at(path: &Path, t: f64, tau: f64) -> Result<WindowSegment> {
    let grid = path.grid();
    let lag = LagInterval::on_grid(grid, tau)?;
    let x = t / grid.mesh();
    if t >= 0.0 && t <= grid.horizon() && (x - x.round()).abs() <= 1e-9 {
        return Ok(window_at_node(path, x.round() as usize, lag));
    }
    Ok(WindowSegment::from_fn(lag, t, |u| path.eval_extended(t + u)))
}

/// Max over lag nodes of `|eta(u_k)|`.
pub fn sup_norm(eta: &WindowSegment) -> f64 {
    eta.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Finite signed measure on `[-tau, 0]`: atoms on lag nodes plus a sampled density.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    lag: LagInterval,
    /// `(lag node index, weight)`.
    atoms: Vec<(usize, f64)>,
    density: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    loc: f64,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<AtomJson>,
    #[serde(default)]
    density: Vec<f64>,
}

impl SignedMeasure {
    pub fn zero(lag: LagInterval) -> Self {
        Self { lag, atoms: Vec::new(), density: None }
    }

    pub fn dirac(lag: LagInterval, loc: f64, weight: f64) -> Result<Self> {
        Self::zero(lag).with_atom(loc, weight)
    }

    /// `weight * delta_0`.
    pub fn dirac_at_zero(lag: LagInterval, weight: f64) -> Self {
        Self { lag, atoms: vec![(lag.steps(), weight)], density: None }
    }

    /// Adds an atom; off-node locations are rejected.
    pub fn with_atom(mut self, loc: f64, weight: f64) -> Result<Self> {
        let k = self.lag.index_of(loc).ok_or(Error::OffNodeAtom { loc })?;
        self.atoms.push((k, weight));
        Ok(self)
    }

    pub fn with_density(mut self, density: Vec<f64>) -> Result<Self> {
        if density.len() != self.lag.len() {
            return Err(invalid(format!("density needs {} samples, got {}", self.lag.len(), density.len())));
        }
        self.density = Some(density);
        Ok(self)
    }

    pub fn from_density(lag: LagInterval, density: Vec<f64>) -> Result<Self> {
        Self::zero(lag).with_density(density)
    }

    pub fn from_density_fn(lag: LagInterval, f: impl Fn(f64) -> f64) -> Self {
        let density = (0..lag.len()).map(|k| f(lag.node(k))).collect();
        Self { lag, atoms: Vec::new(), density: Some(density) }
    }

    pub fn lag(&self) -> &LagInterval {
        &self.lag
    }

    /// Atoms as `(location, weight)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|&(k, w)| (self.lag.node(k), w)).collect()
    }

    pub fn density(&self) -> Option<&[f64]> {
        self.density.as_deref()
    }

    /// Mass of the atom at `0`, i.e. `mu({0})`.
    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|(k, _)| *k == self.lag.steps()).map(|(_, w)| w).sum()
    }

    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(_, w)| w.abs()).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| self.lag.integrate(|k| d[k].abs()));
        atoms + dens
    }

    pub fn scale(&self, c: f64) -> SignedMeasure {
        Self {
            lag: self.lag,
            atoms: self.atoms.iter().map(|&(k, w)| (k, c * w)).collect(),
            density: self.density.as_ref().map(|d| d.iter().map(|x| c * x).collect()),
        }
    }

    pub fn add(&self, other: &SignedMeasure) -> Result<SignedMeasure> {
        self.lag.check(&other.lag)?;
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let density = match (&self.density, &other.density) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
        };
        Ok(Self { lag: self.lag, atoms, density })
    }

    /// `sum_j w_j f(a_j) + int density * f` for `f` given on lag nodes.
    pub(crate) fn pair_samples(&self, f: &[f64]) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(k, w)| w * f[k]).sum();
        let dens = self.density.as_ref().map_or(0.0, |d| self.lag.integrate(|k| d[k] * f[k]));
        atoms + dens
    }

    /// JSON `{"atoms":[{"loc":..,"weight":..}],"density":[..]}`.
    pub fn to_json(&self) -> String {
        let j = MeasureJson {
            atoms: self.atoms().into_iter().map(|(loc, weight)| AtomJson { loc, weight }).collect(),
            density: self.density.clone().unwrap_or_default(),
        };
        serde_json::to_string(&j).expect("measure serializes")
    }

    pub fn from_json(text: &str, lag: LagInterval) -> Result<Self> {
        let j: MeasureJson = serde_json::from_str(text)?;
        let mut m = SignedMeasure::zero(lag);
        for a in j.atoms {
            m = m.with_atom(a.loc, a.weight)?;
        }
        if !j.density.is_empty() {
            m = m.with_density(j.density)?;
        }
        Ok(m)
    }
}

/// `<mu, eta> = int eta dmu`.
pub fn pair_measure(mu: &SignedMeasure, eta: &WindowSegment) -> Result<f64> {
    mu.lag.check(&eta.lag)?;
    Ok(mu.pair_samples(&eta.samples))
}

/// `t -> int_0^t <Y_s, (X_{s+eps}(.) - X_s(.)) / eps> ds` as a left-endpoint sum.
///
/// `measure_at(i)` gives `Y_{t_i}`; every measure must live on the lag `tau`
/// and have finite total variation.
pub fn banach_forward_integral_eps<F>(measure_at: F, x: &Path, tau: f64, eps: f64) -> Result<Path>
where
    F: Fn(usize) -> SignedMeasure,
{
    let grid = *x.grid();
    let lag = LagInterval::on_grid(&grid, tau)?;
    let m = grid.node_multiple(eps)?;
    let n = grid.steps();
    let mut buf = vec![0.0; lag.len()];
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for j in 0..n {
        let mu = measure_at(j);
        mu.lag.check(&lag)?;
        let tv = mu.total_variation();
        if !tv.is_finite() {
            return Err(invalid(format!("integrand at node {j} has unbounded total variation")));
        }
        fill_increment(x, j, m, lag, &mut buf);
        acc += mu.pair_samples(&buf);
        values.push(acc / m as f64);
    }
    Ok(Path::from_values_unchecked(grid, values, format!("banach_fwd_eps({})", x.label())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_paths::{make_grid, sample, GaussianSpec};
    use crate::regularize::forward_integral_eps;

    fn bm(n: usize, seed: u64) -> Path {
        sample(&GaussianSpec::Brownian, &make_grid(1.0, n).unwrap(), seed).unwrap()
    }

    #[test]
    fn window_at_origin_is_constant() {
        let w = bm(64, 1);
        let seg = window_at(&w, 0.0, 0.25).unwrap();
        assert!(seg.samples().iter().all(|&v| v == w.initial()));
    }

    #[test]
    fn window_at_tau() {
        let w = bm(64, 2);
        let seg = window_at(&w, 0.25, 0.25).unwrap();
        assert_eq!(seg.samples()[0], w.initial());
        assert_eq!(seg.head(), w.values()[16]);
        let end = window_at(&w, 1.0, 0.25).unwrap();
        assert_eq!(end.head(), w.terminal());
        assert_eq!(end.samples().len(), 17);
    }

    #[test]
    fn window_off_node_time_interpolates() {
        let grid = make_grid(1.0, 8).unwrap();
        let p = Path::from_fn(grid, "t", |t| t).unwrap();
        let seg = window_at(&p, 0.3, 0.25).unwrap();
        assert!((seg.head() - 0.3).abs() < 1e-15);
        assert!((seg.samples()[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn window_rejects_bad_tau() {
        let w = bm(64, 1);
        assert!(window_at(&w, 0.5, 0.3).is_err());
        assert!(window_at(&w, 0.5, 2.0).is_err());
        assert!(window_at(&w, 0.5, 1.0).is_ok());
    }

    #[test]
    fn pairings() {
        let w = bm(64, 3);
        let lag = LagInterval::on_grid(w.grid(), 0.5).unwrap();
        let t = 0.75;
        let seg = window_at(&w, t, 0.5).unwrap();
        let d0 = SignedMeasure::dirac_at_zero(lag, 1.0);
        assert_eq!(pair_measure(&d0, &seg).unwrap(), w.eval_extended(t));
        let mu = SignedMeasure::dirac(lag, 0.0, 1.0).unwrap().with_atom(-0.25, 1.0).unwrap();
        let y = pair_measure(&mu, &seg).unwrap();
        assert_eq!(y, w.eval_extended(t) + w.eval_extended(t - 0.25));
        let c = WindowSegment::constant(lag, 3.0);
        let one = SignedMeasure::from_density_fn(lag, |_| 1.0);
        assert!((pair_measure(&one, &c).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn off_node_atoms_rejected() {
        let lag = LagInterval::new(8, 0.125).unwrap();
        assert_eq!(SignedMeasure::dirac(lag, -0.3, 1.0), Err(Error::OffNodeAtom { loc: -0.3 }));
        assert!(SignedMeasure::dirac(lag, 0.125, 1.0).is_err());
    }

    #[test]
    fn lag_mismatch() {
        let a = LagInterval::new(8, 0.125).unwrap();
        let b = LagInterval::new(4, 0.125).unwrap();
        let r = pair_measure(&SignedMeasure::dirac_at_zero(a, 1.0), &WindowSegment::constant(b, 1.0));
        assert!(matches!(r, Err(Error::LagMismatch(_))));
    }

    #[test]
    fn sup_norms() {
        let lag = LagInterval::new(16, 1.0 / 16.0).unwrap();
        assert_eq!(sup_norm(&WindowSegment::constant(lag, 0.0)), 0.0);
        assert_eq!(sup_norm(&WindowSegment::from_fn(lag, 0.0, |u| u)), 1.0);
        assert_eq!(sup_norm(&WindowSegment::constant(lag, -2.5)), 2.5);
    }

    #[test]
    fn json_roundtrip() {
        let lag = LagInterval::new(4, 0.25).unwrap();
        let mu = SignedMeasure::dirac(lag, -0.5, 2.0).unwrap().with_density(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = mu.to_json();
        assert!(s.starts_with("{\"atoms\":[{\"loc\":-0.5,\"weight\":2.0}],\"density\":["));
        assert_eq!(SignedMeasure::from_json(&s, lag).unwrap(), mu);
    }

    #[test]
    fn dirac_zero_integrand_reduces_to_real_forward_integral() {
        let w = bm(256, 5);
        let lag = LagInterval::on_grid(w.grid(), 0.25).unwrap();
        let eps = 4.0 / 256.0;
        let b = banach_forward_integral_eps(|_| SignedMeasure::dirac_at_zero(lag, 1.0), &w, 0.25, eps).unwrap();
        let one = Path::from_fn(*w.grid(), "1", |_| 1.0).unwrap();
        let f = forward_integral_eps(&one, &w, eps).unwrap();
        assert_eq!(b.values(), f.values());
    }

    #[test]
    fn shifted_dirac_reads_delayed_path() {
        let w = bm(256, 6);
        let lag = LagInterval::on_grid(w.grid(), 0.25).unwrap();
        let eps = 4.0 / 256.0;
        let a = 32;
        let b = banach_forward_integral_eps(
            |_| SignedMeasure::dirac(lag, -(a as f64) / 256.0, 1.0).unwrap(),
            &w,
            0.25,
            eps,
        )
        .unwrap();
        let one = Path::from_fn(*w.grid(), "1", |_| 1.0).unwrap();
        let f = forward_integral_eps(&one, &w.delayed(a), eps).unwrap();
        // past T - eps the delayed path is frozen at X_{T-a} while the window still reads X
        let m = 4;
        for (x, y) in b.values().iter().zip(f.values()).take(256 - m + 2) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_integrand_gives_zero() {
        let w = bm(64, 1);
        let lag = LagInterval::on_grid(w.grid(), 0.25).unwrap();
        let b = banach_forward_integral_eps(|_| SignedMeasure::zero(lag), &w, 0.25, 2.0 / 64.0).unwrap();
        assert!(b.values().iter().all(|&v| v == 0.0));
    }
}
