//! Replication of payoffs through the representation
//!
//! ```text
//! h = u(0, X_0(.)) + int_0^T D^{delta_0} u(t, X_t(.)) d^- X_t
//! ```
//!
//! for processes with `X_0 = 0` and `[X]_t = t`. For `h = f(X_T)` the value
//! functional reduces to `u(t, eta) = v(t, eta(0))` with `v` solving the
//! backward heat equation, evaluated here by Gauss-Hermite smoothing of `f`.
//! For payoffs of finitely many Wiener integrals on a zero quadratic variation
//! path the strategy is explicit and the initial capital is `f(0, ..., 0)`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use gauss_quad::hermite::GaussHermite;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::Functional;
use crate::grid_paths::{fmt17, parse_number, make_grid, GaussianSpec, Path, PathSource};
use crate::regularize::covariation_eps;
use crate::report::median;
use crate::window::WindowSegment;

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_NODES: usize = 64;
/// Default tolerance of the node-doubling stability check, relative to `max(|v|, 1)`.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-8;
/// Largest tolerated relative deviation of `[X]_T` from `T` before hedging is refused.
pub const QV_GATE_TOLERANCE: f64 = 0.10;

/// Payoffs selectable by name: `linear`, `square`, `cos`, `call:<strike>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "payoff", rename_all = "snake_case")]
pub enum NamedPayoff {
    Linear,
    Square,
    Cos,
    Call { strike: f64 },
}

impl NamedPayoff {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            NamedPayoff::Linear => x,
            NamedPayoff::Square => x * x,
            NamedPayoff::Cos => x.cos(),
            NamedPayoff::Call { strike } => (x - strike).max(0.0),
        }
    }

    /// `f'`; for the call, the right derivative.
    pub fn first(&self, x: f64) -> f64 {
        match self {
            NamedPayoff::Linear => 1.0,
            NamedPayoff::Square => 2.0 * x,
            NamedPayoff::Cos => -x.sin(),
            NamedPayoff::Call { strike } => {
                if x >= *strike {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `f''` where it is a function; `None` for the call (a Dirac mass at the strike).
    pub fn second(&self, x: f64) -> Option<f64> {
        match self {
            NamedPayoff::Linear => Some(0.0),
            NamedPayoff::Square => Some(2.0),
            NamedPayoff::Cos => Some(-x.cos()),
            NamedPayoff::Call { .. } => None,
        }
    }

    pub fn names() -> &'static str {
        "linear, square, cos, call:<strike>"
    }
}

impl fmt::Display for NamedPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedPayoff::Linear => write!(f, "linear"),
            NamedPayoff::Square => write!(f, "square"),
            NamedPayoff::Cos => write!(f, "cos"),
            NamedPayoff::Call { strike } => write!(f, "call:{strike}"),
        }
    }
}

impl FromStr for NamedPayoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "linear" | "x" => Ok(NamedPayoff::Linear),
            "square" | "x2" => Ok(NamedPayoff::Square),
            "cos" => Ok(NamedPayoff::Cos),
            _ => {
                let k = s
                    .strip_prefix("call:")
                    .or_else(|| s.strip_prefix("call(").and_then(|r| r.strip_suffix(')')))
                    .and_then(parse_number)
                    .ok_or_else(|| invalid(format!("unknown payoff '{s}' (expected {})", NamedPayoff::names())))?;
                Ok(NamedPayoff::Call { strike: k })
            }
        }
    }
}

/// A time function `phi` on `[0, T]`; `phi(s) = a + b s`, or `T - s` via [`TimeFunction::time_to_go`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFunction {
    pub a: f64,
    pub b: f64,
}

impl TimeFunction {
    pub fn constant(c: f64) -> Self {
        Self { a: c, b: 0.0 }
    }

    pub fn time_to_go(horizon: f64) -> Self {
        Self { a: horizon, b: -1.0 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.a + self.b * s
    }
}

/// Symmetric standard normal rule: `E g(G) ~ w0 g(0) + sum w (g(z) + g(-z))`.
#[derive(Debug)]
struct NormalRule {
    center: f64,
    pairs: Vec<(f64, f64)>,
}

impl NormalRule {
    fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mut s = if self.center != 0.0 { self.center * g(0.0) } else { 0.0 };
        for &(z, w) in &self.pairs {
            s += w * (g(z) + g(-z));
        }
        s
    }
}

static HERMITE: Lazy<Mutex<HashMap<usize, Arc<NormalRule>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Hermite nodes scaled to the standard normal law, folded onto `z > 0` so
/// odd integrands cancel exactly, with weights renormalized to total mass 1.
fn normal_rule(q: usize) -> Result<Arc<NormalRule>> {
    let mut cache = HERMITE.lock().expect("quadrature cache poisoned");
    if let Some(r) = cache.get(&q) {
        return Ok(r.clone());
    }
    let gh = GaussHermite::new(q).map_err(|e| invalid(format!("Gauss-Hermite rule with {q} nodes: {e}")))?;
    let mut nw: Vec<(f64, f64)> = gh.nodes().copied().zip(gh.weights().copied()).collect();
    nw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = q / 2;
    let mut pairs: Vec<(f64, f64)> = (0..half)
        .map(|i| {
            let (lo, hi) = (nw[i], nw[q - 1 - i]);
            (std::f64::consts::SQRT_2 * 0.5 * (hi.0 - lo.0), 0.5 * (hi.1 + lo.1))
        })
        .collect();
    let mut center = if q % 2 == 1 { nw[half].1 } else { 0.0 };
    let total = center + 2.0 * pairs.iter().map(|p| p.1).sum::<f64>();
    center /= total;
    pairs.iter_mut().for_each(|p| p.1 /= total);
    let rule = Arc::new(NormalRule { center, pairs });
    cache.insert(q, rule.clone());
    Ok(rule)
}

/// `v(t, x) = E f(x + sqrt(S(t)) G)` where `S(t) = int_t^T phi^2` (`S(t) = T - t` for `phi = 1`).
#[derive(Debug, Clone)]
pub struct ValueFunction {
    pub payoff: NamedPayoff,
    pub horizon: f64,
    pub nodes: usize,
    pub phi: TimeFunction,
    rule: Arc<NormalRule>,
}

impl ValueFunction {
    /// Remaining variance `int_t^T phi(s)^2 ds`.
    pub fn remaining_variance(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return 0.0;
        }
        let TimeFunction { a, b } = self.phi;
        if b == 0.0 {
            return a * a * (self.horizon - t);
        }
        let cube = |s: f64| (a + b * s).powi(3) / (3.0 * b);
        (cube(self.horizon) - cube(t)).max(0.0)
    }

    /// `phi(t)^2`, the diffusion coefficient of the backward equation.
    pub fn local_variance(&self, t: f64) -> f64 {
        self.phi.eval(t).powi(2)
    }

    fn expect(&self, rule: &NormalRule, t: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let sd = self.remaining_variance(t).sqrt();
        rule.expect(|z| g(z, sd))
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.value_with(&self.rule, t, x)
    }

    fn value_with(&self, rule: &NormalRule, t: f64, x: f64) -> f64 {
        if t >= self.horizon {
            return self.payoff.value(x);
        }
        self.expect(rule, t, |z, sd| self.payoff.value(x + sd * z))
    }

    /// `d_x v`.
    pub fn dx(&self, t: f64, x: f64) -> f64 {
        if t >= self.horizon {
            return self.payoff.first(x);
        }
        match self.payoff {
            NamedPayoff::Call { .. } => {
                // differentiate the Gaussian kernel instead of the kinked payoff
                let sd = self.remaining_variance(t).sqrt();
                self.expect(&self.rule, t, |z, sd| self.payoff.value(x + sd * z) * z) / sd
            }
            _ => self.expect(&self.rule, t, |z, sd| self.payoff.first(x + sd * z)),
        }
    }

    /// `d_xx v`.
    pub fn dxx(&self, t: f64, x: f64) -> f64 {
        if t >= self.horizon {
            return self.payoff.second(x).unwrap_or(0.0);
        }
        match self.payoff {
            NamedPayoff::Call { .. } => {
                let s2 = self.remaining_variance(t);
                self.expect(&self.rule, t, |z, sd| self.payoff.value(x + sd * z) * (z * z - 1.0)) / s2
            }
            _ => self.expect(&self.rule, t, |z, sd| self.payoff.second(x + sd * z).unwrap_or(0.0)),
        }
    }

    /// `max |v_Q - v_{2Q}| / max(|v_{2Q}|, 1)` over the probes.
    pub fn stability(&self, probes: &[(f64, f64)]) -> Result<f64> {
        let fine = normal_rule(2 * self.nodes)?;
        Ok(probes
            .iter()
            .map(|&(t, x)| {
                let a = self.value(t, x);
                let b = self.value_with(&fine, t, x);
                (a - b).abs() / b.abs().max(1.0)
            })
            .fold(0.0, f64::max))
    }
}

/// Regular probe lattice: `nt` times in `[0, T)` and `nx` points in `[-range, range]`.
pub fn probe_lattice(horizon: f64, nt: usize, nx: usize, range: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nt * nx);
    for i in 0..nt {
        let t = horizon * i as f64 / nt as f64;
        for j in 0..nx {
            let x = if nx == 1 { 0.0 } else { -range + 2.0 * range * j as f64 / (nx - 1) as f64 };
            out.push((t, x));
        }
    }
    out
}

fn build_value(payoff: NamedPayoff, horizon: f64, nodes: usize, phi: TimeFunction, tol: f64) -> Result<ValueFunction> {
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    if nodes < 2 {
        return Err(invalid("at least two quadrature nodes are needed"));
    }
    let v = ValueFunction { payoff, horizon, nodes, phi, rule: normal_rule(nodes)? };
    let dev = v.stability(&probe_lattice(horizon, 20, 20, 3.0))?;
    if dev > tol {
        return Err(Error::QuadratureNonConvergence(format!(
            "{payoff}: doubling {nodes} nodes moves the value by {dev:.3e} (tolerance {tol:.1e})"
        )));
    }
    Ok(v)
}

/// Value function of `h = f(X_T)` with the default node count and stability tolerance.
pub fn solve_vanilla(payoff: NamedPayoff, horizon: f64) -> Result<ValueFunction> {
    solve_vanilla_with(payoff, horizon, DEFAULT_NODES, DEFAULT_STABILITY_TOL)
}

pub fn solve_vanilla_with(payoff: NamedPayoff, horizon: f64, nodes: usize, tol: f64) -> Result<ValueFunction> {
    build_value(payoff, horizon, nodes, TimeFunction::constant(1.0), tol)
}

/// `max |d_t v + 1/2 phi(t)^2 d_xx v|` over the probes, with `d_t v` by central differences.
pub fn pde_residual(v: &ValueFunction, probes: &[(f64, f64)]) -> f64 {
    probes
        .iter()
        .map(|&(t, x)| {
            let h = 1e-4 * v.horizon;
            let dt = (v.value(t + h, x) - v.value(t - h, x)) / (2.0 * h);
            (dt + 0.5 * v.local_variance(t) * v.dxx(t, x)).abs()
        })
        .fold(0.0, f64::max)
}

/// How `[X]_t = t` is established before hedging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QvGate {
    /// `covariation_eps(X, X, eps)` at `T` within 10% of `T`.
    Estimated { eps: f64 },
    /// [`Estimated`](Self::Estimated) at the path's own mesh.
    EstimatedMesh,
    /// The law has `[X]_t = t` exactly.
    ByConstruction(GaussianSpec),
    /// Skip the check.
    Override,
}

impl QvGate {
    /// Estimated gate at `eps = dt` (realized variance), where the estimator's
    /// spread `sqrt(2T dt)` is well inside the 10% band.
    pub fn realized() -> Self {
        QvGate::EstimatedMesh
    }

    fn certify(&self, x: &Path) -> Result<()> {
        let horizon = x.grid().horizon();
        match self {
            QvGate::Override => Ok(()),
            QvGate::Estimated { .. } | QvGate::EstimatedMesh => {
                let eps = match self {
                    QvGate::Estimated { eps } => *eps,
                    _ => x.grid().mesh(),
                };
                let est = covariation_eps(x, x, eps)?.terminal();
                if (est - horizon).abs() > QV_GATE_TOLERANCE * horizon {
                    Err(Error::QvCertification { estimated: est, expected: horizon })
                } else {
                    Ok(())
                }
            }
            QvGate::ByConstruction(spec) => match spec.known_qv_rate() {
                Some(r) if (r - 1.0).abs() <= QV_GATE_TOLERANCE => Ok(()),
                r => Err(Error::QvCertification { estimated: r.unwrap_or(f64::NAN) * horizon, expected: horizon }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeResult {
    pub h0: f64,
    /// `xi` at nodes `t_0 .. t_{N-1}`.
    pub strategy: Vec<f64>,
    /// `sum_i xi_{t_i} (X_{t_{i+1}} - X_{t_i})`.
    pub integral: f64,
    pub payoff: f64,
    /// `|payoff - h0 - integral|`.
    pub error: f64,
    pub steps: usize,
    pub horizon: f64,
    /// Step of the left-point forward sum.
    pub eps: f64,
}

impl HedgeResult {
    fn from_parts(h0: f64, strategy: Vec<f64>, x: &Path, payoff: f64) -> Self {
        let v = x.values();
        let integral: f64 = strategy.iter().enumerate().map(|(i, xi)| xi * (v[i + 1] - v[i])).sum();
        let grid = x.grid();
        Self {
            h0,
            strategy,
            integral,
            payoff,
            error: (payoff - h0 - integral).abs(),
            steps: grid.steps(),
            horizon: grid.horizon(),
            eps: grid.mesh(),
        }
    }
}

/// Hedges `f(X_T)` with `xi_t = d_x v(t, X_t)` and initial capital `v(0, 0)`.
pub fn hedge_vanilla(v: &ValueFunction, x: &Path, gate: &QvGate) -> Result<HedgeResult> {
    if x.initial() != 0.0 {
        return Err(invalid(format!("the path must start at 0, got {}", x.initial())));
    }
    if (x.grid().horizon() - v.horizon).abs() > 1e-12 * v.horizon {
        return Err(invalid("path horizon differs from the value function horizon"));
    }
    gate.certify(x)?;
    let grid = x.grid();
    let strategy = (0..grid.steps()).map(|i| v.dx(grid.node(i), x.values()[i])).collect();
    Ok(HedgeResult::from_parts(v.value(0.0, 0.0), strategy, x, v.payoff.value(x.terminal())))
}

/// A smooth function of `n` variables with its gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiPayoff {
    /// `f(y) = g(y_1)` for a named scalar payoff `g`.
    Scalar(NamedPayoff),
    /// `f(y) = sum_i y_i^2`.
    SumOfSquares,
    /// `f(y) = prod_i y_i`.
    Product,
}

impl MultiPayoff {
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            MultiPayoff::Scalar(g) => g.value(y[0]),
            MultiPayoff::SumOfSquares => y.iter().map(|v| v * v).sum(),
            MultiPayoff::Product => y.iter().product(),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            MultiPayoff::Scalar(g) => {
                let mut out = vec![0.0; y.len()];
                out[0] = g.first(y[0]);
                out
            }
            MultiPayoff::SumOfSquares => y.iter().map(|v| 2.0 * v).collect(),
            MultiPayoff::Product => {
                (0..y.len()).map(|i| y.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).product()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerMode {
    ZeroQv,
    /// `[X]_t = t`, one Wiener integral only.
    BrownianQv,
}

/// Running Wiener integrals `Y^i_{t_k} = sum_{j<k} phi^i(t_j) (X_{t_{j+1}} - X_{t_j})`.
pub fn running_wiener_integrals(phis: &[TimeFunction], x: &Path) -> Vec<Vec<f64>> {
    let grid = x.grid();
    let v = x.values();
    phis.iter()
        .map(|phi| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(grid.steps() + 1);
            out.push(0.0);
            for j in 0..grid.steps() {
                acc += phi.eval(grid.node(j)) * (v[j + 1] - v[j]);
                out.push(acc);
            }
            out
        })
        .collect()
}

/// Hedges `h = f(Y^1_T, ..., Y^n_T)` for Wiener integrals `Y^i = int phi^i d^- X`.
///
/// In zero-QV mode `H_0 = f(0)` and `xi_t = sum_i d_i f(Y_t) phi^i(t)`. In
/// Brownian-QV mode (`n = 1`, scalar payoffs only) `H_0 = v(0, 0)` and
/// `xi_t = d_y v(t, Y_t) phi(t)` with remaining variance `int_t^T phi^2`.
pub fn hedge_wiener_functional(f: MultiPayoff, phis: &[TimeFunction], x: &Path, mode: WienerMode) -> Result<HedgeResult> {
    if phis.is_empty() {
        return Err(invalid("at least one integrand is needed"));
    }
    if x.initial() != 0.0 {
        return Err(invalid(format!("the path must start at 0, got {}", x.initial())));
    }
    let ys = running_wiener_integrals(phis, x);
    let grid = x.grid();
    let n = grid.steps();
    let y_at = |k: usize| ys.iter().map(|y| y[k]).collect::<Vec<f64>>();
    let payoff = f.value(&y_at(n));
    match mode {
        WienerMode::ZeroQv => {
            // the representation has no second-order term only when [X] = 0
            let rv = covariation_eps(x, x, grid.mesh())?.terminal();
            if rv > QV_GATE_TOLERANCE * grid.horizon() {
                return Err(Error::QvCertification { estimated: rv, expected: 0.0 });
            }
            let h0 = f.value(&vec![0.0; phis.len()]);
            let strategy = (0..n)
                .map(|k| {
                    let t = grid.node(k);
                    f.gradient(&y_at(k)).iter().zip(phis).map(|(g, phi)| g * phi.eval(t)).sum()
                })
                .collect();
            Ok(HedgeResult::from_parts(h0, strategy, x, payoff))
        }
        WienerMode::BrownianQv => {
            let (MultiPayoff::Scalar(g), [phi]) = (f, phis) else {
                return Err(Error::Unsupported("Brownian-QV mode supports one integral of a scalar payoff".into()));
            };
            let v = build_value(g, grid.horizon(), DEFAULT_NODES, *phi, f64::INFINITY)?;
            let strategy = (0..n).map(|k| v.dx(grid.node(k), ys[0][k]) * phi.eval(grid.node(k))).collect();
            Ok(HedgeResult::from_parts(v.value(0.0, 0.0), strategy, x, payoff))
        }
    }
}

/// Left side of the window PDE `d_t u + int_{]-t,0]} D^ac u d eta + 1/2 D^2 u({0,0})` for a
/// user-supplied `u` at `(t, eta)`.
///
/// The absolutely continuous part of `Du` (the density of [`Functional::d1`]) enters
/// through its integration-by-parts form
/// `D^ac u(0) eta(0) - D^ac u(-t) eta(-t) - int eta dD^ac u`, a Stieltjes sum on lag
/// nodes over `]-min(t, tau), 0]`. This only checks a candidate; it does not solve.
pub fn system_residual(u: &dyn Functional, t: f64, eta: &WindowSegment) -> f64 {
    let lag = *eta.lag();
    let e = eta.samples();
    let n = lag.steps();
    let du = u.d1(eta);
    let ac = match du.density() {
        Some(rho) => {
            let first = n - ((t.min(lag.tau()) / lag.mesh()).round() as usize).min(n);
            let stieltjes: f64 = (first..n).map(|k| 0.5 * (e[k] + e[k + 1]) * (rho[k + 1] - rho[k])).sum();
            rho[n] * e[n] - rho[first] * e[first] - stieltjes
        }
        None => 0.0,
    };
    u.time_derivative(t, eta) + ac + 0.5 * u.d2(eta).atom_at_origin()
}

/// One row of a replication study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replica: usize,
    pub steps: usize,
    pub h0: f64,
    pub payoff: f64,
    pub integral: f64,
    pub error: f64,
}

/// Replication errors of a payoff across replicas and grid sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStudy {
    pub rows: Vec<ReplicationRow>,
}

impl ReplicationStudy {
    /// Median error for grid size `steps`.
    pub fn median_error(&self, steps: usize) -> f64 {
        let e: Vec<f64> = self.rows.iter().filter(|r| r.steps == steps).map(|r| r.error).collect();
        median(&e)
    }

    /// CSV with header `replica,N,H0,payoff,integral,error`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replica,N,H0,payoff,integral,error")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.replica, r.steps, fmt17(r.h0), fmt17(r.payoff), fmt17(r.integral), fmt17(r.error))?;
        }
        Ok(())
    }
}

/// What is hedged in a [`replication_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeTask {
    Vanilla { payoff: NamedPayoff, gate: QvGate },
    Wiener { payoff: MultiPayoff, phis: Vec<TimeFunction>, mode: WienerMode },
}

/// Hedges `replicas` paths of `spec` on `T` with each grid size in `steps`;
/// replica `r` on every grid uses seed `base_seed + r`.
pub fn replication_study(
    task: &HedgeTask,
    spec: &GaussianSpec,
    horizon: f64,
    steps: &[usize],
    replicas: usize,
    base_seed: u64,
) -> Result<ReplicationStudy> {
    replication_study_with(task, spec, horizon, steps, replicas, base_seed, DEFAULT_STABILITY_TOL)
}

/// [`replication_study`] with an explicit Q-doubling tolerance for the vanilla value function.
pub fn replication_study_with(
    task: &HedgeTask,
    spec: &GaussianSpec,
    horizon: f64,
    steps: &[usize],
    replicas: usize,
    base_seed: u64,
    stability_tol: f64,
) -> Result<ReplicationStudy> {
    let value = match task {
        HedgeTask::Vanilla { payoff, .. } => Some(solve_vanilla_with(*payoff, horizon, DEFAULT_NODES, stability_tol)?),
        HedgeTask::Wiener { .. } => None,
    };
    let mut rows = Vec::with_capacity(steps.len() * replicas);
    for &n in steps {
        let source = PathSource::new(spec.clone(), make_grid(horizon, n)?, base_seed)?;
        let chunk: Vec<ReplicationRow> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let x = source.replica(r)?;
                let res = match task {
                    HedgeTask::Vanilla { gate, .. } => hedge_vanilla(value.as_ref().unwrap(), &x, gate)?,
                    HedgeTask::Wiener { payoff, phis, mode } => hedge_wiener_functional(*payoff, phis, &x, *mode)?,
                };
                Ok(ReplicationRow {
                    replica: r,
                    steps: n,
                    h0: res.h0,
                    payoff: res.payoff,
                    integral: res.integral,
                    error: res.error,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(chunk);
    }
    Ok(ReplicationStudy { rows })
}
