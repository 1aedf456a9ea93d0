//! Chi-subspace elements and chi-quadratic variations of window processes.
//!
//! For `phi` in a Chi-subspace the approximating functional is
//!
//! ```text
//! [X]^eps(phi)(t) = int_0^t <phi, (X_{s+eps}(.) - X_s(.))^{(x)2}> / eps ds
//! ```
//!
//! and for a real finite quadratic variation process the limits are known in
//! closed form: `lambda [X]_t` on the Dirac-at-origin blocks, `0` on square
//! integrable kernels, and `int_0^{t ^ tau} g(-x) [X]_{t-x} dx` on diagonal
//! measures `g(x) delta_y(dx) dy`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid_paths::{dot, Path, PathSource};
use crate::regularize::{covariation_eps, EpsilonLadder};
use crate::report::{ConvergenceReport, ErrorStatistic};
use crate::rng::replica_seed;
use crate::window::{fill_increment, LagInterval, WindowSegment};

/// A kernel on `[-tau, 0]^2` sampled on the lag-node lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// Row-major `len x len` lattice values.
    Dense { len: usize, values: Vec<f64> },
    /// `sum_r a_r(x) b_r(y)`; pairing costs `O(rank * len)` instead of `O(len^2)`.
    Separable { factors: Vec<(Vec<f64>, Vec<f64>)> },
}

impl Kernel {
    pub fn zero() -> Self {
        Kernel::Separable { factors: Vec::new() }
    }

    pub fn constant(lag: &LagInterval, c: f64) -> Self {
        Kernel::Separable { factors: vec![(vec![c; lag.len()], vec![1.0; lag.len()])] }
    }

    pub fn from_fn(lag: &LagInterval, f: impl Fn(f64, f64) -> f64) -> Self {
        let len = lag.len();
        let mut values = Vec::with_capacity(len * len);
        for i in 0..len {
            for j in 0..len {
                values.push(f(lag.node(i), lag.node(j)));
            }
        }
        Kernel::Dense { len, values }
    }

    pub fn separable(lag: &LagInterval, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> Self {
        let av = (0..lag.len()).map(|k| a(lag.node(k))).collect();
        let bv = (0..lag.len()).map(|k| b(lag.node(k))).collect();
        Kernel::Separable { factors: vec![(av, bv)] }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let ok = match self {
            Kernel::Dense { len: l, values } => *l == len && values.len() == len * len,
            Kernel::Separable { factors } => factors.iter().all(|(a, b)| a.len() == len && b.len() == len),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::LagMismatch("kernel lattice does not match the window".into()))
        }
    }

    fn pair(&self, lag: &LagInterval, eta: &[f64]) -> f64 {
        match self {
            Kernel::Dense { len, values } => {
                let weighted: Vec<f64> = (0..*len).map(|k| lag.weight(k) * eta[k]).collect();
                (0..*len).map(|i| weighted[i] * dot(&values[i * len..(i + 1) * len], &weighted)).sum()
            }
            Kernel::Separable { factors } => factors
                .iter()
                .map(|(a, b)| lag.integrate(|k| a[k] * eta[k]) * lag.integrate(|k| b[k] * eta[k]))
                .sum(),
        }
    }

    /// Lattice `L^2` norm with trapezoidal weights.
    pub fn l2_norm(&self, lag: &LagInterval) -> f64 {
        match self {
            Kernel::Dense { len, values } => {
                let mut s = 0.0;
                for i in 0..*len {
                    for j in 0..*len {
                        s += lag.weight(i) * lag.weight(j) * values[i * len + j].powi(2);
                    }
                }
                s.sqrt()
            }
            Kernel::Separable { factors } => {
                let ip = |u: &[f64], v: &[f64]| lag.integrate(|k| u[k] * v[k]);
                let mut s = 0.0;
                for (a1, b1) in factors {
                    for (a2, b2) in factors {
                        s += ip(a1, a2) * ip(b1, b2);
                    }
                }
                s.max(0.0).sqrt()
            }
        }
    }

    pub fn scale(&self, c: f64) -> Kernel {
        match self {
            Kernel::Dense { len, values } => Kernel::Dense { len: *len, values: values.iter().map(|v| c * v).collect() },
            Kernel::Separable { factors } => Kernel::Separable {
                factors: factors.iter().map(|(a, b)| (a.iter().map(|v| c * v).collect(), b.clone())).collect(),
            },
        }
    }
}

/// Which Chi-subspace an element (or a second derivative) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiTag {
    /// Multiples of `delta_0 (x) delta_0`.
    Atomic00,
    L2,
    Diag,
    Chi0,
}

/// Element of a Chi-subspace of the dual of the projective tensor square of `C([-tau, 0])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ChiElement {
    /// `lambda delta_0(dx) delta_0(dy)`.
    Atomic00 { lambda: f64 },
    L2Kernel { kernel: Kernel },
    /// `g(x) delta_y(dx) dy`, `g` sampled on lag nodes.
    DiagKernel { g: Vec<f64> },
    /// `lambda delta_0 (x) delta_0 + delta_0 (x) left dy + right dx (x) delta_0 + bulk`.
    Chi0 { lambda: f64, left: Vec<f64>, right: Vec<f64>, bulk: Kernel },
}

impl ChiElement {
    pub fn atomic(lambda: f64) -> Self {
        ChiElement::Atomic00 { lambda }
    }

    pub fn l2(kernel: Kernel) -> Self {
        ChiElement::L2Kernel { kernel }
    }

    pub fn diag(lag: &LagInterval, g: impl Fn(f64) -> f64) -> Self {
        ChiElement::DiagKernel { g: (0..lag.len()).map(|k| g(lag.node(k))).collect() }
    }

    pub fn chi0(lambda: f64, left: Vec<f64>, right: Vec<f64>, bulk: Kernel) -> Self {
        ChiElement::Chi0 { lambda, left, right, bulk }
    }

    pub fn tag(&self) -> ChiTag {
        match self {
            ChiElement::Atomic00 { .. } => ChiTag::Atomic00,
            ChiElement::L2Kernel { .. } => ChiTag::L2,
            ChiElement::DiagKernel { .. } => ChiTag::Diag,
            ChiElement::Chi0 { .. } => ChiTag::Chi0,
        }
    }

    /// Mass at `(0, 0)`.
    pub fn atom_at_origin(&self) -> f64 {
        match self {
            ChiElement::Atomic00 { lambda } | ChiElement::Chi0 { lambda, .. } => *lambda,
            _ => 0.0,
        }
    }

    /// Embeds an `Atomic00` or `L2Kernel` element into `Chi0`; `Chi0` is returned as is.
    pub fn to_chi0(&self, lag: &LagInterval) -> Result<ChiElement> {
        let zeros = || vec![0.0; lag.len()];
        match self {
            ChiElement::Atomic00 { lambda } => Ok(ChiElement::chi0(*lambda, zeros(), zeros(), Kernel::zero())),
            ChiElement::L2Kernel { kernel } => Ok(ChiElement::chi0(0.0, zeros(), zeros(), kernel.clone())),
            ChiElement::Chi0 { .. } => Ok(self.clone()),
            ChiElement::DiagKernel { .. } => Err(Error::Unsupported("diagonal measures are not in chi0".into())),
        }
    }

    pub fn scale(&self, c: f64) -> ChiElement {
        match self {
            ChiElement::Atomic00 { lambda } => ChiElement::atomic(c * lambda),
            ChiElement::L2Kernel { kernel } => ChiElement::l2(kernel.scale(c)),
            ChiElement::DiagKernel { g } => ChiElement::DiagKernel { g: g.iter().map(|v| c * v).collect() },
            ChiElement::Chi0 { lambda, left, right, bulk } => ChiElement::chi0(
                c * lambda,
                left.iter().map(|v| c * v).collect(),
                right.iter().map(|v| c * v).collect(),
                bulk.scale(c),
            ),
        }
    }

    /// Norm of the element in its own Chi-subspace.
    pub fn norm(&self, lag: &LagInterval) -> f64 {
        let l2 = |v: &[f64]| lag.integrate(|k| v[k] * v[k]).sqrt();
        match self {
            ChiElement::Atomic00 { lambda } => lambda.abs(),
            ChiElement::L2Kernel { kernel } => kernel.l2_norm(lag),
            ChiElement::DiagKernel { g } => g.iter().fold(0.0, |m, v| m.max(v.abs())),
            ChiElement::Chi0 { lambda, left, right, bulk } => {
                (lambda * lambda + l2(left).powi(2) + l2(right).powi(2) + bulk.l2_norm(lag).powi(2)).sqrt()
            }
        }
    }

    /// `c` with `|<phi, eta (x) eta>| <= c ||phi||_chi ||eta||_inf^2`: 1 for `Atomic00`,
    /// `tau` for `L2Kernel` and `DiagKernel`, `1 + tau` for `Chi0` (Cauchy-Schwarz over the four blocks).
    pub fn embedding_constant(&self, lag: &LagInterval) -> f64 {
        match self {
            ChiElement::Atomic00 { .. } => 1.0,
            ChiElement::L2Kernel { .. } | ChiElement::DiagKernel { .. } => lag.tau(),
            ChiElement::Chi0 { .. } => 1.0 + lag.tau(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        let bad = || Error::LagMismatch(format!("element sampled on a different lattice than {len} lag nodes"));
        match self {
            ChiElement::Atomic00 { .. } => Ok(()),
            ChiElement::L2Kernel { kernel } => kernel.check_len(len),
            ChiElement::DiagKernel { g } => (g.len() == len).then_some(()).ok_or_else(bad),
            ChiElement::Chi0 { left, right, bulk, .. } => {
                if left.len() != len || right.len() != len {
                    return Err(bad());
                }
                bulk.check_len(len)
            }
        }
    }

    /// `<phi, eta (x) eta>` for `eta` sampled on the lag nodes (unchecked lengths).
    pub(crate) fn pair_samples(&self, lag: &LagInterval, eta: &[f64]) -> f64 {
        let head = eta[eta.len() - 1];
        match self {
            ChiElement::Atomic00 { lambda } => lambda * head * head,
            ChiElement::L2Kernel { kernel } => kernel.pair(lag, eta),
            ChiElement::DiagKernel { g } => lag.integrate(|k| g[k] * eta[k] * eta[k]),
            ChiElement::Chi0 { lambda, left, right, bulk } => {
                let cross = lag.integrate(|k| (left[k] + right[k]) * eta[k]);
                lambda * head * head + head * cross + bulk.pair(lag, eta)
            }
        }
    }
}

/// `<phi, eta (x) eta>`.
pub fn pair_chi(phi: &ChiElement, eta: &WindowSegment) -> Result<f64> {
    phi.check_len(eta.samples().len())?;
    Ok(phi.pair_samples(eta.lag(), eta.samples()))
}

fn window_setup(x: &Path, tau: f64, eps: f64) -> Result<(LagInterval, usize)> {
    let lag = LagInterval::on_grid(x.grid(), tau)?;
    let m = x.grid().node_multiple(eps)?;
    if eps >= tau {
        return Err(invalid(format!("epsilon {eps} must be smaller than tau {tau}")));
    }
    Ok((lag, m))
}

/// `[X]^eps(phi)` as a path, together with `int_0^T |<phi, Delta (x) Delta>| / eps ds`.
fn chi_qv_eps_with_abs(x: &Path, lag: LagInterval, m: usize, phi: &ChiElement) -> (Path, f64) {
    let n = x.grid().steps();
    let mut buf = vec![0.0; lag.len()];
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let (mut acc, mut abs_acc) = (0.0, 0.0);
    for j in 0..n {
        fill_increment(x, j, m, lag, &mut buf);
        let v = phi.pair_samples(&lag, &buf);
        acc += v;
        abs_acc += v.abs();
        values.push(acc / m as f64);
    }
    let path = Path::from_values_unchecked(*x.grid(), values, format!("chi_qv_eps({})", x.label()));
    (path, abs_acc / m as f64)
}

/// `t -> int_0^t <phi, (X_{s+eps}(.) - X_s(.))^{(x)2}> / eps ds`.
pub fn chi_qv_eps(x: &Path, tau: f64, phi: &ChiElement, eps: f64) -> Result<Path> {
    let (lag, m) = window_setup(x, tau, eps)?;
    phi.check_len(lag.len())?;
    Ok(chi_qv_eps_with_abs(x, lag, m, phi).0)
}

/// Trapezoidal quadrature of `int_0^{t ^ tau} g(-x) [X]_{t-x} dx` with the path mesh
/// (or finer when `t ^ tau` is shorter than one step); `[X]` is read through the
/// constant extension, so it vanishes before time 0 when `qv` starts at 0.
pub fn diag_reference(g: impl Fn(f64) -> f64, qv: &Path, t: f64, tau: f64) -> f64 {
    let upper = t.min(tau);
    if upper <= 0.0 {
        return 0.0;
    }
    let n = (upper / qv.grid().mesh()).round().max(1.0) as usize;
    let h = upper / n as f64;
    let f = |k: usize| {
        let x = k as f64 * h;
        g(-x) * qv.eval_extended(t - x)
    };
    let inner: f64 = (1..n).map(f).sum();
    h * (inner + 0.5 * (f(0) + f(n)))
}

/// Diagonal reference at grid node `i`, trapezoidal with the path mesh.
pub(crate) fn diag_reference_at(g: &[f64], qv: &[f64], lag: &LagInterval, i: usize) -> f64 {
    let steps = lag.steps();
    // x = k dt, g(-x) is lag node steps - k; [X]_{t_i - x} is node i - k.
    let kmax = i.min(steps);
    if kmax == 0 {
        return 0.0;
    }
    let f = |k: usize| g[steps - k] * qv[i - k];
    let inner: f64 = (1..kmax).map(f).sum();
    lag.mesh() * (inner + 0.5 * (f(0) + f(kmax)))
}

/// Reference path of the diagonal chi-QV for a `DiagKernel` sampled on `lag`.
pub fn diag_reference_path(g: &[f64], qv: &Path, lag: &LagInterval) -> Result<Path> {
    if g.len() != lag.len() {
        return Err(Error::LagMismatch("g sampled on a different lattice".into()));
    }
    let grid = *qv.grid();
    let values = (0..=grid.steps()).map(|i| diag_reference_at(g, qv.values(), lag, i)).collect();
    Ok(Path::from_values_unchecked(grid, values, "diag_reference"))
}

/// `t -> lambda [X]_t`: only the atomic block of a chi0 element contributes.
pub fn chi0_reference(phi: &ChiElement, qv: &Path) -> Result<Path> {
    match phi {
        ChiElement::Chi0 { lambda, .. } => Ok(qv.scale(*lambda).with_label("chi0_reference")),
        _ => Err(invalid("chi0_reference needs a Chi0 element")),
    }
}

/// Closed-form chi-QV reference of `phi` for a process with `[X] = qv`.
pub fn closed_form_reference(phi: &ChiElement, qv: &Path, lag: &LagInterval) -> Result<Path> {
    match phi {
        ChiElement::Atomic00 { lambda } => Ok(qv.scale(*lambda).with_label("atomic_reference")),
        ChiElement::L2Kernel { .. } => Ok(Path::zeros(*qv.grid(), "zero")),
        ChiElement::DiagKernel { g } => diag_reference_path(g, qv, lag),
        ChiElement::Chi0 { .. } => chi0_reference(phi, qv),
    }
}

/// `sum_j dt * ||X_{t_j + eps}(.) - X_{t_j}(.)||_inf^2 / eps` over `[0, T]`.
pub fn global_norm_integral(x: &Path, tau: f64, eps: f64) -> Result<f64> {
    let (lag, m) = window_setup(x, tau, eps)?;
    let n = x.grid().steps();
    let steps = lag.steps() as isize;
    let m = m as isize;
    // Sliding maximum of |X_{r+m} - X_r| over r in [j - steps, j].
    let incr = |r: isize| (x.at(r + m) - x.at(r)).abs();
    let mut deque: VecDeque<(isize, f64)> = VecDeque::new();
    let push = |dq: &mut VecDeque<(isize, f64)>, r: isize| {
        let v = incr(r);
        while dq.back().is_some_and(|&(_, b)| b <= v) {
            dq.pop_back();
        }
        dq.push_back((r, v));
    };
    for r in -steps..0 {
        push(&mut deque, r);
    }
    let mut acc = 0.0;
    for j in 0..n as isize {
        push(&mut deque, j);
        while deque.front().is_some_and(|&(r, _)| r < j - steps) {
            deque.pop_front();
        }
        let sup = deque.front().map_or(0.0, |&(_, v)| v);
        acc += sup * sup;
    }
    Ok(acc / m as f64)
}

/// How the suite obtained its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Closed form from the process's known quadratic variation rate.
    ClosedForm { qv_rate: f64 },
    /// Diagonal reference built from each replica's estimated `[X]` at the smallest epsilon.
    EstimatedQv,
    Absent,
}

/// Falsifiable stand-in for the uniform bound on the total variation of `[X]^eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Surrogate {
    /// Per replica, `max` over the ladder of `int_0^T |<phi, Delta (x) Delta>| / eps ds`.
    pub per_replica: Vec<f64>,
    pub median: f64,
    pub max: f64,
    /// `max < 10 * median`.
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiQvResult {
    pub phi: ChiElement,
    /// Estimator paths of replica 0, one per ladder epsilon.
    pub estimates: Vec<Path>,
    /// Deterministic reference path when available in closed form.
    pub reference: Option<Path>,
    pub reference_kind: ReferenceKind,
    pub report: ConvergenceReport,
    pub h1: H1Surrogate,
}

impl ChiQvResult {
    pub fn reference_label(&self) -> String {
        match &self.reference_kind {
            ReferenceKind::ClosedForm { qv_rate } => format!("closed_form(rate={qv_rate})"),
            ReferenceKind::EstimatedQv => "estimated_qv".into(),
            ReferenceKind::Absent => "absent".into(),
        }
    }
}

/// Runs `[X]^eps(phi)` along the ladder for every replica of `source` and compares
/// with the matching closed-form chi-QV.
pub fn chi_qv_suite(
    source: &PathSource,
    tau: f64,
    phi: &ChiElement,
    ladder: &EpsilonLadder,
    tolerance: f64,
) -> Result<ChiQvResult> {
    let grid = source.grid;
    let lag = LagInterval::on_grid(&grid, tau)?;
    ladder.check_below(tau)?;
    phi.check_len(lag.len())?;
    let multiples = ladder.multiples().to_vec();

    let kind = match (phi, source.spec.known_qv_rate()) {
        (_, Some(rate)) => ReferenceKind::ClosedForm { qv_rate: rate },
        (ChiElement::DiagKernel { .. }, None) => ReferenceKind::EstimatedQv,
        (_, None) => ReferenceKind::Absent,
    };
    let reference = match &kind {
        ReferenceKind::ClosedForm { qv_rate } => {
            let qv = Path::from_fn(grid, "qv", |t| qv_rate * t)?;
            Some(closed_form_reference(phi, &qv, &lag)?)
        }
        _ => None,
    };

    let smallest = ladder.smallest();
    let rows: Vec<(Vec<f64>, f64, Option<Vec<Path>>)> = (0..ladder.replicas())
        .into_par_iter()
        .map(|r| {
            let x = source.with_seed(replica_seed(source.base_seed, r))?;
            let target = match (&kind, &reference) {
                (_, Some(p)) => p.clone(),
                (ReferenceKind::EstimatedQv, None) => {
                    let qv = covariation_eps(&x, &x, smallest)?;
                    closed_form_reference(phi, &qv, &lag)?
                }
                _ => Path::zeros(grid, "zero"),
            };
            let mut errs = Vec::with_capacity(multiples.len());
            let mut h1: f64 = 0.0;
            let mut kept = Vec::new();
            for &m in &multiples {
                let (est, abs) = chi_qv_eps_with_abs(&x, lag, m, phi);
                errs.push(ErrorStatistic::SupOverGrid.eval(est.values(), target.values()));
                h1 = h1.max(abs);
                if r == 0 {
                    kept.push(est);
                }
            }
            Ok((errs, h1, (r == 0).then_some(kept)))
        })
        .collect::<Result<_>>()?;

    let samples = (0..multiples.len()).map(|k| rows.iter().map(|row| row.0[k]).collect()).collect();
    let mut report = ConvergenceReport::from_samples(ladder.values(), samples, ErrorStatistic::SupOverGrid, tolerance);
    if matches!(kind, ReferenceKind::Absent) {
        report = report.mark_informational();
    }
    let per_replica: Vec<f64> = rows.iter().map(|row| row.1).collect();
    let h1_median = crate::report::median(&per_replica);
    let h1_max = per_replica.iter().copied().fold(0.0, f64::max);
    let estimates = rows.into_iter().find_map(|row| row.2).unwrap_or_default();
    Ok(ChiQvResult {
        phi: phi.clone(),
        estimates,
        reference,
        reference_kind: kind,
        report,
        h1: H1Surrogate { per_replica, median: h1_median, max: h1_max, bounded: h1_max < 10.0 * h1_median },
    })
}

/// Growth diagnostic of the global norm integral along a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub eps: Vec<f64>,
    /// `2 eps / T`.
    pub eps_tilde: Vec<f64>,
    /// `ln(1 / eps_tilde)`.
    pub log_inverse: Vec<f64>,
    /// Median over replicas of [`global_norm_integral`].
    pub median_statistic: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `median_statistic / ln(1/eps_tilde)` at the smallest epsilon.
    pub ratio_at_smallest: f64,
}

pub fn global_qv_divergence(source: &PathSource, tau: f64, ladder: &EpsilonLadder) -> Result<DivergenceReport> {
    ladder.check_below(tau)?;
    let horizon = source.grid.horizon();
    let per_replica: Vec<Vec<f64>> = (0..ladder.replicas())
        .into_par_iter()
        .map(|r| {
            let x = source.with_seed(replica_seed(source.base_seed, r))?;
            ladder.values().iter().map(|&e| global_norm_integral(&x, tau, e)).collect()
        })
        .collect::<Result<_>>()?;
    let eps = ladder.values().to_vec();
    let eps_tilde: Vec<f64> = eps.iter().map(|e| 2.0 * e / horizon).collect();
    let log_inverse: Vec<f64> = eps_tilde.iter().map(|e| (1.0 / e).ln()).collect();
    let median_statistic: Vec<f64> = (0..eps.len())
        .map(|k| crate::report::median(&per_replica.iter().map(|row| row[k]).collect::<Vec<_>>()))
        .collect();
    let (slope, intercept, r_squared) = linear_fit(&log_inverse, &median_statistic);
    let ratio_at_smallest = median_statistic.last().copied().unwrap_or(f64::NAN) / log_inverse.last().copied().unwrap_or(f64::NAN);
    Ok(DivergenceReport { eps, eps_tilde, log_inverse, median_statistic, slope, intercept, r_squared, ratio_at_smallest })
}

/// Least squares `y = slope x + intercept` and its coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
