//! Functionals on windows with closed-form Frechet derivatives.
//!
//! Three reference functionals are provided, each with its second derivative
//! in a different Chi-subspace:
//!
//! | functional | value | second derivative |
//! |---|---|---|
//! | [`example_a`] | `f(eta(0))` | `f''(eta(0)) delta_0 (x) delta_0` |
//! | [`example_b`] | `(int eta)^2` | kernel `2` on the square |
//! | [`example_c`] | `int eta^2` | `2 delta_x(dy) dx` on the diagonal |
//!
//! Integrals over the lag interval use the same trapezoidal weights as the
//! pairings, so the derivative formulas are exact on the lattice.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chi_qv::{pair_chi, ChiElement, ChiTag, Kernel};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::window::{pair_measure, LagInterval, SignedMeasure, WindowSegment};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A twice differentiable real function with its first two derivatives.
#[derive(Clone)]
pub struct C2Function {
    name: String,
    f: RealFn,
    df: RealFn,
    d2f: RealFn,
}

impl C2Function {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), f: Arc::new(f), df: Arc::new(df), d2f: Arc::new(d2f) }
    }

    pub fn identity() -> Self {
        Self::new("x", |x| x, |_| 1.0, |_| 0.0)
    }

    pub fn square() -> Self {
        Self::new("x^2", |x| x * x, |x| 2.0 * x, |_| 2.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c, |_| 0.0, |_| 0.0)
    }

    pub fn cos() -> Self {
        Self::new("cos", f64::cos, |x| -x.sin(), |x| -x.cos())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn first(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn second(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
}

impl fmt::Debug for C2Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C2Function({})", self.name)
    }
}

/// `F(t, eta)` of class `C^{1,2}` with derivatives as measures and Chi-subspace elements.
pub trait Functional: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, eta: &WindowSegment) -> f64;

    /// First Frechet derivative as a signed measure on the lag interval.
    fn d1(&self, eta: &WindowSegment) -> SignedMeasure;

    /// Second Frechet derivative, always of variant [`chi_tag`](Self::chi_tag).
    fn d2(&self, eta: &WindowSegment) -> ChiElement;

    fn chi_tag(&self) -> ChiTag;

    /// Time-dependent value; defaults to [`eval`](Self::eval).
    fn eval_at(&self, _t: f64, eta: &WindowSegment) -> f64 {
        self.eval(eta)
    }

    fn time_derivative(&self, _t: f64, _eta: &WindowSegment) -> f64 {
        0.0
    }
}

/// `eta -> f(eta(0))`.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub f: C2Function,
}

/// `eta -> (int eta)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredIntegral;

/// `eta -> int eta^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntegralOfSquare;

pub fn example_a(f: C2Function) -> PointEvaluation {
    PointEvaluation { f }
}

pub fn example_b() -> SquaredIntegral {
    SquaredIntegral
}

pub fn example_c() -> IntegralOfSquare {
    IntegralOfSquare
}

impl Functional for PointEvaluation {
    fn name(&self) -> String {
        format!("a[{}]", self.f.name())
    }

    fn eval(&self, eta: &WindowSegment) -> f64 {
        self.f.value(eta.head())
    }

    fn d1(&self, eta: &WindowSegment) -> SignedMeasure {
        SignedMeasure::dirac_at_zero(*eta.lag(), self.f.first(eta.head()))
    }

    fn d2(&self, eta: &WindowSegment) -> ChiElement {
        ChiElement::atomic(self.f.second(eta.head()))
    }

    fn chi_tag(&self) -> ChiTag {
        ChiTag::Atomic00
    }
}

impl Functional for SquaredIntegral {
    fn name(&self) -> String {
        "b".into()
    }

    fn eval(&self, eta: &WindowSegment) -> f64 {
        eta.integral().powi(2)
    }

    fn d1(&self, eta: &WindowSegment) -> SignedMeasure {
        let c = 2.0 * eta.integral();
        SignedMeasure::from_density_fn(*eta.lag(), |_| c)
    }

    fn d2(&self, eta: &WindowSegment) -> ChiElement {
        ChiElement::l2(Kernel::constant(eta.lag(), 2.0))
    }

    fn chi_tag(&self) -> ChiTag {
        ChiTag::L2
    }
}

impl Functional for IntegralOfSquare {
    fn name(&self) -> String {
        "c".into()
    }

    fn eval(&self, eta: &WindowSegment) -> f64 {
        let s = eta.samples();
        eta.lag().integrate(|k| s[k] * s[k])
    }

    fn d1(&self, eta: &WindowSegment) -> SignedMeasure {
        let density = eta.samples().iter().map(|x| 2.0 * x).collect();
        SignedMeasure::from_density(*eta.lag(), density).expect("density sampled on the window lattice")
    }

    fn d2(&self, eta: &WindowSegment) -> ChiElement {
        ChiElement::diag(eta.lag(), |_| 2.0)
    }

    fn chi_tag(&self) -> ChiTag {
        ChiTag::Diag
    }
}

/// The functionals selectable by name: `a:x`, `a:square`, `a:cos`, `a:const:<c>`, `b`, `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedFunctional {
    PointIdentity,
    PointSquare,
    PointCos,
    PointConstant(f64),
    SquaredIntegral,
    IntegralOfSquare,
}

impl NamedFunctional {
    pub fn build(&self) -> Box<dyn Functional> {
        match self {
            NamedFunctional::PointIdentity => Box::new(example_a(C2Function::identity())),
            NamedFunctional::PointSquare => Box::new(example_a(C2Function::square())),
            NamedFunctional::PointCos => Box::new(example_a(C2Function::cos())),
            NamedFunctional::PointConstant(c) => Box::new(example_a(C2Function::constant(*c))),
            NamedFunctional::SquaredIntegral => Box::new(example_b()),
            NamedFunctional::IntegralOfSquare => Box::new(example_c()),
        }
    }
}

impl fmt::Display for NamedFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedFunctional::PointIdentity => write!(f, "a:x"),
            NamedFunctional::PointSquare => write!(f, "a:square"),
            NamedFunctional::PointCos => write!(f, "a:cos"),
            NamedFunctional::PointConstant(c) => write!(f, "a:const:{c}"),
            NamedFunctional::SquaredIntegral => write!(f, "b"),
            NamedFunctional::IntegralOfSquare => write!(f, "c"),
        }
    }
}

impl FromStr for NamedFunctional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "a:x" | "a:linear" => return Ok(NamedFunctional::PointIdentity),
            "a:square" | "a:x2" => return Ok(NamedFunctional::PointSquare),
            "a:cos" => return Ok(NamedFunctional::PointCos),
            "b" => return Ok(NamedFunctional::SquaredIntegral),
            "c" => return Ok(NamedFunctional::IntegralOfSquare),
            _ => {}
        }
        if let Some(c) = s.strip_prefix("a:const:") {
            let c = crate::grid_paths::parse_number(c).ok_or_else(|| invalid(format!("bad constant in {s}")))?;
            return Ok(NamedFunctional::PointConstant(c));
        }
        Err(invalid(format!("unknown functional '{s}' (expected a:x, a:square, a:cos, a:const:<c>, b or c)")))
    }
}

/// Largest relative discrepancies found by [`fd_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub h: f64,
    /// `|central difference - <d1, psi>| / max(|<d1, psi>|, 1)`, per direction.
    pub first_order: Vec<f64>,
    /// Same for the symmetric second difference against `<d2, psi (x) psi>`.
    pub second_order: Vec<f64>,
    pub max_first: f64,
    pub max_second: f64,
}

impl FdReport {
    pub fn max_relative_error(&self) -> f64 {
        self.max_first.max(self.max_second)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error() < tolerance
    }
}

fn relative(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / an.abs().max(1.0)
}

/// Compares central differences of `F` at `eta` along each direction with the
/// closed-form derivatives.
pub fn fd_check(f: &dyn Functional, eta: &WindowSegment, directions: &[WindowSegment], h: f64) -> Result<FdReport> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let d1 = f.d1(eta);
    let d2 = f.d2(eta);
    if d2.tag() != f.chi_tag() {
        return Err(Error::Unsupported(format!("{} declares {:?} but returned {:?}", f.name(), f.chi_tag(), d2.tag())));
    }
    let f0 = f.eval(eta);
    let mut first_order = Vec::with_capacity(directions.len());
    let mut second_order = Vec::with_capacity(directions.len());
    for psi in directions {
        let plus = eta.axpy(h, psi)?;
        let minus = eta.axpy(-h, psi)?;
        let (fp, fm) = (f.eval(&plus), f.eval(&minus));
        first_order.push(relative((fp - fm) / (2.0 * h), pair_measure(&d1, psi)?));
        second_order.push(relative((fp + fm - 2.0 * f0) / (h * h), pair_chi(&d2, psi)?));
    }
    let max_first = first_order.iter().fold(0.0, |m: f64, v| m.max(*v));
    let max_second = second_order.iter().fold(0.0, |m: f64, v| m.max(*v));
    Ok(FdReport { h, first_order, second_order, max_first, max_second })
}

/// Brownian-bridge-like window: a standard normal level plus a Brownian bridge on `[-tau, 0]`.
pub fn random_segment(lag: LagInterval, seed: u64) -> WindowSegment {
    let mut rng = rng_from_seed(seed);
    let level: f64 = rng.sample(StandardNormal);
    let sd = lag.mesh().sqrt();
    let mut walk = Vec::with_capacity(lag.len());
    walk.push(0.0);
    for _ in 0..lag.steps() {
        let z: f64 = rng.sample(StandardNormal);
        walk.push(walk.last().unwrap() + sd * z);
    }
    let end = walk[lag.steps()];
    let n = lag.steps() as f64;
    let samples = walk.iter().enumerate().map(|(k, w)| level + w - end * k as f64 / n).collect();
    WindowSegment::new(lag, 0.0, samples).expect("length matches lag")
}

/// Seeds of the base points and directions used by [`fd_check_seeded`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdDraw {
    pub eta_seed: u64,
    pub psi_seed: u64,
}

/// [`fd_check`] over `draws` seeded pairs `(eta, psi)`; returns the worst report and the seeds.
pub fn fd_check_seeded(
    f: &dyn Functional,
    lag: LagInterval,
    draws: usize,
    seed: u64,
    h: f64,
) -> Result<(FdReport, Vec<FdDraw>)> {
    let mut worst: Option<FdReport> = None;
    let mut used = Vec::with_capacity(draws);
    for d in 0..draws as u64 {
        let draw = FdDraw { eta_seed: derive_seed(seed, 2 * d), psi_seed: derive_seed(seed, 2 * d + 1) };
        let eta = random_segment(lag, draw.eta_seed);
        let psi = random_segment(lag, draw.psi_seed);
        let rep = fd_check(f, &eta, &[psi], h)?;
        worst = Some(match worst {
            None => rep,
            Some(mut w) => {
                w.first_order.extend(rep.first_order);
                w.second_order.extend(rep.second_order);
                w.max_first = w.max_first.max(rep.max_first);
                w.max_second = w.max_second.max(rep.max_second);
                w
            }
        });
        used.push(draw);
    }
    let report = worst.ok_or_else(|| invalid("at least one draw is needed"))?;
    Ok((report, used))
}
