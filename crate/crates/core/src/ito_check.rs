//! Term-by-term check of the window Ito formula
//!
//! ```text
//! F(t, X_t(.)) = F(0, X_0(.)) + int_0^t d_t F ds + int_0^t <DF, d^- X_s(.)> + 1/2 int_0^t <D^2 F, d[X~]_s>
//! ```
//!
//! on sampled paths. The forward term is the regularized Banach forward
//! integral at a given `eps`; the quadratic term integrates the second
//! derivative against the closed-form chi-quadratic variation (or, on
//! request, against its `eps` estimate).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chi_qv::{diag_reference_at, ChiElement};
use crate::error::{invalid, Error, Result};
use crate::functionals::Functional;
use crate::grid_paths::{fmt17, Path, PathSource};
use crate::regularize::{converge, covariation_eps, EpsilonLadder};
use crate::report::{ConvergenceReport, ErrorStatistic};
use crate::window::{banach_forward_integral_eps, fill_increment, window_at_node, LagInterval};

/// How the quadratic term is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticMode {
    /// Against the closed-form chi-QV built from `[X]`.
    ClosedForm,
    /// Against the `eps` estimate `<D^2 F, Delta (x) Delta> / eps`.
    Estimated,
}

/// Source of the real quadratic variation `[X]` used by the closed-form mode.
#[derive(Debug, Clone, PartialEq)]
pub enum QvInput {
    /// `[X]_t = rate * t`.
    Rate(f64),
    Path(Path),
    /// `covariation_eps(X, X, eps)` at the same `eps` as the forward term.
    Estimated,
}

/// All terms of the formula at one `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoTerms {
    pub eps: f64,
    pub lhs: Path,
    pub dt_term: Path,
    pub fwd_term: Path,
    pub quad_term: Path,
    pub residual: Path,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoResidualReport {
    pub functional: String,
    pub tau: f64,
    pub mode: QuadraticMode,
    /// One entry per `eps`, in ladder order.
    pub terms: Vec<ItoTerms>,
    /// Sup-norm of each residual against the zero path.
    pub report: ConvergenceReport,
}

impl ItoResidualReport {
    /// CSV with header `eps,t,lhs,dt_term,fwd_term,quad_term,residual`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eps,t,lhs,dt_term,fwd_term,quad_term,residual")?;
        for t in &self.terms {
            let grid = t.lhs.grid();
            for i in 0..=grid.steps() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt17(t.eps),
                    fmt17(grid.node(i)),
                    fmt17(t.lhs.values()[i]),
                    fmt17(t.dt_term.values()[i]),
                    fmt17(t.fwd_term.values()[i]),
                    fmt17(t.quad_term.values()[i]),
                    fmt17(t.residual.values()[i]),
                )?;
            }
        }
        Ok(())
    }
}

fn qv_path(x: &Path, qv: &QvInput, eps: f64) -> Result<Path> {
    match qv {
        QvInput::Rate(r) => Ok(Path::from_values_unchecked(*x.grid(), x.grid().nodes().iter().map(|t| r * t).collect(), "qv")),
        QvInput::Path(p) => {
            if p.grid() != x.grid() {
                return Err(Error::GridMismatch);
            }
            Ok(p.clone())
        }
        QvInput::Estimated => covariation_eps(x, x, eps),
    }
}

/// Increment of the closed-form chi-QV of `phi` over `[t_j, t_{j+1}]`.
fn closed_form_increment(phi: &ChiElement, qv: &[f64], lag: &LagInterval, j: usize) -> f64 {
    match phi {
        ChiElement::Atomic00 { lambda } | ChiElement::Chi0 { lambda, .. } => lambda * (qv[j + 1] - qv[j]),
        ChiElement::L2Kernel { .. } => 0.0,
        ChiElement::DiagKernel { g } => diag_reference_at(g, qv, lag, j + 1) - diag_reference_at(g, qv, lag, j),
    }
}

/// The formula's terms and residual for one path at one `eps`.
pub fn ito_terms(
    f: &dyn Functional,
    x: &Path,
    tau: f64,
    eps: f64,
    qv: &QvInput,
    mode: QuadraticMode,
) -> Result<ItoTerms> {
    let grid = *x.grid();
    let lag = LagInterval::on_grid(&grid, tau)?;
    let m = grid.node_multiple(eps)?;
    let n = grid.steps();
    let dt = grid.mesh();
    let q = match mode {
        QuadraticMode::ClosedForm => Some(qv_path(x, qv, eps)?),
        QuadraticMode::Estimated => None,
    };

    let mut lhs = Vec::with_capacity(n + 1);
    let mut dt_term = Vec::with_capacity(n + 1);
    let mut quad = Vec::with_capacity(n + 1);
    let mut buf = vec![0.0; lag.len()];
    let (mut dt_acc, mut quad_acc) = (0.0, 0.0);
    for i in 0..=n {
        let w = window_at_node(x, i, lag);
        let t = grid.node(i);
        lhs.push(f.eval_at(t, &w));
        dt_term.push(dt_acc);
        quad.push(0.5 * quad_acc);
        if i == n {
            break;
        }
        dt_acc += f.time_derivative(t, &w) * dt;
        let phi = f.d2(&w);
        if phi.tag() != f.chi_tag() {
            return Err(Error::Unsupported(format!(
                "{} declares {:?} but its second derivative is {:?}",
                f.name(),
                f.chi_tag(),
                phi.tag()
            )));
        }
        quad_acc += match &q {
            Some(q) => closed_form_increment(&phi, q.values(), &lag, i),
            None => {
                fill_increment(x, i, m, lag, &mut buf);
                phi.pair_samples(&lag, &buf) / m as f64
            }
        };
    }

    let fwd = banach_forward_integral_eps(|j| f.d1(&window_at_node(x, j, lag)), x, tau, eps)?;
    let f0 = lhs[0];
    let residual: Vec<f64> = (0..=n).map(|i| lhs[i] - (f0 + dt_term[i] + fwd.values()[i] + quad[i])).collect();
    let mk = |v: Vec<f64>, name: &str| Path::from_values_unchecked(grid, v, name.to_string());
    Ok(ItoTerms {
        eps,
        lhs: mk(lhs, "lhs"),
        dt_term: mk(dt_term, "dt_term"),
        fwd_term: fwd.with_label("fwd_term"),
        quad_term: mk(quad, "quad_term"),
        residual: mk(residual, "residual"),
    })
}

/// Residual report for one path over every `eps` of the ladder (the ladder's replica
/// count is ignored; the report summarizes this single path).
pub fn ito_residual(
    f: &dyn Functional,
    x: &Path,
    tau: f64,
    ladder: &EpsilonLadder,
    qv: &QvInput,
    mode: QuadraticMode,
    tolerance: f64,
) -> Result<ItoResidualReport> {
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let terms = ladder
        .values()
        .iter()
        .map(|&eps| ito_terms(f, x, tau, eps, qv, mode))
        .collect::<Result<Vec<_>>>()?;
    let samples = terms.iter().map(|t| vec![ErrorStatistic::SupOverGrid.eval(t.residual.values(), &vec![0.0; t.residual.values().len()])]).collect();
    let report = ConvergenceReport::from_samples(ladder.values(), samples, ErrorStatistic::SupOverGrid, tolerance);
    Ok(ItoResidualReport { functional: f.name(), tau, mode, terms, report })
}

/// Residual sup-norms over the ladder's replicas of `source`, judged against the zero path.
pub fn ito_study(
    f: &dyn Functional,
    source: &PathSource,
    tau: f64,
    ladder: &EpsilonLadder,
    qv: &QvInput,
    mode: QuadraticMode,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    let grid = source.grid;
    converge(
        |seed, eps| Ok(ito_terms(f, &source.with_seed(seed)?, tau, eps, qv, mode)?.residual),
        |_| Ok(Path::zeros(grid, "zero")),
        ladder,
        tolerance,
        ErrorStatistic::SupOverGrid,
        source.base_seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{example_a, example_b, example_c, C2Function};
    use crate::grid_paths::{make_grid, sample, GaussianSpec};

    fn bm(n: usize, seed: u64) -> Path {
        sample(&GaussianSpec::Brownian, &make_grid(1.0, n).unwrap(), seed).unwrap()
    }

    #[test]
    fn residual_vanishes_at_origin() {
        let x = bm(512, 3);
        let fs: Vec<Box<dyn Functional>> =
            vec![Box::new(example_a(C2Function::square())), Box::new(example_b()), Box::new(example_c())];
        for f in &fs {
            for mode in [QuadraticMode::ClosedForm, QuadraticMode::Estimated] {
                let t = ito_terms(f.as_ref(), &x, 0.25, 8.0 / 512.0, &QvInput::Rate(1.0), mode).unwrap();
                assert_eq!(t.residual.values()[0], 0.0);
            }
        }
    }

    #[test]
    fn linear_point_evaluation_telescopes() {
        let x = bm(512, 4);
        let f = example_a(C2Function::identity());
        for m in [1, 4, 16] {
            let t = ito_terms(&f, &x, 0.25, m as f64 / 512.0, &QvInput::Rate(1.0), QuadraticMode::ClosedForm).unwrap();
            assert!(t.quad_term.values().iter().all(|&v| v == 0.0));
            // at eps = dt the forward sum telescopes to X_t - X_0 exactly
            if m == 1 {
                assert!(t.residual.values().iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn square_at_mesh_scale_is_discrete_ito_identity() {
        // at eps = dt: W_t^2 = 2 sum W dW + sum (dW)^2, so the residual is sum (dW)^2 - t
        let x = bm(1024, 5);
        let f = example_a(C2Function::square());
        let t = ito_terms(&f, &x, 0.25, 1.0 / 1024.0, &QvInput::Rate(1.0), QuadraticMode::ClosedForm).unwrap();
        let v = x.values();
        let mut rv = 0.0;
        for i in 0..1024 {
            rv += (v[i + 1] - v[i]).powi(2);
            let expected = rv - x.grid().node(i + 1);
            assert!((t.residual.values()[i + 1] - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn squared_integral_has_no_quadratic_term() {
        let x = bm(256, 6);
        let t = ito_terms(&example_b(), &x, 0.25, 4.0 / 256.0, &QvInput::Rate(1.0), QuadraticMode::ClosedForm).unwrap();
        assert!(t.quad_term.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_quadratic_term_matches_reference() {
        // g = 2 constant, qv = t: 1/2 int_0^t [D(t_{j+1}) - D(t_j)] = int_0^{t ^ tau} [X]_{t-x} dx
        let x = bm(256, 7);
        let tau = 0.25;
        let t = ito_terms(&example_c(), &x, tau, 4.0 / 256.0, &QvInput::Rate(1.0), QuadraticMode::ClosedForm).unwrap();
        for (i, &q) in t.quad_term.values().iter().enumerate() {
            let s = x.grid().node(i);
            let u = s.min(tau);
            let exact = s * u - u * u / 2.0;
            assert!((q - exact).abs() < 1e-12, "{i} {q} {exact}");
        }
    }

    #[test]
    fn estimated_mode_matches_covariation_for_point_square() {
        let x = bm(256, 8);
        let eps = 4.0 / 256.0;
        let f = example_a(C2Function::square());
        let t = ito_terms(&f, &x, 0.25, eps, &QvInput::Rate(1.0), QuadraticMode::Estimated).unwrap();
        let c = covariation_eps(&x, &x, eps).unwrap();
        for (a, b) in t.quad_term.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_one_row_per_node_and_eps() {
        let x = bm(64, 9);
        let ladder = EpsilonLadder::new(x.grid(), &[4, 2], 1).unwrap();
        let r = ito_residual(&example_b(), &x, 0.25, &ladder, &QvInput::Rate(1.0), QuadraticMode::ClosedForm, 1.0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("eps,t,lhs,dt_term,fwd_term,quad_term,residual\n"));
        assert_eq!(s.lines().count(), 1 + 2 * 65);
    }
}
