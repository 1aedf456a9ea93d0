//! Library results against independent brute-force computations.

use regcalc::chi_qv::{chi_qv_eps, closed_form_reference, diag_reference, ChiElement, Kernel};
use regcalc::clark_ocone::{
    hedge_vanilla, hedge_wiener_functional, solve_vanilla, MultiPayoff, NamedPayoff, QvGate, TimeFunction, WienerMode,
};
use regcalc::grid_paths::{covariance_matrix, make_grid, sample, GaussianSpec, Path, PathSource, TimeGrid};
use regcalc::regularize::{converge, covariation_eps, forward_integral_eps, mutual_covariations, EpsilonLadder};
use regcalc::report::{ErrorStatistic, Verdict};
use regcalc::window::{banach_forward_integral_eps, LagInterval, SignedMeasure};

fn grid(n: usize) -> TimeGrid {
    make_grid(1.0, n).unwrap()
}

/// `(1/eps) sum_{j<i} f(j) dt`, reading indices past `N` as `N`.
fn brute_running(v: &[f64], w: &[f64], m: usize, dt: f64, pick: impl Fn(&[f64], &[f64], usize, usize) -> f64) -> Vec<f64> {
    let n = v.len() - 1;
    let eps = m as f64 * dt;
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        let mut acc = 0.0;
        for j in 0..i {
            acc += pick(v, w, j, (j + m).min(n)) * dt;
        }
        out[i] = acc / eps;
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol * (1.0 + y.abs()), "node {i}: {x} vs {y}");
    }
}

#[test]
fn covariation_matches_brute_force_sums() {
    let g = grid(300);
    let x = sample(&GaussianSpec::Brownian, &g, 1).unwrap();
    let y = sample(&GaussianSpec::fbm(0.7), &g, 2).unwrap();
    for m in [1, 3, 17] {
        let eps = m as f64 * g.mesh();
        let got = covariation_eps(&x, &y, eps).unwrap();
        let want = brute_running(x.values(), y.values(), m, g.mesh(), |a, b, j, k| (a[k] - a[j]) * (b[k] - b[j]));
        close(got.values(), &want, 1e-12);
        let fwd = forward_integral_eps(&y, &x, eps).unwrap();
        let want = brute_running(y.values(), x.values(), m, g.mesh(), |a, b, j, k| a[j] * (b[k] - b[j]));
        close(fwd.values(), &want, 1e-12);
    }
}

#[test]
fn forward_integral_at_mesh_is_the_ito_sum() {
    let g = grid(1000);
    let w = sample(&GaussianSpec::Brownian, &g, 3).unwrap();
    let fwd = forward_integral_eps(&w, &w, g.mesh()).unwrap();
    let rv = covariation_eps(&w, &w, g.mesh()).unwrap();
    // sum W_j dW_j = (W_t^2 - sum dW^2) / 2, exactly
    for i in 0..=1000 {
        let wt = w.values()[i];
        assert!((fwd.values()[i] - (wt * wt - rv.values()[i]) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn ito_integral_of_w_converges_to_half_w2_minus_t() {
    let g = grid(4096);
    let src = PathSource::new(GaussianSpec::Brownian, g, 5).unwrap();
    let ladder = EpsilonLadder::new(&g, &[4, 2, 1], 40).unwrap();
    let r = converge(
        |seed, eps| {
            let w = src.with_seed(seed)?;
            forward_integral_eps(&w, &w, eps)
        },
        |seed| {
            let w = src.with_seed(seed)?;
            Path::new(g, w.values().iter().zip(g.nodes()).map(|(x, t)| (x * x - t) / 2.0).collect(), "ito")
        },
        &ladder,
        0.05,
        ErrorStatistic::SupOverGrid,
        5,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.medians());
}

#[test]
fn bracket_of_a_shifted_sum_is_bilinear() {
    let g = grid(2048);
    let w = sample(&GaussianSpec::Brownian, &g, 8).unwrap();
    let k = g.node_multiple(0.25).unwrap();
    let d = w.delayed(k);
    let x = w.add(&d).unwrap();
    let eps = 8.0 * g.mesh();
    let whole = covariation_eps(&x, &x, eps).unwrap();
    let parts = [
        covariation_eps(&w, &w, eps).unwrap(),
        covariation_eps(&w, &d, eps).unwrap(),
        covariation_eps(&d, &d, eps).unwrap(),
    ];
    for i in 0..=2048 {
        let sum = parts[0].values()[i] + 2.0 * parts[1].values()[i] + parts[2].values()[i];
        assert!((whole.values()[i] - sum).abs() < 1e-10);
    }
    // the delayed copy is flat until the lag, and the estimator looks eps ahead
    let dd = parts[2].values();
    assert!(dd[..=k - 8 + 1].iter().all(|v| *v == 0.0));
    assert!(dd[k - 8 + 2] > 0.0);
    assert!(parts[1].terminal().abs() < 0.1);
}

#[test]
fn independent_components_have_small_cross_brackets() {
    let g = grid(4096);
    let a = sample(&GaussianSpec::Brownian, &g, 21).unwrap();
    let b = sample(&GaussianSpec::Brownian, &g, 22).unwrap();
    let m = mutual_covariations(&[a, b], 8.0 * g.mesh()).unwrap();
    assert!(m[0][1].values().iter().all(|v| v.abs() < 0.15));
    assert_eq!(m[0][1], m[1][0]);
    assert!((m[0][0].terminal() - 1.0).abs() < 0.25);
}

#[test]
fn wrong_target_fails() {
    let g = grid(1024);
    let src = PathSource::new(GaussianSpec::Brownian, g, 0).unwrap();
    let r = converge(
        |seed, eps| {
            let w = src.with_seed(seed)?;
            covariation_eps(&w, &w, eps)
        },
        |_| Path::from_fn(g, "2t", |t| 2.0 * t),
        &EpsilonLadder::new(&g, &[16, 8], 20).unwrap(),
        0.05,
        ErrorStatistic::SupOverGrid,
        0,
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert!((r.smallest_eps_median() - 1.0).abs() < 0.3);
}

#[test]
fn degenerate_bifractional_is_fbm() {
    let g = grid(64);
    let a = covariance_matrix(&GaussianSpec::bifractional(0.25, 1.0), &g);
    let b = covariance_matrix(&GaussianSpec::fbm(0.25), &g);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            assert_eq!(a.get(i, j), b.get(i, j));
        }
    }
    assert_eq!(
        sample(&GaussianSpec::bifractional(0.25, 1.0), &g, 9).unwrap().values(),
        sample(&GaussianSpec::fbm(0.25), &g, 9).unwrap().values()
    );
}

#[test]
fn fbm_covariance_from_the_formula() {
    let g = grid(16);
    let c = covariance_matrix(&GaussianSpec::fbm(0.7), &g);
    let h2 = 1.4;
    for i in 0..c.dim() {
        for j in 0..c.dim() {
            let (s, t) = (g.node(i + 1), g.node(j + 1));
            let want = 0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2));
            assert!((c.get(i, j) - want).abs() < 1e-14);
        }
    }
}

#[test]
fn delayed_dirac_integrand_gives_the_shifted_forward_integral() {
    let g = grid(512);
    let x = sample(&GaussianSpec::Brownian, &g, 4).unwrap();
    let tau = 0.25;
    let lag = LagInterval::on_grid(&g, tau).unwrap();
    let a_steps = 32;
    let a = a_steps as f64 * g.mesh();
    let eps = 4.0 * g.mesh();
    let banach = banach_forward_integral_eps(|_| SignedMeasure::dirac(lag, -a, 1.0).unwrap(), &x, tau, eps).unwrap();
    let ones = Path::from_fn(g, "1", |_| 1.0).unwrap();
    let direct = forward_integral_eps(&ones, &x.delayed(a_steps), eps).unwrap();
    // agree until the window's look-ahead crosses T
    for i in 0..=512 - 4 {
        assert!((banach.values()[i] - direct.values()[i]).abs() < 1e-12, "node {i}");
    }
}

#[test]
fn diagonal_reference_quadrature() {
    // int_0^t (t - x) dx = t^2 / 2 and at t = tau = 1 that is 1/2
    let g = grid(1024);
    let qv = Path::from_fn(g, "t", |t| t).unwrap();
    assert!((diag_reference(|_| 1.0, &qv, 1.0, 1.0) - 0.5).abs() < 1e-12);
    let lag = LagInterval::on_grid(&g, 0.5).unwrap();
    let r = closed_form_reference(&ChiElement::diag(&lag, |_| 1.0), &qv, &lag).unwrap();
    for i in 0..=1024 {
        let t = g.node(i);
        let want = if t <= 0.5 { t * t / 2.0 } else { 0.5 * t - 0.125 };
        assert!((r.values()[i] - want).abs() < 1e-12);
    }
}

#[test]
fn chi0_reference_keeps_only_the_atom() {
    let g = grid(256);
    let lag = LagInterval::on_grid(&g, 0.25).unwrap();
    let qv = Path::from_fn(g, "t", |t| t).unwrap();
    let blocks = |lambda| ChiElement::chi0(lambda, vec![0.7; lag.len()], vec![-0.3; lag.len()], Kernel::constant(&lag, 2.0));
    let zero = closed_form_reference(&blocks(0.0), &qv, &lag).unwrap();
    assert!(zero.values().iter().all(|v| *v == 0.0));
    let id = closed_form_reference(&blocks(1.0), &qv, &lag).unwrap();
    close(id.values(), qv.values(), 1e-15);
}

#[test]
fn atomic_chi_qv_is_the_real_bracket() {
    let g = grid(512);
    let x = sample(&GaussianSpec::fbm(0.6), &g, 6).unwrap();
    let eps = 8.0 * g.mesh();
    let chi = chi_qv_eps(&x, 0.25, &ChiElement::atomic(3.0), eps).unwrap();
    let cov = covariation_eps(&x, &x, eps).unwrap();
    for i in 0..=512 {
        assert!((chi.values()[i] - 3.0 * cov.values()[i]).abs() < 1e-12);
    }
}

#[test]
fn cos_value_function_against_trapezoid_convolution() {
    let v = solve_vanilla(NamedPayoff::Cos, 1.0).unwrap();
    for &(t, x) in &[(0.0, 0.0), (0.3, 1.2), (0.9, -2.0)] {
        let s = (1.0f64 - t).sqrt();
        // E cos(x + s Z) by a fine trapezoid on [-12, 12]
        let n = 20000;
        let h = 24.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let z = -12.0 + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * (x + s * z).cos() * (-z * z / 2.0).exp();
        }
        let trap = acc * h / (2.0 * std::f64::consts::PI).sqrt();
        let closed = (-(1.0 - t) / 2.0).exp() * x.cos();
        assert!((trap - closed).abs() < 1e-12);
        assert!((v.value(t, x) - closed).abs() < 1e-12, "({t},{x})");
        assert!((v.dx(t, x) + (-(1.0 - t) / 2.0).exp() * x.sin()).abs() < 1e-12);
    }
}

#[test]
fn square_hedge_is_the_discrete_ito_identity() {
    let g = grid(2048);
    let w = sample(&GaussianSpec::Brownian, &g, 12).unwrap();
    let v = solve_vanilla(NamedPayoff::Square, 1.0).unwrap();
    let r = hedge_vanilla(&v, &w, &QvGate::Override).unwrap();
    assert!((r.h0 - 1.0).abs() < 1e-12);
    for (i, xi) in r.strategy.iter().enumerate() {
        assert!((xi - 2.0 * w.values()[i]).abs() < 1e-12);
    }
    let rv = covariation_eps(&w, &w, g.mesh()).unwrap().terminal();
    assert!((r.error - (rv - 1.0).abs()).abs() < 1e-10);
}

#[test]
fn mixed_paths_pass_the_gate_and_hedge_like_brownian() {
    let g = grid(4096);
    let spec = GaussianSpec::mixed(vec![GaussianSpec::Brownian, GaussianSpec::fbm(0.75)]);
    let x = sample(&spec, &g, 2).unwrap();
    let v = solve_vanilla(NamedPayoff::Square, 1.0).unwrap();
    let r = hedge_vanilla(&v, &x, &QvGate::realized()).unwrap();
    let rv = covariation_eps(&x, &x, g.mesh()).unwrap().terminal();
    assert!((r.error - (rv - 1.0).abs()).abs() < 1e-10);
    assert!(r.error < 0.15);
}

#[test]
fn time_to_go_wiener_functional_has_value_t_cubed_over_three() {
    let g = grid(4096);
    let w = sample(&GaussianSpec::Brownian, &g, 30).unwrap();
    let phis = [TimeFunction::time_to_go(1.0)];
    let r = hedge_wiener_functional(MultiPayoff::Scalar(NamedPayoff::Square), &phis, &w, WienerMode::BrownianQv).unwrap();
    assert!((r.h0 - 1.0 / 3.0).abs() < 1e-12);
    // int_0^T (T - s) dW_s = int_0^T W_s ds by parts, so the payoff is (int W ds)^2
    let integral_of_path: f64 = w.values()[..4096].iter().sum::<f64>() * g.mesh();
    assert!((r.payoff.sqrt() - integral_of_path.abs()).abs() < 1e-3);
    assert!(r.error < 0.05);
}

#[test]
fn zero_qv_square_representation() {
    let g = grid(4096);
    let x = sample(&GaussianSpec::fbm(0.75), &g, 31).unwrap();
    let r = hedge_wiener_functional(MultiPayoff::Scalar(NamedPayoff::Square), &[TimeFunction::constant(1.0)], &x, WienerMode::ZeroQv)
        .unwrap();
    assert_eq!(r.h0, 0.0);
    // X_T^2 - 2 sum X dX is exactly the realized variance
    let rv = covariation_eps(&x, &x, g.mesh()).unwrap().terminal();
    assert!((r.error - rv).abs() < 1e-12);
}
