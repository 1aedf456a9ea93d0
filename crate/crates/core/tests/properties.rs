use proptest::prelude::*;

use regcalc::chi_qv::{pair_chi, ChiElement, Kernel};
use regcalc::grid_paths::{make_grid, sample, GaussianSpec, Path};
use regcalc::regularize::{converge, covariation_eps, forward_integral_eps, EpsilonLadder};
use regcalc::report::{ErrorStatistic, Verdict};
use regcalc::window::{pair_measure, LagInterval, SignedMeasure, WindowSegment};

const STEPS: usize = 16;

fn lag() -> LagInterval {
    LagInterval::new(STEPS, 0.25 / STEPS as f64).unwrap()
}

fn segment() -> impl Strategy<Value = WindowSegment> {
    prop::collection::vec(-5.0f64..5.0, STEPS + 1).prop_map(|v| WindowSegment::new(lag(), 0.5, v).unwrap())
}

fn element() -> impl Strategy<Value = ChiElement> {
    let l = lag();
    let n = l.len();
    prop_oneof![
        (-3.0f64..3.0).prop_map(ChiElement::atomic),
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(move |(a, b)| ChiElement::l2(Kernel::separable(&l, move |x| a + x, move |y| b * y))),
        prop::collection::vec(-3.0f64..3.0, n).prop_map(move |g| ChiElement::diag(&l, |x| g[l.index_of(x).unwrap()])),
        (-3.0f64..3.0, prop::collection::vec(-1.0f64..1.0, n), -2.0f64..2.0)
            .prop_map(move |(lam, side, c)| ChiElement::chi0(lam, side.clone(), side, Kernel::constant(&l, c))),
    ]
}

fn measure() -> impl Strategy<Value = SignedMeasure> {
    (prop::collection::vec(-2.0f64..2.0, STEPS + 1), -3.0f64..3.0, 0..=STEPS).prop_map(|(d, w, k)| {
        let l = lag();
        SignedMeasure::from_density(l, d).unwrap().with_atom(-(k as f64) * l.mesh(), w).unwrap()
    })
}

fn paths() -> impl Strategy<Value = (Path, Path, Path)> {
    (any::<u64>(), any::<u64>(), any::<u64>()).prop_map(|(a, b, c)| {
        let g = make_grid(1.0, 64).unwrap();
        let s = |seed| sample(&GaussianSpec::Brownian, &g, seed).unwrap();
        (s(a), s(b), s(c))
    })
}

fn max_gap(a: &Path, b: &Path) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn covariation_is_symmetric((x, y, _) in paths(), m in 1usize..8) {
        let eps = m as f64 / 64.0;
        let a = covariation_eps(&x, &y, eps).unwrap();
        let b = covariation_eps(&y, &x, eps).unwrap();
        prop_assert!(max_gap(&a, &b) < 1e-12);
    }

    #[test]
    fn covariation_is_bilinear((x, y, z) in paths(), a in -3.0f64..3.0, b in -3.0f64..3.0, m in 1usize..8) {
        let eps = m as f64 / 64.0;
        let lhs = covariation_eps(&x.scale(a).add(&y.scale(b)).unwrap(), &z, eps).unwrap();
        let ax = covariation_eps(&x, &z, eps).unwrap().scale(a);
        let by = covariation_eps(&y, &z, eps).unwrap().scale(b);
        prop_assert!(max_gap(&lhs, &ax.add(&by).unwrap()) < 1e-10);
    }

    #[test]
    fn forward_integral_is_linear_in_the_integrand((x, y, z) in paths(), a in -3.0f64..3.0, m in 1usize..8) {
        let eps = m as f64 / 64.0;
        let lhs = forward_integral_eps(&y.scale(a).add(&z).unwrap(), &x, eps).unwrap();
        let rhs = forward_integral_eps(&y, &x, eps).unwrap().scale(a).add(&forward_integral_eps(&z, &x, eps).unwrap()).unwrap();
        prop_assert!(max_gap(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn pairing_is_quadratic_in_the_segment(phi in element(), eta in segment(), c in -4.0f64..4.0) {
        let base = pair_chi(&phi, &eta).unwrap();
        let scaled = pair_chi(&phi, &eta.scale(c)).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + base.abs() * c * c));
    }

    #[test]
    fn pairing_is_linear_in_the_element(phi in element(), eta in segment(), c in -4.0f64..4.0) {
        let base = pair_chi(&phi, &eta).unwrap();
        let scaled = pair_chi(&phi.scale(c), &eta).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn measure_pairing_is_bounded_by_total_variation(mu in measure(), eta in segment()) {
        let sup = eta.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let v = pair_measure(&mu, &eta).unwrap();
        prop_assert!(v.abs() <= mu.total_variation() * sup * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn extension_is_constant_outside_the_horizon((x, _, _) in paths(), s in 0.0f64..10.0) {
        prop_assert_eq!(x.eval_extended(-s), x.initial());
        prop_assert_eq!(x.eval_extended(1.0 + s), x.terminal());
    }

    #[test]
    fn same_seed_same_draw(seed in any::<u64>(), h in 0.2f64..0.9) {
        let g = make_grid(1.0, 32).unwrap();
        let spec = GaussianSpec::fbm(h);
        prop_assert_eq!(sample(&spec, &g, seed).unwrap(), sample(&spec, &g, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn estimator_equal_to_target_always_passes(seed in any::<u64>()) {
        let g = make_grid(1.0, 128).unwrap();
        let ladder = EpsilonLadder::new(&g, &[4, 2, 1], 5).unwrap();
        let r = converge(
            |s, eps| { let w = sample(&GaussianSpec::Brownian, &g, s)?; covariation_eps(&w, &w, eps) },
            |s| { let w = sample(&GaussianSpec::Brownian, &g, s)?; covariation_eps(&w, &w, g.mesh()) },
            &ladder,
            1e-9,
            ErrorStatistic::SupOverGrid,
            seed,
        ).unwrap();
        prop_assert!(r.smallest_eps_median() == 0.0);
        prop_assert_eq!(r.verdict, Verdict::Pass);
    }
}
