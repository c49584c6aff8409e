use elicit::backtest::{dm_from_diffs, long_run_variance};
use elicit::elicit_check::{brute_force_argmin, Grid};
use elicit::estimate::{fit_linear, m_estimate, z_estimate, RegressionData};
use elicit::ident::IdentSpec;
use elicit::{mix, ConvexSpec, Distribution, FunctionalSpec, Integrand, ScoreSpec, Transform};
use proptest::prelude::*;

fn discrete() -> impl Strategy<Value = Distribution> {
    prop::collection::vec((-50i32..50, 1u32..20), 1..8).prop_map(|atoms| {
        let pts: Vec<f64> = atoms.iter().map(|a| a.0 as f64 / 10.0).collect();
        let total: u32 = atoms.iter().map(|a| a.1).sum();
        let w: Vec<f64> = atoms.iter().map(|a| a.1 as f64 / total as f64).collect();
        Distribution::from_atoms(&pts, &w).unwrap()
    })
}

fn level() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn quantile_galois(f in discrete(), a in level(), x in -6.0f64..6.0) {
        let q = f.lower_quantile(a).unwrap();
        prop_assert_eq!(q <= x, a <= f.cdf(x));
        prop_assert!(f.upper_quantile(a).unwrap() >= q);
    }

    #[test]
    fn quantile_monotone(f in discrete(), a in level(), b in level()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f.lower_quantile(lo).unwrap() <= f.lower_quantile(hi).unwrap());
    }

    #[test]
    fn expectation_is_affine_in_mixtures(f in discrete(), g in discrete(), l in 0.0f64..1.0, k in 1i32..4) {
        let h = Integrand::power(k);
        let m = mix(&[f.clone(), g.clone()], &[l, 1.0 - l]).unwrap();
        let lhs = m.expect(&|y| h.eval(y)).unwrap();
        let rhs = l * f.expect(&|y| h.eval(y)).unwrap() + (1.0 - l) * g.expect(&|y| h.eval(y)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn expectile_symmetry_and_order(f in discrete(), t in level(), u in level()) {
        let neg = f.affine(-1.0, 0.0).unwrap();
        let e = f.expectile(t).unwrap();
        prop_assert!((neg.expectile(t).unwrap() + f.expectile(1.0 - t).unwrap()).abs() < 1e-10);
        let (lo, hi) = if t <= u { (t, u) } else { (u, t) };
        prop_assert!(f.expectile(lo).unwrap() <= f.expectile(hi).unwrap() + 1e-12);
        let (a, b) = f.support();
        prop_assert!(e >= a - 1e-12 && e <= b + 1e-12);
    }

    #[test]
    fn es_dominates_var(f in discrete(), a in level()) {
        let var = FunctionalSpec::VaR(a).evaluate(&f).unwrap()[0];
        let es = FunctionalSpec::ES(a).evaluate(&f).unwrap()[0];
        prop_assert!(es >= var - 1e-12);
    }

    #[test]
    fn normal_es_dominates_var(mu in -3.0f64..3.0, sigma in 0.1f64..3.0, a in level()) {
        let f = Distribution::normal(mu, sigma).unwrap();
        let var = FunctionalSpec::VaR(a).evaluate(&f).unwrap()[0];
        let es = FunctionalSpec::ES(a).evaluate(&f).unwrap()[0];
        prop_assert!(es >= var - 1e-9);
    }

    #[test]
    fn pinball_argmin_invariant_under_transforms(f in discrete(), a in level(), c in 0.1f64..10.0) {
        let s = ScoreSpec::pinball(a).unwrap();
        let g = Grid::around(&f, 101, 1).unwrap();
        let base = brute_force_argmin(&s, &f, &g).unwrap();
        let scaled = brute_force_argmin(&s.apply_transform(Transform::Scale(c)).unwrap(), &f, &g).unwrap();
        let shifted = brute_force_argmin(
            &s.apply_transform(Transform::AddOffset(Integrand::new("sin", f64::sin))).unwrap(), &f, &g).unwrap();
        prop_assert!((base.x[0] - scaled.x[0]).abs() <= 1e-9);
        prop_assert!((base.x[0] - shifted.x[0]).abs() <= 1e-9);
    }

    #[test]
    fn normalized_scores_are_nonnegative(x in -10.0f64..10.0, y in -10.0f64..10.0, a in level()) {
        for s in [ScoreSpec::squared_error(), ScoreSpec::pinball(a).unwrap(),
                  ScoreSpec::expectile(a, ConvexSpec::square()).unwrap()] {
            let n = s.apply_transform(Transform::Normalize).unwrap();
            prop_assert!(n.score(&[x], y).unwrap() >= -1e-12);
            prop_assert!(n.score(&[y], y).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn dm_antisymmetric_and_scale_invariant(d in prop::collection::vec(-5.0f64..5.0, 8..80), c in 0.01f64..100.0) {
        prop_assume!(long_run_variance(&d, None).map(|l| !l.degenerate && l.sigma2 > 1e-6).unwrap_or(false));
        let a = dm_from_diffs(&d, 0.05, None).unwrap();
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let b = dm_from_diffs(&neg, 0.05, None).unwrap();
        prop_assert_eq!(a.t_n, -b.t_n);
        let scaled: Vec<f64> = d.iter().map(|v| c * v).collect();
        let s = dm_from_diffs(&scaled, 0.05, None).unwrap();
        prop_assert!((s.t_n - a.t_n).abs() <= 1e-9 * (1.0 + a.t_n.abs()));
        prop_assert!(long_run_variance(&d, None).unwrap().sigma2 > 0.0);
    }

    #[test]
    fn m_and_z_estimates_agree(y in prop::collection::vec(-10.0f64..10.0, 3..40), t in level()) {
        let mean = m_estimate(&ScoreSpec::squared_error(), &y, (-11.0, 11.0)).unwrap().theta[0];
        let zm = z_estimate(&IdentSpec::Mean, &y).unwrap().theta[0];
        prop_assert!((mean - zm).abs() < 1e-6);
        let s = ScoreSpec::expectile(t, ConvexSpec::square()).unwrap();
        let me = m_estimate(&s, &y, (-11.0, 11.0)).unwrap().theta[0];
        let ze = z_estimate(&IdentSpec::Expectile(t), &y).unwrap().theta[0];
        let le = fit_linear(&s, &RegressionData::intercept(&y).unwrap()).unwrap().theta[0];
        prop_assert!((me - ze).abs() < 1e-6 && (le - ze).abs() < 1e-6);
    }
}
