use std::sync::Arc;

use omnistat_core::losses::{
    absolute, chebyshev_degree, chebyshev_monomial, cvx_family, glm_family, glm_loss, lp_cheb_family, lp_integer_residual, lp_loss, lp_monomial_family,
    newsvendor, GlmLink, Loss,
};
use omnistat_core::stats::{choose_action, eval_lhat, unit_grid, verify_uniform_approx, ActionSpace, MomentFamily, StatisticsFamily, UniformApproximation};
use proptest::prelude::*;

fn actions() -> ActionSpace {
    ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap()
}

/// Every shipped family with its loss, statistics and audit grid.
fn shipped() -> Vec<(Loss, UniformApproximation, Arc<dyn StatisticsFamily>, Vec<f64>)> {
    let a = actions();
    let mut out: Vec<(Loss, UniformApproximation, Arc<dyn StatisticsFamily>, Vec<f64>)> = Vec::new();
    for p in [2, 4, 8] {
        out.push((lp_loss(p).unwrap(), lp_monomial_family(p, &a).unwrap(), Arc::new(MomentFamily::new(p as usize)), unit_grid(1001)));
    }
    for p in [2, 4] {
        let ua = lp_cheb_family(p, 0.05, &a).unwrap();
        let fam = Arc::new(MomentFamily::new(ua.d));
        out.push((lp_loss(p).unwrap(), ua, fam, unit_grid(1001)));
    }
    let s1 = Arc::new(MomentFamily::new(1));
    for link in [GlmLink::Quadratic, GlmLink::Softplus, GlmLink::Quartic] {
        out.push((glm_loss(link, s1.clone()), glm_family(link, s1.as_ref(), &a).unwrap(), s1.clone(), unit_grid(1001)));
    }
    let cvx = cvx_family(0.125, 0).unwrap();
    for loss in [newsvendor(0.2).unwrap(), newsvendor(0.8).unwrap(), absolute()] {
        let ua = cvx.approximation(&loss, &a).unwrap();
        out.push((loss, ua, cvx.statistics(), cvx.audit_grid()));
    }
    out
}

#[test]
fn shipped_triples_recertify() {
    for (loss, ua, fam, grid) in shipped() {
        let (res, lambda) = verify_uniform_approx(&ua, &loss, fam.as_ref(), &grid).unwrap();
        assert!(res <= ua.delta + 1e-12, "{}: residual {res} > delta {}", loss.id(), ua.delta);
        assert!(lambda <= ua.lambda * (1.0 + 1e-12), "{}: lambda {lambda} > {}", loss.id(), ua.lambda);
    }
}

#[test]
fn monomial_expansions_are_exact() {
    let a = actions();
    let one = a.nearest(&[1.0]);
    for p in [2u32, 4, 8] {
        assert_eq!(lp_integer_residual(p, 64).unwrap(), 0);
        let ua = lp_monomial_family(p, &a).unwrap();
        let lambda_one: f64 = ua.r(one).unwrap().iter().map(|r| r.abs()).sum();
        assert_eq!(lambda_one, 2f64.powi(p as i32));
    }
}

#[test]
fn glm_lambda_is_at_most_d_plus_one() {
    for lo_hi in [(0.0, 1.0), (-1.0, 1.0), (0.25, 0.5)] {
        let a = ActionSpace::scalar_grid(lo_hi.0, lo_hi.1, 9).unwrap();
        let s1 = MomentFamily::new(1);
        for link in [GlmLink::Quadratic, GlmLink::Softplus, GlmLink::Quartic] {
            let ua = glm_family(link, &s1, &a).unwrap();
            let (res, lambda) = verify_uniform_approx(&ua, &glm_loss(link, Arc::new(MomentFamily::new(1))), &s1, &unit_grid(1001)).unwrap();
            assert!(res <= 1e-12);
            assert!(lambda <= 2.0 + 1e-12, "{link:?} on {lo_hi:?}: {lambda}");
        }
    }
}

#[test]
fn chebyshev_example_degree() {
    assert_eq!(chebyshev_degree(8, 1e-2), 7);
}

proptest! {
    #[test]
    fn chebyshev_certificate_is_the_measured_error(n in 1u32..=64, eps in 1e-4f64..0.9) {
        let c = chebyshev_monomial(n, eps).unwrap();
        prop_assert_eq!(c.d, chebyshev_degree(n, eps));
        prop_assert!(c.grid_error <= c.tail + 1e-12);
        prop_assert!(c.grid_error >= c.tail - 1e-12);
        prop_assert_eq!(c.numerators.len(), c.d + 1);
    }

    #[test]
    fn choose_action_ignores_positive_scaling_and_shifts(v in prop::collection::vec(-1.0f64..1.0, 4), c in 0.01f64..100.0, shift in -10.0f64..10.0) {
        let a = actions();
        let ua = lp_monomial_family(4, &a).unwrap();
        let fam = MomentFamily::new(4);
        let rows: Vec<Vec<f64>> = (0..a.len())
            .map(|t| {
                let mut r: Vec<f64> = ua.r(t).unwrap().iter().map(|x| c * x).collect();
                r[0] += shift;
                r
            })
            .collect();
        let moved = UniformApproximation::from_table(&fam, "moved", a.clone(), rows, 0.0, 1.0).unwrap();
        let before = choose_action(&ua, &v);
        let after = choose_action(&moved, &v);
        let gap = eval_lhat(&ua, &v, after).unwrap() - eval_lhat(&ua, &v, before).unwrap();
        prop_assert!(before == after || gap.abs() <= 1e-9 * (1.0 + eval_lhat(&ua, &v, before).unwrap().abs()), "{before} vs {after}");
    }

    #[test]
    fn expected_statistics_approximate_expected_loss(weights in prop::collection::vec(0.0f64..1.0, 1..12), picks in prop::collection::vec(any::<prop::sample::Index>(), 12)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        for (loss, ua, fam, grid) in shipped() {
            let ys: Vec<f64> = weights.iter().zip(&picks).map(|(_, i)| grid[i.index(grid.len())]).collect();
            let mut mean = vec![0.0; fam.d()];
            for (y, w) in ys.iter().zip(&weights) {
                for (m, s) in mean.iter_mut().zip(fam.eval(*y)) {
                    *m += w / total * s;
                }
            }
            for (t, action) in ua.actions.iter().enumerate() {
                let expected: f64 = ys.iter().zip(&weights).map(|(y, w)| w / total * loss.eval(*y, action)).sum::<f64>() / ua.scale;
                let approx = eval_lhat(&ua, &mean, t).unwrap();
                prop_assert!((approx - expected).abs() <= ua.delta + 1e-9, "{}: {approx} vs {expected}", loss.id());
            }
        }
    }
}
