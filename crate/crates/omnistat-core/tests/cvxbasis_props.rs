use std::sync::Arc;

use omnistat_core::cvxbasis::{approximate_convex, approximate_interval, approximate_relu, build_cvx_basis, lift_to_unit_interval, relu_error_profile, Basis};
use omnistat_core::gridfn::{interval_indicator, relu, taylor_expand, GridFunction};
use omnistat_core::stats::StatisticsFamily;
use proptest::prelude::*;

fn residual(basis: &Basis, target: &[f64], coefficients: &std::collections::BTreeMap<usize, f64>) -> f64 {
    (0..basis.m())
        .map(|y| (coefficients.iter().map(|(&e, &c)| c * basis.value(e, y)).sum::<f64>() - target[y]).abs())
        .fold(0.0, f64::max)
}

fn convex_lipschitz(m: usize) -> impl Strategy<Value = GridFunction> {
    (prop::collection::vec(-1.0f64..=1.0, m - 1), -(m as f64)..(m as f64)).prop_map(|(mut slopes, start)| {
        slopes.sort_by(f64::total_cmp);
        let mut values = vec![start];
        for s in slopes {
            values.push(values.last().unwrap() + s);
        }
        GridFunction::new(values).unwrap()
    })
}

#[test]
fn every_relu_certificate_is_within_one_sixth() {
    for delta in [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0] {
        let basis = build_cvx_basis(delta, 0).unwrap();
        let profile = relu_error_profile(&basis).unwrap();
        for (j, &e) in profile.iter().enumerate() {
            assert!(e <= 1.0 / 6.0, "m={} j={j}: {e}", basis.m());
        }
        for j in (0..basis.m()).step_by(basis.m() / 16) {
            let cert = approximate_relu(&basis, j).unwrap();
            let target = relu(j, basis.m()).unwrap();
            let fresh = residual(&basis, target.values(), &cert.coefficients);
            assert!((fresh - cert.sup_error).abs() <= 1e-9);
            assert!((profile[j] - cert.sup_error).abs() <= 1e-9);
        }
    }
}

#[test]
fn interval_certificates_are_honest() {
    let basis = build_cvx_basis(1.0 / 32.0, 3).unwrap();
    for (a, b) in [(0, 31), (3, 17), (8, 15), (30, 30)] {
        let cert = approximate_interval(&basis, a, b).unwrap();
        let target = interval_indicator(a, b, 32).unwrap();
        assert!((residual(&basis, target.values(), &cert.coefficients) - cert.sup_error).abs() <= 1e-9);
    }
}

#[test]
fn size_over_m_decreases() {
    let ratios: Vec<f64> = [256.0, 1024.0, 4096.0]
        .iter()
        .map(|m: &f64| {
            let b = build_cvx_basis(1.0 / m, 0).unwrap();
            b.len() as f64 / b.m() as f64
        })
        .collect();
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convex_certificates_hold(f in convex_lipschitz(64), seed in 0u64..4) {
        let basis = build_cvx_basis(1.0 / 64.0, seed).unwrap();
        let cert = approximate_convex(&basis, &f, 1e-9).unwrap();
        prop_assert!(cert.sup_error <= 0.5 + 1e-9);
        prop_assert!((residual(&basis, f.values(), &cert.coefficients) - cert.sup_error).abs() <= 1e-9);
        let t = taylor_expand(&f).unwrap();
        prop_assert!(t.c1.abs() + t.c2.iter().map(|c| c.abs()).sum::<f64>() <= 3.0 + 1e-9);
    }

    #[test]
    fn lifted_convex_functions_are_within_three_halves_delta(theta in 0.0f64..1.0, s in -1.0f64..=1.0, k in 0usize..4, inv in prop::sample::select(vec![16usize, 64])) {
        let delta = 1.0 / inv as f64;
        let stats = lift_to_unit_interval(Arc::new(build_cvx_basis(delta, 0).unwrap()), delta);
        let g = move |x: f64| match k {
            0 => s * x,
            1 => (x - theta).max(0.0),
            2 => (x - theta).abs(),
            _ => 0.5 * (x - theta) * (x - theta),
        };
        let approx = stats.approximate(g, 1e-9).unwrap();
        let mut row = vec![0.0; stats.d()];
        let mut worst = 0.0f64;
        for i in 0..=10_000 {
            let y = i as f64 / 10_000.0;
            stats.eval_into(y, &mut row);
            let v = approx.r0 + approx.r.iter().zip(&row).map(|(r, s)| r * s).sum::<f64>();
            worst = worst.max((v - g(y)).abs());
        }
        prop_assert!(worst <= 1.5 * delta + 1e-9, "error {worst} at delta {delta}");
    }
}
