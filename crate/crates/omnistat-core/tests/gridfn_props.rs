use omnistat_core::gridfn::{
    delta, delta2, dyadic_decompose, interval_indicator, is_discrete_convex_lipschitz, reconstruct_from_taylor, relu, taylor_expand, GridFunction,
};
use proptest::prelude::*;

fn grid_function(max_m: usize) -> impl Strategy<Value = GridFunction> {
    prop::collection::vec(-100.0f64..100.0, 3..=max_m).prop_map(|v| GridFunction::new(v).unwrap())
}

/// Convex and 1-Lipschitz: sorted slopes in `[-1, 1]` from a random start.
fn convex_lipschitz(max_m: usize) -> impl Strategy<Value = GridFunction> {
    (prop::collection::vec(-1.0f64..=1.0, 2..max_m), -50.0f64..50.0).prop_map(|(mut slopes, start)| {
        slopes.sort_by(f64::total_cmp);
        let mut values = vec![start];
        for s in slopes {
            values.push(values.last().unwrap() + s);
        }
        GridFunction::new(values).unwrap()
    })
}

proptest! {
    #[test]
    fn taylor_round_trip(f in grid_function(128)) {
        let t = taylor_expand(&f).unwrap();
        let g = reconstruct_from_taylor(t.c0, t.c1, &t.c2, f.m()).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn convex_second_differences_telescope(f in convex_lipschitz(96)) {
        prop_assume!(is_discrete_convex_lipschitz(&f, 0.0));
        let d1 = delta(&f).unwrap();
        let d2 = delta2(&f).unwrap();
        let mass: f64 = d2.values().iter().map(|v| v.abs()).sum();
        let span = d1.at(d1.m() - 1) - d1.at(0);
        prop_assert!((mass - span).abs() <= 1e-9);
        prop_assert!(mass <= 2.0 + 1e-12);
        prop_assert!(d1.at(0).abs() <= 1.0);
    }

    #[test]
    fn relu_difference_is_a_suffix_indicator(m in 2usize..200, a_frac in 0.0f64..1.0) {
        let a = ((m - 1) as f64 * a_frac) as usize;
        prop_assume!(a + 1 < m);
        let diff = relu(a, m).unwrap().sub(&relu(a + 1, m).unwrap()).unwrap();
        prop_assert_eq!(diff, interval_indicator(a + 1, m - 1, m).unwrap());
    }
}

#[test]
fn dyadic_cover_is_exact_for_every_range() {
    for r in 1..=8u32 {
        let m = 1usize << r;
        let bound = 2 * r as usize;
        for a in 0..m {
            for b in a..m {
                let pieces = dyadic_decompose(a, b, m).unwrap();
                assert!(pieces.len() <= bound, "m={m} [{a},{b}]: {} pieces", pieces.len());
                let mut next = a;
                for p in &pieces {
                    assert_eq!(p.start(), next, "m={m} [{a},{b}] not contiguous");
                    assert_eq!(p.start() % p.len(), 0, "unaligned block");
                    next = p.end() + 1;
                }
                assert_eq!(next, b + 1, "m={m} [{a},{b}] not covered");
            }
        }
    }
}

#[test]
fn taylor_example_on_a_parabola() {
    let f = GridFunction::from_fn(5, |y| (y * y) as f64).unwrap();
    let t = taylor_expand(&f).unwrap();
    assert_eq!((t.c0, t.c1), (0.0, 1.0));
    assert_eq!(t.c2, vec![2.0, 2.0, 2.0]);
}
