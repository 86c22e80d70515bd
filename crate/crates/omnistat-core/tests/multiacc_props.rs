use omnistat_core::dist::{FiniteDistribution, SampleSource};
use omnistat_core::multiacc::{correlations, exhaustive_weak_learner, ma_loop, ExhaustiveLearner, Provenance, Residual, TestClass, WeakLearnerSpec};
use omnistat_core::stats::MomentFamily;
use proptest::prelude::*;

/// Weights, a target in `[-1, 1]` and raw tests with their negations.
fn instance(max_abs: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    (2usize..20, 1usize..5).prop_flat_map(move |(n, k)| {
        (
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(-1.0f64..=1.0, n),
            prop::collection::vec(prop::collection::vec(-max_abs..=max_abs, n), k),
        )
            .prop_map(|(w, t, tests)| {
                let total: f64 = w.iter().sum();
                let w = w.iter().map(|v| v / total).collect();
                let mut all = tests.clone();
                all.extend(tests.iter().map(|b| b.iter().map(|v| -v).collect()));
                (w, t, all)
            })
    })
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("b{j}")).collect()
}

fn raw_gap(weights: &[f64], target: &[f64], q: &[f64], tests: &[Vec<f64>]) -> f64 {
    tests
        .iter()
        .map(|b| b.iter().zip(weights).zip(target.iter().zip(q)).map(|((bv, w), (t, v))| w * bv * (t - v)).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn ma_stays_in_range_and_potential_drops((w, t, tests) in instance(1.0), q0 in prop::collection::vec(-1.0f64..=1.0, 20), alpha in 0.05f64..0.3) {
        let tc = TestClass::new(names(tests.len()), tests.clone()).unwrap();
        let q0 = &q0[..w.len()];
        let rho = 2.0 * alpha / 3.0;
        let spec = WeakLearnerSpec::new(rho, rho / 2.0).unwrap();
        let mut wl = ExhaustiveLearner::new(spec);
        let mut residual = Residual::Exact { weights: &w, target: &t };
        let run = ma_loop(q0, &tc, &mut wl, alpha, &mut residual, Some(&t), Some(&w), None).unwrap();
        prop_assert!(run.q.iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(run.potentials.len(), run.t + 1);
        for pair in run.potentials.windows(2) {
            prop_assert!(pair[0] - pair[1] >= run.sigma * run.sigma - 1e-12, "drop {} < sigma^2", pair[0] - pair[1]);
        }
        let total = run.potentials[0] - run.potentials[run.t];
        prop_assert!(total >= run.t as f64 * run.sigma * run.sigma - 1e-9);
        prop_assert!(raw_gap(&w, &t, &run.q, &tests) < alpha + 1e-12);
        prop_assert_eq!(wl.calls, run.wl_calls);
    }

    #[test]
    fn exact_weak_learner_is_sound((w, t, tests) in instance(1.0), q in prop::collection::vec(-1.0f64..=1.0, 20), rho in 0.02f64..0.5) {
        let tc = TestClass::new(names(tests.len()), tests).unwrap();
        let q = &q[..w.len()];
        let spec = WeakLearnerSpec::new(rho, rho / 2.0).unwrap();
        let corr = correlations(&tc, &mut Residual::Exact { weights: &w, target: &t }, q, 0).unwrap();
        let best = corr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match exhaustive_weak_learner(&tc, &spec, &mut Residual::Exact { weights: &w, target: &t }, q).unwrap() {
            Some(b) => prop_assert!(corr[b] >= spec.sigma),
            None => prop_assert!(best < spec.rho),
        }
    }

    #[test]
    fn normalized_tests_certify_raw_multiaccuracy((w, t, tests) in instance(4.0), alpha in 0.1f64..0.3) {
        let tc = TestClass::normalized(names(tests.len()), tests.clone(), Provenance::Raw).unwrap();
        let kappa = tc.kappa();
        prop_assert!(kappa >= 1.0);
        for (j, b) in tests.iter().enumerate() {
            for (x, v) in b.iter().enumerate() {
                prop_assert!((tc.value(j, x) * kappa - v).abs() <= 1e-12);
            }
        }
        let rho = 2.0 * alpha / 3.0;
        let spec = WeakLearnerSpec::new(rho, rho / 2.0).unwrap().scaled(kappa);
        let mut wl = ExhaustiveLearner::new(spec);
        let run = ma_loop(&vec![0.0; w.len()], &tc, &mut wl, alpha / kappa, &mut Residual::Exact { weights: &w, target: &t }, None, None, None).unwrap();
        prop_assert!(raw_gap(&w, &t, &run.q, &tests) < alpha + 1e-12);
    }
}

#[test]
fn sampled_weak_learner_rarely_misses_a_strong_test() {
    // Two points; the test `b = (1, -1)` has correlation 0.175 with `f = ½(s - q)`.
    let dist = FiniteDistribution::new(vec![0.5, 0.5], vec![vec![(1.0, 0.85), (0.0, 0.15)], vec![(1.0, 0.15), (0.0, 0.85)]]).unwrap();
    let fam = MomentFamily::new(1);
    let tests = vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0], vec![-1.0, -1.0]];
    let tc = TestClass::new(names(4), tests).unwrap();
    let q = [0.5, 0.5];
    let spec = WeakLearnerSpec::new(0.16, 0.08).unwrap();
    let data = dist.exact(&fam);
    let exact = correlations(&tc, &mut Residual::Exact { weights: &data.weights, target: &data.cond.column(0) }, &q, 0).unwrap();
    assert!(exact[0] >= spec.rho);
    let mut failures = 0;
    for seed in 0..100 {
        let mut sampler = dist.sampler(&fam, seed);
        assert!(!sampler.exhaustive());
        match exhaustive_weak_learner(&tc, &spec, &mut Residual::Sampled { source: &mut sampler, dim: 0 }, &q).unwrap() {
            Some(b) if exact[b] >= spec.sigma => {}
            _ => failures += 1,
        }
    }
    assert!(failures <= 5, "{failures} failures in 100 runs");
}
