use omnistat_core::calibrate::exact_ece;
use omnistat_core::dist::{FiniteDistribution, Table};
use omnistat_core::losses::{lp_loss, lp_monomial_family};
use omnistat_core::multiacc::{compose_tests, measure_multiaccuracy, TestClass};
use omnistat_core::omni::{discretization_shift, evaluate_omni, indistinguishability_check, learn_omni, DataAccess, TrainConfig};
use omnistat_core::stats::{ActionSpace, MomentFamily, UniformApproximation};
use proptest::prelude::*;

const LABELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn distribution() -> impl Strategy<Value = FiniteDistribution> {
    (2usize..12).prop_flat_map(|n| {
        (prop::collection::vec(0.05f64..1.0, n), prop::collection::vec(prop::collection::vec(0.0f64..1.0, LABELS.len()), n)).prop_map(|(w, probs)| {
            let labels = probs.into_iter().map(|p| LABELS.iter().copied().zip(p.into_iter().map(|q| q + 0.01)).collect()).collect();
            FiniteDistribution::new(w, labels).unwrap()
        })
    })
}

/// Squared loss over eleven actions with hypotheses drawn from `picks`.
fn setup(n: usize, picks: &[usize]) -> (UniformApproximation, Vec<Vec<usize>>, Vec<TestClass>) {
    let actions = ActionSpace::scalar_grid(0.0, 1.0, 11).unwrap();
    let ua = lp_monomial_family(2, &actions).unwrap();
    let mut hyps = vec![vec![0; n], vec![10; n]];
    hyps.push((0..n).map(|x| picks[x % picks.len()] % 11).collect());
    hyps.push((0..n).map(|x| picks[(x + 1) % picks.len()] % 11).collect());
    let classes = (1..=ua.d).map(|i| compose_tests(i, &[(&ua, &hyps)], &[]).unwrap()).collect();
    (ua, hyps, classes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trained_models_meet_their_guarantees(dist in distribution(), start in prop::collection::vec(-1.0f64..=1.0, 24), picks in prop::collection::vec(0usize..11, 1..6), epsilon in 0.4f64..1.0) {
        let fam = MomentFamily::new(2);
        let data = dist.exact(&fam);
        let (ua, hyps, classes) = setup(dist.n(), &picks);
        let cfg = TrainConfig::new(epsilon, ua.d, ua.lambda_tail).unwrap();
        let p0 = Table::new(dist.n(), 2, start[..2 * dist.n()].to_vec()).unwrap();
        let model = learn_omni(&fam, &p0, &cfg, &classes, DataAccess::Exact(&data)).unwrap();

        prop_assert!(model.loops() as f64 <= model.loop_bound().unwrap());
        prop_assert!(model.wl_calls() as f64 <= model.wl_call_bound());
        prop_assert!(exact_ece(&model.q, &data).unwrap() <= cfg.beta + 1e-12);
        for (i, tc) in classes.iter().enumerate() {
            let mut single = model.q.clone();
            for x in 0..dist.n() {
                for j in 0..2 {
                    if j != i {
                        single.set(x, j, data.cond.get(x, j));
                    }
                }
            }
            prop_assert!(measure_multiaccuracy(&single, &data, tc).unwrap() * tc.kappa() <= cfg.alpha + 1e-12);
        }
        for record in &model.log {
            if record.recalibrated {
                let (start, end) = (record.potential_start.unwrap(), record.potential_end.unwrap());
                prop_assert!(start - end >= cfg.beta * cfg.beta / 8.0 - 1e-12, "loop {} dropped {}", record.index, start - end);
            }
            prop_assert!(record.ma.iter().all(|m| m.monotone == Some(true)));
        }

        let loss = lp_loss(2).unwrap();
        let rep = indistinguishability_check(&model.q, &ua, &fam, &hyps, &dist).unwrap();
        let row = evaluate_omni(&model.q, &loss, &ua, &hyps, &dist).unwrap();
        prop_assert!(rep.identity_gap <= 1e-9);
        prop_assert!(rep.simulation_gap <= rep.simulation_bound() + 1e-12);
        prop_assert!(rep.cma_gap <= rep.cma_bound() + 1e-12);
        prop_assert!(row.regret <= rep.regret_bound() + 1e-12, "regret {} > {}", row.regret, rep.regret_bound());

        let again = learn_omni(&fam, &p0, &cfg, &classes, DataAccess::Exact(&data)).unwrap();
        prop_assert_eq!(&again, &model);
        for x in 0..dist.n() {
            let v = model.program.replay(p0.row(x), |dim, b| classes[dim].value(b, x));
            prop_assert_eq!(v, model.q.row(x).to_vec());
        }
    }

    #[test]
    fn discretization_moves_correlations_by_at_most_delta(dist in distribution(), values in prop::collection::vec(-1.0f64..=1.0, 24), picks in prop::collection::vec(0usize..11, 1..6), delta in 1e-4f64..0.5) {
        let fam = MomentFamily::new(2);
        let data = dist.exact(&fam);
        let n = dist.n();
        let p = Table::new(n, 2, values[..2 * n].to_vec()).unwrap();
        let (_, _, classes) = setup(n, &picks);
        for (dim, tc) in classes.iter().enumerate() {
            prop_assert!(discretization_shift(&p, delta, &data, tc, dim).unwrap() <= delta + 1e-12);
        }
    }
}
