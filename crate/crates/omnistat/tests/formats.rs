use std::path::Path;

use omnistat::config::{ExperimentConfig, Mode, Preset};
use omnistat::experiment::{setup, train};
use omnistat::families::{FamilySpec, LossSpec};
use omnistat::formats::{gridfn_from_row, gridfn_to_row, read_basis, read_certificates, read_model, write_basis, write_certificates, write_model};
use omnistat_core::cvxbasis::{approximate_relu, build_cvx_basis};
use omnistat_core::gridfn::GridFunction;
use omnistat_core::losses::GlmLink;
use proptest::prelude::*;

fn loss_spec() -> impl Strategy<Value = LossSpec> {
    prop_oneof![
        Just(LossSpec::Absolute),
        (2u32..20).prop_map(LossSpec::Lp),
        (0.001f64..0.999).prop_map(LossSpec::Newsvendor),
        prop::sample::select(vec![GlmLink::Quadratic, GlmLink::Softplus, GlmLink::Quartic]).prop_map(LossSpec::Glm),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop::sample::select(vec![Preset::Glm, Preset::Moments, Preset::Cvx]),
        1e-3f64..2.0,
        prop::collection::vec(loss_spec(), 1..5),
        (2usize..40, 2usize..30, 0..=i64::MAX as u64),
        (1usize..64, any::<bool>(), 0..=i64::MAX as u64, prop::option::of(1usize..1_000_000), 1.0f64..1e12),
    )
        .prop_map(|(preset, epsilon, losses, (side, y_points, seed), (hypotheses, sampled, sseed, n_override, budget))| {
            let mut cfg = ExperimentConfig::preset(preset);
            cfg.epsilon = epsilon;
            cfg.losses = losses;
            if let FamilySpec::Moments { degree } = &mut cfg.family {
                if preset == Preset::Moments {
                    *degree = 1 + (seed % 6) as usize;
                }
            }
            cfg.domain.side = side;
            cfg.domain.y_points = y_points;
            cfg.domain.seed = seed;
            cfg.hypotheses = hypotheses;
            cfg.mode = if sampled { Mode::Sampled } else { Mode::Exact };
            cfg.sampling.seed = sseed;
            cfg.sampling.n_override = n_override;
            cfg.sampling.sample_budget = budget;
            cfg
        })
}

proptest! {
    #[test]
    fn loss_specs_round_trip_through_text(spec in loss_spec()) {
        prop_assert_eq!(spec.to_string().parse::<LossSpec>().unwrap(), spec);
    }

    #[test]
    fn configs_round_trip_through_toml(cfg in config()) {
        prop_assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn grid_function_rows_are_lossless(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..64)) {
        let f = GridFunction::new(values).unwrap();
        prop_assert_eq!(gridfn_from_row(Path::new("row"), &gridfn_to_row(&f)).unwrap(), f);
    }
}

#[test]
fn basis_dumps_and_certificates_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..3 {
        let basis = build_cvx_basis(1.0 / 32.0, seed).unwrap();
        let dir = tmp.path().join(format!("basis{seed}"));
        write_basis(&dir, &basis).unwrap();
        assert_eq!(read_basis(&dir).unwrap(), basis);
        let certs: Vec<_> = (0..basis.m()).map(|j| approximate_relu(&basis, j).unwrap()).collect();
        let file = dir.join("certificates.csv");
        write_certificates(&file, &certs).unwrap();
        let back = read_certificates(&file).unwrap();
        assert_eq!(back.len(), certs.len());
        for (c, (target, err, lambda)) in certs.iter().zip(back) {
            assert_eq!((c.target.as_str(), c.sup_error, c.lambda), (target.as_str(), err, lambda));
        }
    }
}

#[test]
fn trained_models_round_trip() {
    let cfg = ExperimentConfig::preset(Preset::Glm);
    let s = setup(&cfg).unwrap();
    let model = train(&s).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_model(tmp.path(), &model, &cfg.family, &cfg.actions).unwrap();
    let back = read_model(tmp.path()).unwrap();
    assert_eq!(back.q, model.q);
    assert_eq!(back.doc.family, cfg.family);
    assert_eq!(back.doc.loops, model.loops());
    assert_eq!(back.doc.wl_calls, model.wl_calls());
    assert_eq!(back.doc.beta, model.config.beta);
    std::fs::write(tmp.path().join("model.toml"), "format_version = 99\n").unwrap();
    assert!(read_model(tmp.path()).is_err());
}
