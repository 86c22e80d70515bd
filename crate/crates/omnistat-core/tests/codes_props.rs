use omnistat_core::codes::{build_code_matrix, gram_offdiag_max, rank_for, CodeKind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn built_codes_meet_their_certificate(n in 1usize..160, mu in 0.15f64..1.0, seed in any::<u64>()) {
        let v = build_code_matrix(n, mu, seed).unwrap();
        prop_assert_eq!(v.n(), n);
        for i in 0..n {
            prop_assert!((v.gram(i, i) - 1.0).abs() <= 1e-12);
        }
        prop_assert!(gram_offdiag_max(&v) <= mu);
        prop_assert!(v.k() <= rank_for(n, mu).max(n.next_power_of_two()));
        if v.kind() == CodeKind::Random {
            prop_assert!(v.k() <= rank_for(n, mu));
        }
        prop_assert_eq!(build_code_matrix(n, mu, seed).unwrap(), v);
    }
}

#[test]
fn random_branch_at_the_acceptance_size() {
    let v = build_code_matrix(1024, 0.25, 0).unwrap();
    assert_eq!(v.kind(), CodeKind::Random);
    assert_eq!(v.k(), rank_for(1024, 0.25));
    assert!(gram_offdiag_max(&v) <= 0.25);
}

#[test]
fn hadamard_branch_is_orthogonal() {
    let v = build_code_matrix(48, 0.05, 7).unwrap();
    assert_eq!(v.kind(), CodeKind::Hadamard);
    assert_eq!(v.k(), 64);
    assert!(gram_offdiag_max(&v) <= 1e-12);
}

#[test]
fn seeds_change_random_codes() {
    let a = build_code_matrix(256, 0.5, 1).unwrap();
    let b = build_code_matrix(256, 0.5, 2).unwrap();
    assert_eq!(a.kind(), CodeKind::Random);
    assert_ne!(a.signs(), b.signs());
}
