mod common;

use common::{duplicated_two_class, oracle_loglik, random_instance, random_instance_with, FAMILIES};
use mixlong::likelihood::total_loglik;

#[test]
fn total_loglik_matches_brute_force() {
    for family in FAMILIES {
        for seed in 0..40 {
            let inst = random_instance(1000 * seed + family as u64, family);
            let lib = total_loglik(&inst.model, &inst.theta).unwrap();
            let oracle = oracle_loglik(&inst.model, &inst.data, &inst.theta);
            let ordinal = inst.spec.link.iter().any(|l| !l.is_continuous());
            let tol = if ordinal { 1e-6 } else { 1e-8 };
            assert!(
                (lib - oracle).abs() <= tol,
                "{family:?} seed {seed}: {lib} vs {oracle}\n{:?}",
                inst.spec
            );
        }
    }
}

#[test]
fn duplicated_classes_collapse_to_one_class() {
    for family in FAMILIES {
        for seed in 0..25 {
            let inst = random_instance_with(7 + 31 * seed + family as u64, family, Some(1));
            let one = total_loglik(&inst.model, &inst.theta).unwrap();
            let (m2, t2) = duplicated_two_class(&inst, seed);
            let two = total_loglik(&m2, &t2).unwrap();
            assert!((one - two).abs() <= 1e-10, "{family:?} seed {seed}: {one} vs {two}");
        }
    }
}
