mod common;

use common::{random_instance, FAMILIES};
use mixlong::links::{thresholds_expand, Link, LinkSpec};
use proptest::prelude::*;

fn link(descriptor: &str) -> Link {
    Link::resolve(&LinkSpec::parse(descriptor).unwrap(), &[0.0, 2.0, 7.5, 20.0], None, 0.5, None).unwrap()
}

fn beta_eta() -> impl Strategy<Value = Vec<f64>> {
    (-1.5..1.5f64, -1.5..1.5f64, -0.5..0.5f64, prop_oneof![0.05..0.8f64, -0.8..-0.05f64])
        .prop_map(|(a, b, c, d)| vec![a, b, c, d])
}

fn spline_eta() -> impl Strategy<Value = Vec<f64>> {
    (-3.0..3.0f64, prop::collection::vec(0.05..1.5f64, 6)).prop_map(|(a, rest)| {
        let mut v = vec![a];
        v.extend(rest);
        v
    })
}

fn check_round_trip(l: &Link, eta: &[f64], y: f64) -> Result<(), TestCaseError> {
    let (lambda, logj) = l.inverse_transform(y, eta).unwrap();
    let back = l.forward_transform(lambda, eta).unwrap();
    let (again, _) = l.inverse_transform(back, eta).unwrap();
    prop_assert!((again - lambda).abs() < 1e-10 * (1.0 + lambda.abs()), "{y} -> {lambda} -> {back}");
    // on the marker scale the error is amplified by 1 / |dH⁻¹/dy|
    prop_assert!((back - y).abs() < 1e-9 * (1.0 + lambda.abs()) / logj.exp().min(1.0), "{y} -> {lambda} -> {back}");
    Ok(())
}

fn check_jacobian(l: &Link, eta: &[f64], y: f64) -> Result<(), TestCaseError> {
    let h = 1e-4;
    let (lo, hi) = ((y - h).max(l.min), (y + h).min(l.max));
    let numeric = (l.inverse_transform(hi, eta).unwrap().0 - l.inverse_transform(lo, eta).unwrap().0) / (hi - lo);
    let (_, logj) = l.inverse_transform(y, eta).unwrap();
    prop_assert!(
        (logj.exp() - numeric.abs()).abs() <= 1e-5 * numeric.abs().max(1e-3),
        "{} vs {numeric}",
        logj.exp()
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn beta_link_round_trip(eta in beta_eta(), y in 0.0..20.0f64) {
        check_round_trip(&link("beta"), &eta, y)?;
    }

    #[test]
    fn spline_link_round_trip(eta in spline_eta(), y in 0.0..20.0f64) {
        check_round_trip(&link("5-quant-splines"), &eta, y)?;
    }

    #[test]
    fn beta_jacobian_matches_difference_quotient(eta in beta_eta(), y in 0.5..19.5f64) {
        check_jacobian(&link("beta"), &eta, y)?;
    }

    #[test]
    fn spline_jacobian_matches_difference_quotient(eta in spline_eta(), y in 0.0..20.0f64) {
        check_jacobian(&link("5-equi-splines"), &eta, y)?;
    }

    #[test]
    fn thresholds_are_nondecreasing(eta in prop::collection::vec(-3.0..3.0f64, 1..8)) {
        let cuts = thresholds_expand(&eta);
        prop_assert_eq!(cuts[0], eta[0]);
        for w in cuts.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn thresholds_forward_counts_cuts(eta in prop::collection::vec(-2.0..2.0f64, 3), lambda in -6.0..6.0f64) {
        let l = Link::resolve(&LinkSpec::Thresholds, &[1.0, 2.0, 3.0, 4.0], None, 0.5, None).unwrap();
        let level = l.forward_transform(lambda, &eta).unwrap();
        let below = thresholds_expand(&eta).iter().filter(|&&c| lambda >= c).count();
        prop_assert_eq!(level, 1.0 + below as f64);
    }

    #[test]
    fn layout_pack_unpack_round_trip(seed in 0u64..10_000, f in 0usize..4) {
        let inst = random_instance(seed, FAMILIES[f]);
        let p = inst.model.layout.unpack(&inst.theta).unwrap();
        prop_assert_eq!(inst.model.layout.pack(&p), inst.theta);
    }
}
