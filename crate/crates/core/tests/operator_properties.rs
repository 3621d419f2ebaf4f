mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pucci_duality(seed in any::<u64>()) {
        prop_assert!(common::pucci_duality(seed).is_ok(), "{:?}", common::pucci_duality(seed));
    }

    #[test]
    fn pucci_subadditivity(seed in any::<u64>()) {
        prop_assert!(common::pucci_subadditivity(seed).is_ok(), "{:?}", common::pucci_subadditivity(seed));
    }

    #[test]
    fn operators_are_degenerate_elliptic(seed in any::<u64>()) {
        prop_assert!(common::monotonicity(seed).is_ok(), "{:?}", common::monotonicity(seed));
    }

    #[test]
    fn envelopes_are_ordered(seed in any::<u64>()) {
        prop_assert!(common::envelope_ordering(seed).is_ok(), "{:?}", common::envelope_ordering(seed));
    }

    #[test]
    fn structure_condition_holds(seed in any::<u64>()) {
        prop_assert!(common::structure_sampling(seed).is_ok(), "{:?}", common::structure_sampling(seed));
    }

    #[test]
    fn reflection_is_an_involution(seed in any::<u64>()) {
        prop_assert!(common::reflect_involution(seed).is_ok(), "{:?}", common::reflect_involution(seed));
    }

    #[test]
    fn operators_are_positively_homogeneous(seed in any::<u64>()) {
        prop_assert!(common::homogeneity(seed).is_ok(), "{:?}", common::homogeneity(seed));
    }
}

/// Midpoint concavity of `F_*` and convexity of `F^*` in the Hessian, by
/// sampling: the envelopes must have the shape their names promise.
#[test]
fn envelopes_have_the_right_convexity() {
    use lespectra::operators::{lower_envelope, upper_envelope};
    for seed in 0..2000u64 {
        let r = &mut common::rng(seed);
        let spec = common::random_spec(r);
        let (a, b) = (common::random_jet(r), common::random_jet(r));
        let mid = (
            0.5 * (a.0 + b.0),
            [0.5 * (a.1[0] + b.1[0]), 0.5 * (a.1[1] + b.1[1])],
            a.2.add(&b.2).scale(0.5),
        );
        let lo = lower_envelope(&spec).spec;
        let hi = upper_envelope(&spec).spec;
        let tol = 1e-9 * (1.0 + common::eval(&spec, &a).abs() + common::eval(&spec, &b).abs());
        let cav = common::eval(&lo, &mid) - 0.5 * (common::eval(&lo, &a) + common::eval(&lo, &b));
        let vex = 0.5 * (common::eval(&hi, &a) + common::eval(&hi, &b)) - common::eval(&hi, &mid);
        assert!(cav >= -tol, "lower envelope not concave for seed {seed}: {cav}");
        assert!(vex >= -tol, "upper envelope not convex for seed {seed}: {vex}");
    }
}
