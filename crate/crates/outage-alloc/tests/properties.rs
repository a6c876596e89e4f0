//! Property tests for the invariants that every scheduler output must keep.

use proptest::prelude::*;

use outage_alloc::{
    solve_p1_optimal, solve_p3, validate_profile, EhTrace, OutageCurve, Thresholds,
};

fn thresholds() -> (OutageCurve, Thresholds) {
    let curve = OutageCurve::rayleigh(1.0).unwrap();
    let th = Thresholds::compute(&curve, 1e-9).unwrap();
    (curve, th)
}

proptest! {
    #[test]
    fn outage_is_a_decreasing_probability(
        beta in 0.5f64..10.0,
        rate in 0.1f64..4.0,
        p1 in 1e-3f64..50.0,
        bump in 1e-3f64..50.0,
    ) {
        let curve = OutageCurve::weibull(beta, rate).unwrap();
        let lo = curve.outage(p1).unwrap();
        let hi = curve.outage(p1 + bump).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi <= lo, "F must not increase: F({p1}) = {lo}, F({}) = {hi}", p1 + bump);
        prop_assert_eq!(curve.outage(0.0).unwrap(), 1.0);
    }

    #[test]
    fn single_period_solution_structure(
        q1 in 0.0f64..3.0,
        m in 1usize..24,
    ) {
        let (curve, th) = thresholds();
        let sol = solve_p3(&curve, &th, q1, m, 1e-3).unwrap();

        // Budget met with equality.
        let spent: f64 = sol.profile.iter().sum();
        prop_assert!((spent - q1 * m as f64).abs() <= 1e-9 * (1.0 + q1 * m as f64));

        // Non-decreasing over the block index.
        for w in sol.profile.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }

        // At most one strictly positive power below the inflection.
        let below = sol.profile.iter().filter(|&&p| p > 1e-12 && p < th.p_b - 1e-12).count();
        prop_assert!(below <= 1, "profile {:?}", sol.profile);

        // Everything strictly above the inflection is one identical level.
        let above: Vec<f64> =
            sol.profile.iter().copied().filter(|&p| p > th.p_b + 1e-12).collect();
        for &p in &above {
            prop_assert!((p - above[0]).abs() <= 1e-9 * (1.0 + above[0]), "profile {:?}", sol.profile);
        }
    }

    #[test]
    fn full_trace_solution_is_feasible_and_monotone(
        rates in prop::collection::vec(0.0f64..3.0, 1..6),
        m in 1usize..4,
    ) {
        let (curve, th) = thresholds();
        let trace = EhTrace::new(rates, m).unwrap();
        let profile = solve_p1_optimal(&curve, &th, &trace, 1e-3).unwrap();
        let report = validate_profile(&profile, &trace).unwrap();
        prop_assert!(report.is_clean(), "{:?}", report.violations);
        for w in profile.blocks().windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
    }
}
