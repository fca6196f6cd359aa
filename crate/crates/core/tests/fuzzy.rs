use fcnn_core::fuzzy::{
    fit_partitions, fuzzify, pi_function, s_function, Family, MembershipFn, PiParams, SParams, TermPartition,
    TERM_COUNT, TERM_NAMES,
};
use proptest::prelude::*;

mod common;
use common::sweep;

#[test]
fn ruspini_families_sum_to_one() {
    for family in [Family::Trapezoid, Family::Triangle, Family::Pi, Family::S] {
        let p = TermPartition::build(-2.0, 6.0, family).unwrap();
        for x in sweep(-2.0, 6.0, 10_001) {
            let sum: f64 = p.memberships(x).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{family} at {x}: {sum}");
        }
    }
}

#[test]
fn gaussian_neighbours_cross_at_half() {
    let p = TermPartition::build(0.0, 8.0, Family::Gaussian).unwrap();
    let c = p.centers();
    for k in 0..TERM_COUNT - 1 {
        let mid = 0.5 * (c[k] + c[k + 1]);
        let mu = p.memberships(mid);
        assert!((mu[k] - 0.5).abs() < 1e-12 && (mu[k + 1] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn centers_are_evenly_spaced_and_fully_member() {
    for family in Family::ALL {
        let p = TermPartition::build(10.0, 30.0, family).unwrap();
        assert_eq!(p.centers(), [10.0, 15.0, 20.0, 25.0, 30.0]);
        for (k, &c) in p.centers().iter().enumerate() {
            assert!((p.memberships(c)[k] - 1.0).abs() < 1e-12, "{family} term {k}");
        }
    }
    assert_eq!(TERM_NAMES.len(), TERM_COUNT);
}

#[test]
fn out_of_range_inputs_are_clamped() {
    let p = TermPartition::build(0.0, 1.0, Family::Triangle).unwrap();
    assert_eq!(p.memberships(-5.0), p.memberships(0.0));
    assert_eq!(p.memberships(7.0), p.memberships(1.0));
    assert_eq!(p.memberships(-5.0), [1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn constant_column_gets_unit_range() {
    let p = TermPartition::fit([3.0, 3.0, 3.0], Family::Trapezoid).unwrap();
    assert_eq!((p.lo(), p.hi()), (2.5, 3.5));
    assert!(TermPartition::fit(Vec::<f64>::new(), Family::Trapezoid).is_err());
    assert!(TermPartition::build(1.0, 1.0, Family::Pi).is_err());
    assert!(TermPartition::build(0.0, f64::INFINITY, Family::Pi).is_err());
}

#[test]
fn fitted_partitions_span_each_column() {
    let rows = vec![vec![1.0, -4.0], vec![3.0, 8.0], vec![2.0, 0.0]];
    let parts = fit_partitions(&rows, Family::Trapezoid).unwrap();
    assert_eq!((parts[0].lo(), parts[0].hi()), (1.0, 3.0));
    assert_eq!((parts[1].lo(), parts[1].hi()), (-4.0, 8.0));
    let m = fuzzify(&[3.0, -4.0], &parts).unwrap();
    assert_eq!(m.row(0), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(m.row(1), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(fuzzify(&[1.0], &parts).is_err());
}

#[test]
fn s_function_is_symmetric_about_crossover() {
    let p = SParams::new(-1.0, 0.5, 2.0).unwrap();
    for x in sweep(-1.0, 2.0, 301) {
        let mirrored = 1.0 - s_function(1.0 - x, &p);
        assert!((s_function(x, &p) - mirrored).abs() < 1e-12);
    }
    let pi = PiParams::new(1.0, 0.0).unwrap();
    for x in sweep(0.0, 2.0, 201) {
        assert!((pi_function(x, &pi) - pi_function(-x, &pi)).abs() < 1e-12);
    }
}

#[test]
fn partition_serde_round_trip() {
    for family in Family::ALL {
        let p = TermPartition::build(-1.25, 3.5, family).unwrap();
        let back: TermPartition = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
    let f: MembershipFn = serde_json::from_str(r#"{"shape":"left_shoulder","c":0.0,"d":1.0}"#).unwrap();
    assert_eq!(f.eval(0.5), 0.5);
}

#[test]
fn family_names_parse() {
    for f in Family::ALL {
        assert_eq!(f.name().parse::<Family>().unwrap(), f);
    }
    assert!("sigmoid".parse::<Family>().is_err());
}

fn any_family() -> impl Strategy<Value = Family> {
    (0usize..5).prop_map(|i| Family::ALL[i])
}

proptest! {
    #[test]
    fn memberships_stay_in_unit_interval(
        family in any_family(),
        lo in -1e3f64..1e3,
        width in 1e-3f64..1e3,
        x in -3e3f64..3e3,
    ) {
        let p = TermPartition::build(lo, lo + width, family).unwrap();
        for mu in p.memberships(x) {
            prop_assert!((0.0..=1.0).contains(&mu));
        }
    }

    #[test]
    fn edge_terms_are_monotone(family in any_family(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = TermPartition::build(0.0, 1.0, family).unwrap();
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let (mx, my) = (p.memberships(x), p.memberships(y));
        prop_assert!(mx[0] >= my[0] - 1e-12);
        prop_assert!(mx[TERM_COUNT - 1] <= my[TERM_COUNT - 1] + 1e-12);
    }

    #[test]
    fn trapezoid_partition_of_unity(lo in -1e4f64..1e4, width in 1e-2f64..1e4, t in 0.0f64..1.0) {
        let p = TermPartition::build(lo, lo + width, Family::Trapezoid).unwrap();
        let sum: f64 = p.memberships(lo + t * width).iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn at_most_two_terms_fire_for_linear_families(t in 0.0f64..1.0) {
        for family in [Family::Trapezoid, Family::Triangle, Family::Pi, Family::S] {
            let p = TermPartition::build(0.0, 1.0, family).unwrap();
            prop_assert!(p.memberships(t).iter().filter(|&&m| m > 0.0).count() <= 2);
        }
    }
}
