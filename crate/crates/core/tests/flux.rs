use std::time::{Duration, Instant};

use num_bigint::BigInt;
use proptest::prelude::*;
use s4tower::flux::{
    cube_pairing, divisibility_sweep, hp1_cubed_ring, stable_divisibility_check, unstable_vanishing_check,
    witness_lift_argument, FiniteGradedRing, SCOPE,
};
use s4tower::par::Schedule;

fn class(a: i64, b: i64, c: i64) -> s4tower::flux::Element {
    let ring = hp1_cubed_ring();
    ring.from_coordinates(4, &[a.into(), b.into(), c.into()]).unwrap()
}

#[test]
fn sweep_matches_multinomial_oracle() {
    let ring = hp1_cubed_ring();
    let t = Instant::now();
    let rep = divisibility_sweep(&ring, 3, Schedule::Auto).unwrap();
    assert!(t.elapsed() < Duration::from_secs(1));
    assert_eq!((rep.checked, rep.admissible), (343, 343));
    assert!(rep.passed());
    assert_eq!(rep.min_nonzero, Some(BigInt::from(6)));
    for a in -3i64..=3 {
        for b in -3i64..=3 {
            for c in -3i64..=3 {
                // (au + bv + cw)³ = 6abc uvw once squares vanish
                assert_eq!(cube_pairing(&ring, &class(a, b, c)).unwrap(), BigInt::from(6 * a * b * c));
            }
        }
    }
}

#[test]
fn sequential_sweep_agrees() {
    let ring = hp1_cubed_ring();
    let a = divisibility_sweep(&ring, 3, Schedule::Auto).unwrap();
    let b = divisibility_sweep(&ring, 3, Schedule::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn witness_and_reports_carry_scope() {
    let t = witness_lift_argument();
    assert!(t.passed());
    assert!(t.to_markdown().contains(SCOPE));
    let json = serde_json::to_value(&t).unwrap();
    assert_eq!(json["pairing"], "6");
    let ring = hp1_cubed_ring();
    let rep = stable_divisibility_check(&ring, &class(1, 1, 1)).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["scope"], SCOPE);
    assert_eq!(json["divisibility"], 6);
}

#[test]
fn sweep_over_a_two_generator_ring() {
    // Z[a,b]/(a^3, b^2), |a| = |b| = 4, pairing a^2 b: x = s a + t b has x³ = 3 s² t a² b
    let ring = FiniteGradedRing::from_toml(
        "relations = [\"a^3\", \"b^2\"]\nfundamental_degree = 12\npairing = \"a^2 b\"\n[[generator]]\nname = \"a\"\ndegree = 4\n[[generator]]\nname = \"b\"\ndegree = 4\n",
    )
    .unwrap();
    let rep = divisibility_sweep(&ring, 2, Schedule::Auto).unwrap();
    assert_eq!(rep.checked, 25);
    // x² = s² a² + 2 s t a b is even iff s is even, and then 24 | 3 s² t
    assert_eq!(rep.admissible, 15);
    assert!(rep.counterexamples.is_empty());
    assert_eq!(rep.min_nonzero, Some(BigInt::from(12)));
    assert!(!rep.attains_six);
}

proptest! {
    #[test]
    fn pairing_is_cubic(a in -50i64..50, b in -50i64..50, c in -50i64..50, l in -20i64..20) {
        let ring = hp1_cubed_ring();
        let x = class(a, b, c);
        let lx = class(l * a, l * b, l * c);
        let p = cube_pairing(&ring, &x).unwrap();
        prop_assert_eq!(cube_pairing(&ring, &lx).unwrap(), p * BigInt::from(l).pow(3));
    }

    #[test]
    fn congruences_force_six(a in -1000i64..1000, b in -1000i64..1000, c in -1000i64..1000) {
        let ring = hp1_cubed_ring();
        let rep = stable_divisibility_check(&ring, &class(a, b, c)).unwrap();
        if rep.verdicts.iter().all(|v| v.holds) {
            prop_assert_eq!(rep.divisibility, 6);
            prop_assert!((rep.pairing % BigInt::from(6)) == BigInt::from(0));
        }
    }

    #[test]
    fn square_zero_kills_cube(a in -9i64..9) {
        // Z[s,t]/(s^2, t^2, s t), x² = 0 for every degree-4 x
        let ring = FiniteGradedRing::from_toml(
            "relations = [\"s^2\", \"t^2\", \"s t\"]\nfundamental_degree = 12\nwindow = 12\npairing = \"s\"\n[[generator]]\nname = \"s\"\ndegree = 12\n[[generator]]\nname = \"t\"\ndegree = 4\n",
        ).unwrap();
        let x = ring.from_coordinates(4, &[BigInt::from(a)]).unwrap();
        let rep = unstable_vanishing_check(&ring, &x).unwrap();
        prop_assert!(rep.verdicts[0].holds);
        prop_assert_eq!(rep.pairing, BigInt::from(0));
    }
}
