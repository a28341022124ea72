use std::collections::HashSet;

use nilcay::cayley::{builtin_ball, BallOptions};
use nilcay::structure::{
    derived_isolator_witness, find_conjugator, CoordRule, is_closed, isolator_oracle, quotient_by_torsion, rank_report,
    torsion_subgroup, z_dagger, SubgroupWitness,
};
use nilcay::{builtin, Family, GroupElement};
use num_bigint::BigInt;
use proptest::prelude::*;

fn el(v: &[i64]) -> GroupElement {
    GroupElement::from_i64s(v)
}

#[test]
fn torsion_subgroups_are_closed_finite_and_normal() {
    for (f, order) in [
        (Family::Zn(2), 1),
        (Family::Heisenberg, 1),
        (Family::ZnCrossCyclic { n: 1, m: 2 }, 2),
        (Family::ZnCrossCyclic { n: 2, m: 6 }, 6),
        (Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 3 }), 3),
    ] {
        let p = builtin(f.clone()).unwrap().presentation;
        let mut t = torsion_subgroup(&p).unwrap();
        assert_eq!(t.order(), Some(order), "{f}");
        let set: HashSet<GroupElement> = t.elements().unwrap().into_iter().collect();
        assert!(is_closed(&p, &set).unwrap());
        for x in &set {
            assert!(p.power_i64(x, order as i64).unwrap().is_identity());
        }
        assert!(t.certify_normal(&p).unwrap());
    }
}

#[test]
fn quotient_drops_the_torsion_block() {
    let p = builtin(Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 3 }))
        .unwrap()
        .presentation;
    let q = quotient_by_torsion(&p).unwrap();
    assert_eq!(q.rank(), 3);
    assert!(q.is_torsion_free());
    let t = torsion_subgroup(&p).unwrap();
    assert!(rank_report(&p, &t).unwrap().passed());
}

#[test]
fn isolator_members_are_certified() {
    let ball = builtin_ball(Family::Heisenberg, 4, BallOptions::default()).unwrap();
    let p = ball.presentation();
    let trivial = SubgroupWitness::from_elements(p, vec![p.identity()]).unwrap();
    assert!(trivial.is_trivial());
    // H = <a^2, c>: coordinates (even, 0, any)
    let h = SubgroupWitness::from_rules(
        vec![el(&[2, 0, 0]), el(&[0, 0, 1])],
        vec![CoordRule::Multiple(BigInt::from(2)), CoordRule::Zero, CoordRule::Free],
    );
    let members = isolator_oracle(&ball, &h, 8).unwrap();
    assert!(members.contains(&(el(&[1, 0, 0]), 2)));
    assert!(members.contains(&(el(&[0, 0, 1]), 1)));
    assert!(members.iter().all(|(g, _)| g.exponents()[1] == BigInt::from(0)));
    let derived = derived_isolator_witness(&ball).unwrap();
    for (g, k) in isolator_oracle(&ball, &derived, 8).unwrap() {
        let gk = p.power_i64(&g, k as i64).unwrap();
        assert!(derived.contains(&gk));
        for j in 1..k {
            assert!(!derived.contains(&p.power_i64(&g, j as i64).unwrap()));
        }
    }
}

#[test]
fn z_dagger_is_central_and_in_the_isolator() {
    for f in [Family::Heisenberg, Family::product(Family::Heisenberg, Family::Zn(1))] {
        let ball = builtin_ball(f.clone(), 4, BallOptions::default()).unwrap();
        let p = ball.presentation();
        let derived = derived_isolator_witness(&ball).unwrap();
        let zd = z_dagger(&ball, 8).unwrap();
        assert!(!zd.is_empty());
        for z in &zd {
            assert!(p.is_central(z).unwrap());
            let certified = (1..=8).any(|k| derived.contains(&p.power_i64(z, k).unwrap()));
            assert!(certified, "{f}: {z}");
        }
    }
    // abelian groups have trivial derived subgroup
    let ball = builtin_ball(Family::Zn(2), 3, BallOptions::default()).unwrap();
    let zd = z_dagger(&ball, 8).unwrap();
    assert!(zd.iter().all(|z| z.is_identity()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conjugators_are_exact(a in prop::collection::vec(-2i64..=2, 3), g in prop::collection::vec(-1i64..=1, 3)) {
        let ball = builtin_ball(Family::Heisenberg, 3, BallOptions::default()).unwrap();
        let p = ball.presentation();
        let (a, g) = (el(&a), el(&g));
        prop_assume!(ball.contains(&g));
        let b = p.conjugate(&a, &g).unwrap();
        let (found, witness) = find_conjugator(&ball, &a, &b, 4).unwrap().expect("g itself conjugates");
        prop_assert_eq!(p.conjugate(&a, &found).unwrap(), b);
        prop_assert!(ball.dist_of(&found).unwrap() <= ball.dist_of(&g).unwrap());
        prop_assert_eq!(witness.distances.len(), 4);
    }
}

#[test]
fn non_conjugate_pairs_have_no_witness() {
    let ball = builtin_ball(Family::Heisenberg, 3, BallOptions::default()).unwrap();
    assert!(find_conjugator(&ball, &el(&[1, 0, 0]), &el(&[0, 1, 0]), 3).unwrap().is_none());
}
