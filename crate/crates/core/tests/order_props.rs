use std::cmp::Ordering;
use std::sync::Arc;

use nilcay::cayley::{builtin_ball, BallOptions, GenSet};
use nilcay::order::{analytic_distortion, classify_distorted, convexity_check, distortion_profile, BiOrder};
use nilcay::report::Verdict;
use nilcay::{builtin, Family, GroupElement, PcPresentation};
use proptest::prelude::*;

fn el(v: &[i64]) -> GroupElement {
    GroupElement::from_i64s(v)
}

fn tfn() -> Vec<Family> {
    vec![
        Family::Zn(1),
        Family::Zn(2),
        Family::Zn(3),
        Family::Heisenberg,
        Family::product(Family::Heisenberg, Family::Zn(1)),
    ]
}

fn setup(fi: usize) -> (Arc<PcPresentation>, BiOrder) {
    let p = Arc::new(builtin(tfn()[fi].clone()).unwrap().presentation);
    let o = BiOrder::new(Arc::clone(&p)).unwrap();
    (p, o)
}

fn element(p: &PcPresentation, raw: &[i64]) -> GroupElement {
    GroupElement::from_i64s(&raw[..p.rank()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn order_is_total_and_antisymmetric(fi in 0usize..5, a in prop::collection::vec(-9i64..9, 4), b in prop::collection::vec(-9i64..9, 4)) {
        let (p, o) = setup(fi);
        let (x, y) = (element(&p, &a), element(&p, &b));
        let xy = o.compare(&x, &y).unwrap();
        prop_assert_eq!(xy, o.compare(&y, &x).unwrap().reverse());
        prop_assert_eq!(xy == Ordering::Equal, x == y);
    }

    #[test]
    fn order_is_transitive(fi in 0usize..5, a in prop::collection::vec(-4i64..4, 4), b in prop::collection::vec(-4i64..4, 4), c in prop::collection::vec(-4i64..4, 4)) {
        let (p, o) = setup(fi);
        let mut v = [element(&p, &a), element(&p, &b), element(&p, &c)];
        v.sort_by(|x, y| o.compare(x, y).unwrap());
        prop_assert!(o.compare(&v[0], &v[2]).unwrap() != Ordering::Greater);
    }

    #[test]
    fn order_is_bi_invariant(fi in 0usize..5, a in prop::collection::vec(-9i64..9, 4), b in prop::collection::vec(-9i64..9, 4), g in prop::collection::vec(-9i64..9, 4), h in prop::collection::vec(-9i64..9, 4)) {
        let (p, o) = setup(fi);
        let (x, y, g, h) = (element(&p, &a), element(&p, &b), element(&p, &g), element(&p, &h));
        let gxh = p.multiply(&p.multiply(&g, &x).unwrap(), &h).unwrap();
        let gyh = p.multiply(&p.multiply(&g, &y).unwrap(), &h).unwrap();
        prop_assert_eq!(o.compare(&x, &y).unwrap(), o.compare(&gxh, &gyh).unwrap());
    }

    #[test]
    fn positive_cone_is_closed(fi in 0usize..5, a in prop::collection::vec(-9i64..9, 4), b in prop::collection::vec(-9i64..9, 4)) {
        let (p, o) = setup(fi);
        let (x, y) = (element(&p, &a), element(&p, &b));
        if o.sign(&x) == Ordering::Greater && o.sign(&y) == Ordering::Greater {
            prop_assert_eq!(o.sign(&p.multiply(&x, &y).unwrap()), Ordering::Greater);
        }
        prop_assert_eq!(o.sign(&p.inverse(&x).unwrap()), o.sign(&x).reverse());
    }
}

#[test]
fn torsion_rejects_an_order() {
    let p = Arc::new(builtin(Family::ZnCrossCyclic { n: 1, m: 2 }).unwrap().presentation);
    assert!(BiOrder::new(p).is_err());
}

#[test]
fn max_generator_lines_are_convex() {
    for f in tfn() {
        let g = builtin(f.clone()).unwrap();
        let p = Arc::new(g.presentation);
        let s = GenSet::new(&p, g.genset).unwrap();
        let o = BiOrder::new(Arc::clone(&p)).unwrap();
        let m = o.max_generator(&s).unwrap();
        for x in s.elements() {
            assert_ne!(o.compare(x, &m).unwrap(), Ordering::Greater);
        }
        let ball = builtin_ball(f.clone(), 5, BallOptions::default()).unwrap();
        assert!(convexity_check(&ball, &m, 5).unwrap().passed(), "{f}");
    }
}

#[test]
fn central_line_is_not_convex() {
    let ball = builtin_ball(Family::Heisenberg, 4, BallOptions::default()).unwrap();
    let err = convexity_check(&ball, &el(&[0, 0, 1]), 2);
    assert!(err.is_err() || !err.unwrap().passed());
}

#[test]
fn abelian_elements_are_undistorted() {
    let g = builtin(Family::Zn(2)).unwrap();
    let p = Arc::new(g.presentation);
    let s = GenSet::new(&p, g.genset).unwrap();
    let rep = classify_distorted(Arc::clone(&p), &s, &el(&[1, 1]), 16, 0.5, 200_000).unwrap();
    assert_eq!(rep.verdict, Verdict::Undistorted);
    let prof = distortion_profile(p, &s, &el(&[2, 1]), 16, 200_000).unwrap();
    assert!(prof.is_certified());
    for row in &prof.entries {
        assert_eq!(row.exact(), Some(3 * row.k));
    }
}

#[test]
fn heisenberg_centre_profile_bounds() {
    let g = builtin(Family::Heisenberg).unwrap();
    let p = Arc::new(g.presentation);
    let s = GenSet::new(&p, g.genset).unwrap();
    let prof = distortion_profile(Arc::clone(&p), &s, &el(&[0, 0, 1]), 64, 2_000_000).unwrap();
    for row in &prof.entries {
        assert!(row.lower <= row.upper);
    }
    let at = |k: u64| prof.entries.iter().find(|r| r.k == k).unwrap().exact();
    assert_eq!(at(1), Some(4));
    assert_eq!(at(4), Some(8));
    assert_eq!(analytic_distortion(&p, &el(&[0, 0, 1])), Some(true));
    assert_eq!(analytic_distortion(&p, &el(&[1, 0, 1])), Some(false));
}
