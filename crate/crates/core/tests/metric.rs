use std::sync::Arc;

use nilcay::cayley::{builtin_ball, generate_ball, Ball, BallOptions, Distance, GenSet, VertexMap, check_vertex_map};
use nilcay::verify::word_enumeration_distances;
use nilcay::{builtin, Family, GroupElement};
use num_bigint::BigUint;
use proptest::prelude::*;

fn el(v: &[i64]) -> GroupElement {
    GroupElement::from_i64s(v)
}

fn ball(f: Family, r: usize) -> Ball {
    builtin_ball(f, r, BallOptions::default()).unwrap()
}

fn families() -> Vec<Family> {
    vec![
        Family::Zn(1),
        Family::Zn(2),
        Family::Zn(3),
        Family::Heisenberg,
        Family::KleinBottle,
        Family::ZnCrossCyclic { n: 1, m: 2 },
        Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 3 }),
    ]
}

#[test]
fn z2_ball_sizes() {
    let big = ball(Family::Zn(2), 20);
    for r in 0..=20u32 {
        let n = big.distances().iter().filter(|&&d| d <= r).count();
        assert_eq!(n as u32, 2 * r * r + 2 * r + 1, "r = {r}");
    }
}

#[test]
fn z_and_z3_sizes() {
    assert_eq!(ball(Family::Zn(1), 7).len(), 15);
    // octahedral numbers
    let sizes: Vec<usize> = (0..5).map(|r| ball(Family::Zn(3), r).len()).collect();
    assert_eq!(sizes, vec![1, 7, 25, 63, 129]);
}

#[test]
fn ball_sizes_grow() {
    for f in families() {
        let mut prev = 0;
        for r in 0..=5 {
            let b = ball(f.clone(), r);
            assert!(b.len() > prev, "{f} at radius {r}");
            prev = b.len();
        }
    }
}

#[test]
fn bfs_matches_word_enumeration() {
    for f in families() {
        let b = ball(f.clone(), 4);
        let oracle = word_enumeration_distances(b.presentation(), b.genset().elements(), 4).unwrap();
        assert_eq!(oracle.len(), b.len(), "{f}");
        for (g, d) in oracle {
            assert_eq!(b.dist_of(&g), Some(d), "{f}: {g}");
        }
    }
}

#[test]
fn vertex_budget_is_enforced() {
    let err = builtin_ball(Family::Zn(3), 10, BallOptions { vertex_cap: 100 }).unwrap_err();
    assert!(matches!(err, nilcay::Error::VertexBudget { .. }));
}

#[test]
fn asymmetric_generating_set_is_rejected() {
    let g = builtin(Family::Zn(2)).unwrap();
    let p = Arc::new(g.presentation);
    let s = GenSet::new(&p, vec![el(&[1, 0]), el(&[0, 1])]).unwrap();
    assert!(generate_ball(p, s, 2, BallOptions::default()).is_err());
}

#[test]
fn heisenberg_central_distances() {
    let b = ball(Family::Heisenberg, 8);
    assert_eq!(b.dist_of(&el(&[0, 0, 1])), Some(4));
    assert_eq!(b.dist_of(&el(&[0, 0, 4])), Some(8));
}

#[test]
fn distances_beyond_twice_the_radius_are_unknown() {
    let b = ball(Family::Zn(1), 2);
    assert_eq!(b.distance(&el(&[-2]), &el(&[2])).unwrap(), Distance::Exact(4));
    let b = ball(Family::Zn(2), 2);
    assert_eq!(b.distance(&el(&[-2, 0]), &el(&[2, 0])).unwrap(), Distance::Exact(4));
    let b = ball(Family::Heisenberg, 2);
    assert_eq!(b.distance(&el(&[2, 0, 0]), &el(&[-2, 0, 0])).unwrap(), Distance::Exact(4));
    let z = ball(Family::Zn(1), 2);
    assert_eq!(z.distance(&el(&[0]), &el(&[7])).unwrap(), Distance::Unknown { at_least: 5 });
}

#[test]
fn geodesic_counts_in_the_grid() {
    // lattice paths: binomial coefficients
    let b = ball(Family::Zn(2), 6);
    let n = b.count_geodesics(&el(&[0, 0]), &el(&[3, 3])).unwrap();
    assert_eq!(n, BigUint::from(20u32));
    let paths = b.enumerate_geodesics(&el(&[0, 0]), &el(&[2, 1]), 100).unwrap();
    assert_eq!(paths.len(), 3);
    assert!(b.enumerate_geodesics(&el(&[0, 0]), &el(&[3, 3]), 5).is_err());
}

#[test]
fn enumerated_paths_are_geodesics() {
    let b = ball(Family::Heisenberg, 5);
    let p = b.presentation();
    let target = el(&[0, 0, 1]);
    let paths = b.enumerate_geodesics(&p.identity(), &target, 10_000).unwrap();
    assert_eq!(BigUint::from(paths.len()), b.count_geodesics(&p.identity(), &target).unwrap());
    for path in &paths {
        assert_eq!(path.len(), 4);
        assert_eq!(path.end(p).unwrap(), target);
    }
}

#[test]
fn exports_have_headers() {
    let b = ball(Family::Zn(1), 2);
    let g = b.export_graph();
    assert!(g.lines().next().unwrap().starts_with('#'));
    let edge_lines = g.lines().filter(|l| !l.starts_with('#')).count();
    assert!(edge_lines > 0);
    assert_eq!(b.export_distances().lines().filter(|l| !l.starts_with('#')).count(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn count_matches_enumeration(fi in 0usize..7, a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let f = families()[fi].clone();
        let bl = ball(f, 3);
        let u = bl.vertex(a.index(bl.len())).clone();
        let v = bl.vertex(b.index(bl.len())).clone();
        let count = bl.count_geodesics(&u, &v);
        let listed = bl.enumerate_geodesics(&u, &v, 1_000_000);
        match (count, listed) {
            (Ok(c), Ok(l)) => prop_assert_eq!(c, BigUint::from(l.len())),
            (Err(_), Err(_)) => {}
            (c, l) => prop_assert!(false, "count {:?} vs listing {:?}", c.map(|x| x.to_string()), l.map(|x| x.len())),
        }
    }

    #[test]
    fn left_translation_is_an_isometry(fi in 0usize..7, a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let f = families()[fi].clone();
        let bl = ball(f, 3);
        let p = bl.presentation();
        let g = bl.vertex(a.index(bl.len()));
        let u = bl.vertex(b.index(bl.len()));
        let v = bl.vertex(c.index(bl.len()));
        let gu = p.multiply(g, u).unwrap();
        let gv = p.multiply(g, v).unwrap();
        let big = ball(families()[fi].clone(), 6);
        let d1 = big.distance(u, v).unwrap();
        let d2 = big.distance(&gu, &gv).unwrap();
        prop_assert_eq!(d1, d2);
    }

    #[test]
    fn distance_is_symmetric_and_triangular(fi in 0usize..7, a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let bl = ball(families()[fi].clone(), 3);
        let (u, v, w) = (bl.vertex(a.index(bl.len())), bl.vertex(b.index(bl.len())), bl.vertex(c.index(bl.len())));
        let d = |x, y| bl.distance(x, y).unwrap().exact().unwrap();
        prop_assert_eq!(d(u, v), d(v, u));
        prop_assert!(d(u, w) <= d(u, v) + d(v, w));
    }
}

#[test]
fn translations_pass_the_map_check() {
    let b = ball(Family::Heisenberg, 3);
    let m = VertexMap::identity(&b);
    assert!(check_vertex_map(&b, &b, &m).unwrap().ok);
}
