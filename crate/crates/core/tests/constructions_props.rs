use std::sync::Arc;

use nilcay::autlab::{aut_e_orbit, enumerate_local_auts_for, is_affine_on_ball, normality_verdict, DEFAULT_AUT_CAP};
use nilcay::cayley::{check_vertex_map, generate_ball, BallOptions, GenSet, VertexMap};
use nilcay::constructions::{
    edgeless_graph, fsf_generating_set, lift_generating_set, twin_classes, twin_classes_of_graph, twin_swap_map,
    wreath_product, LabeledGraph,
};
use nilcay::report::Verdict;
use nilcay::structure::torsion_subgroup;
use nilcay::{builtin, Family, GroupElement};
use proptest::prelude::*;

fn el(v: &[i64]) -> GroupElement {
    GroupElement::from_i64s(v)
}

fn random_graph(n: usize, bits: &[bool]) -> LabeledGraph {
    let mut edges = Vec::new();
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if bits[k % bits.len()] {
                edges.push((u, v));
            }
            k += 1;
        }
    }
    LabeledGraph::new((0..n).map(|i| i.to_string()).collect(), edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn wreath_counts(n1 in 1usize..7, n2 in 1usize..5, b1 in prop::collection::vec(any::<bool>(), 21), b2 in prop::collection::vec(any::<bool>(), 10)) {
        let x1 = random_graph(n1, &b1);
        let x2 = random_graph(n2, &b2);
        let w = wreath_product(&x1, &x2);
        prop_assert_eq!(w.vertex_count(), n1 * n2);
        prop_assert_eq!(w.edge_count(), x1.edge_count() * n2 * n2 + n1 * x2.edge_count());
        // fibres over a vertex with a neighbour are twins when X2 is edgeless
        let fibred = wreath_product(&x1, &edgeless_graph(n2).unwrap());
        for class in twin_classes_of_graph(&fibred) {
            let v1 = class[0] / n2;
            prop_assert!(class.iter().all(|&v| v / n2 == v1) || x1.neighbors(v1).is_empty() || class.len() % n2 == 0);
        }
    }
}

fn zz2() -> (Arc<nilcay::PcPresentation>, Vec<GroupElement>) {
    let g = builtin(Family::ZnCrossCyclic { n: 1, m: 2 }).unwrap();
    (Arc::new(g.presentation), g.genset)
}

#[test]
fn lift_equals_fsf_for_torsion_free_sets() {
    let (p, _) = zz2();
    let f = torsion_subgroup(&p).unwrap();
    let s = GenSet::new(&p, vec![el(&[1, 0]), el(&[-1, 0])]).unwrap();
    let fsf = fsf_generating_set(&p, &f, &s).unwrap();
    let lift = lift_generating_set(&p, &[el(&[1]), el(&[-1])]).unwrap();
    let mut a = fsf.genset.elements().to_vec();
    let mut b = lift.elements().to_vec();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert!(!fsf.removed_identity);
}

#[test]
fn twin_swaps_are_graph_maps() {
    let (p, std) = zz2();
    let f = torsion_subgroup(&p).unwrap();
    let fsf = fsf_generating_set(&p, &f, &GenSet::new(&p, std).unwrap()).unwrap();
    let ball = generate_ball(Arc::clone(&p), fsf.genset.clone(), 5, BallOptions::default()).unwrap();
    for class in twin_classes(&ball) {
        assert_eq!(class.len(), 2);
    }
    for x in -3..=3 {
        let g = el(&[x, 0]);
        let h = el(&[x, 1]);
        let swap = twin_swap_map(&ball, &g, &h, Some(fsf.genset.elements())).unwrap();
        assert!(check_vertex_map(&ball, &ball, &swap.map).unwrap().ok, "x = {x}");
        assert_eq!(swap.warnings.is_empty(), x.abs() > 1);
    }
    assert!(twin_swap_map(&ball, &el(&[5, 0]), &el(&[5, 1]), None).is_err());
}

#[test]
fn compositions_of_affine_maps_are_affine() {
    let g = builtin(Family::Zn(2)).unwrap();
    let p = Arc::new(g.presentation);
    let s = GenSet::new(&p, g.genset).unwrap();
    let set = enumerate_local_auts_for(p, s, 2, 1, DEFAULT_AUT_CAP, BallOptions::default()).unwrap();
    let ball = &set.inner;
    for a in &set.auts {
        for b in &set.auts {
            let images = ball
                .vertices()
                .iter()
                .map(|x| a.map.image_of(ball, b.map.image_of(ball, x).unwrap()).unwrap().clone())
                .collect();
            let m = VertexMap { images };
            assert!(is_affine_on_ball(ball, ball, &m).unwrap().affine);
        }
    }
}

#[test]
fn orbits_are_invariant() {
    for f in [Family::Zn(2), Family::Heisenberg, Family::KleinBottle] {
        let g = builtin(f.clone()).unwrap();
        let p = Arc::new(g.presentation);
        let s = GenSet::new(&p, g.genset).unwrap();
        let set = enumerate_local_auts_for(p, s.clone(), 2, 2, DEFAULT_AUT_CAP, BallOptions::default()).unwrap();
        for x in s.elements() {
            let orbit = aut_e_orbit(&set, x).unwrap();
            assert!(orbit.contains(x));
            for y in &orbit {
                assert_eq!(aut_e_orbit(&set, y).unwrap(), orbit, "{f}");
            }
        }
    }
}

#[test]
fn more_stability_never_adds_maps() {
    for f in [Family::Zn(2), Family::KleinBottle, Family::Heisenberg] {
        let g = builtin(f.clone()).unwrap();
        let p = Arc::new(g.presentation);
        let s = GenSet::new(&p, g.genset).unwrap();
        let mut prev = usize::MAX;
        for t in 0..=3 {
            let n = enumerate_local_auts_for(Arc::clone(&p), s.clone(), 2, t, DEFAULT_AUT_CAP, BallOptions::default())
                .unwrap()
                .auts
                .len();
            assert!(n <= prev, "{f} at t = {t}");
            prev = n;
        }
    }
}

#[test]
fn abelian_grid_is_normal_and_klein_is_not() {
    let verdict = |f: Family| {
        let g = builtin(f).unwrap();
        let p = Arc::new(g.presentation);
        let s = GenSet::new(&p, g.genset).unwrap();
        normality_verdict(p, s, 3, 2, DEFAULT_AUT_CAP, BallOptions::default()).unwrap().verdict
    };
    assert_eq!(verdict(Family::Zn(2)), Verdict::Normal);
    assert_eq!(verdict(Family::KleinBottle), Verdict::NonNormal);
}
