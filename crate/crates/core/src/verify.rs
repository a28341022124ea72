//! The acceptance criteria as runnable checks.
//!
//! Each criterion returns a [`Report`]; [`run_suite`] collects them into a
//! single JSON document. Nothing here reads the clock, so equal seeds give
//! byte-identical output whatever the worker count.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::autlab::{
    aut_e_orbit, enumerate_local_auts_for, is_affine_on_ball, induced_quotient_check,
    normality_verdict, DEFAULT_AUT_CAP,
};
use crate::cayley::{
    builtin_ball, check_vertex_map, generate_ball, insert_torsion_edge, torsion_label_bound,
    Ball, BallOptions, GenSet, GeodesicPath,
};
use crate::constructions::{
    fsf_generating_set, klein_flip_map, klein_grid_map, klein_literal_flip_map,
    lift_generating_set, twin_classes, twin_swap_map, wreath_ball_check,
};
use crate::error::{Error, Result};
use crate::order::{classify_distorted, convexity_check, BiOrder, DEFAULT_PROFILE_BUDGET, DEFAULT_TOL};
use crate::pcgroup::{builtin, Family, GroupElement, PcPresentation};
use crate::report::{Report, Verdict};
use crate::structure::{project_to_quotient, rank_report, torsion_subgroup};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Families exercised by the group-law and metric criteria.
pub fn standard_families() -> Vec<Family> {
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

fn torsion_free_nilpotent() -> Vec<Family> {
    vec![Family::Zn(1), Family::Zn(2), Family::Zn(3), Family::Heisenberg]
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub report: Report,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub tool_version: &'static str,
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "group laws"),
    (2, "metric oracle"),
    (3, "klein bottle pair"),
    (4, "fsf construction"),
    (5, "stable automorphisms are affine"),
    (6, "max generator convexity and bi-invariance"),
    (7, "distortion"),
    (8, "torsion-labelled geodesics"),
    (9, "quotients, wreath products and ranks"),
    (10, "determinism"),
];

fn rng_for(seed: u64, criterion: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (u64::from(criterion) << 56))
}

fn el(v: &[i64]) -> GroupElement {
    GroupElement::from_i64s(v)
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn opts() -> BallOptions {
    BallOptions::default()
}

/// Associativity, identity and inverse on seeded triples.
pub fn criterion_1(seed: u64, samples: usize) -> Result<Report> {
    let mut rng = rng_for(seed, 1);
    let mut failures = Vec::new();
    let mut per_family = Vec::new();
    for f in standard_families() {
        let g = builtin(f.clone())?;
        let p = &g.presentation;
        let e = p.identity();
        let mut fails = 0usize;
        for _ in 0..samples {
            let x = p.random_element(&mut rng, 40);
            let y = p.random_element(&mut rng, 40);
            let z = p.random_element(&mut rng, 40);
            let lhs = p.multiply(&p.multiply(&x, &y)?, &z)?;
            let rhs = p.multiply(&x, &p.multiply(&y, &z)?)?;
            let xi = p.inverse(&x)?;
            let ok = lhs == rhs
                && p.multiply(&x, &e)? == x
                && p.multiply(&e, &x)? == x
                && p.multiply(&x, &xi)?.is_identity()
                && p.multiply(&xi, &x)?.is_identity();
            if !ok {
                fails += 1;
                if failures.len() < 5 {
                    failures.push(json!({"family": f.id(), "x": x.to_string(), "y": y.to_string(), "z": z.to_string()}));
                }
            }
        }
        per_family.push(json!({"family": f.id(), "failures": fails}));
    }
    let mut r = Report::new("group axioms hold on sampled triples", verdict(failures.is_empty()))
        .param("samples_per_family", samples)
        .param("families", per_family);
    r.witnesses = failures;
    Ok(r)
}

/// Minimum word length of every element reached by words of length `<= r`.
pub fn word_enumeration_distances(p: &PcPresentation, s: &[GroupElement], r: usize) -> Result<HashMap<GroupElement, u32>> {
    fn walk(
        p: &PcPresentation,
        s: &[GroupElement],
        cur: &GroupElement,
        depth: u32,
        r: u32,
        out: &mut HashMap<GroupElement, u32>,
    ) -> Result<()> {
        out.entry(cur.clone())
            .and_modify(|d| *d = (*d).min(depth))
            .or_insert(depth);
        if depth == r {
            return Ok(());
        }
        for x in s {
            walk(p, s, &p.multiply(cur, x)?, depth + 1, r, out)?;
        }
        Ok(())
    }
    let mut out = HashMap::new();
    walk(p, s, &p.identity(), 0, r as u32, &mut out)?;
    Ok(out)
}

/// BFS distances against brute-force word enumeration on `B(r)`.
pub fn criterion_2(r: usize) -> Result<Report> {
    let mut mismatches = Vec::new();
    let mut sizes = Vec::new();
    for f in standard_families() {
        let ball = builtin_ball(f.clone(), r, opts())?;
        let oracle = word_enumeration_distances(ball.presentation(), ball.genset().elements(), r)?;
        if oracle.len() != ball.len() {
            mismatches.push(json!({"family": f.id(), "ball": ball.len(), "oracle": oracle.len()}));
        }
        for (g, d) in &oracle {
            if ball.dist_of(g) != Some(*d) {
                mismatches.push(json!({"family": f.id(), "element": g.to_string(), "oracle": d, "bfs": ball.dist_of(g)}));
            }
        }
        sizes.push(json!({"family": f.id(), "vertices": ball.len()}));
    }
    let mut rep = Report::new("BFS distances equal word-enumeration distances", verdict(mismatches.is_empty()))
        .param("r", r)
        .param("ball_sizes", sizes);
    rep.witnesses = mismatches.into_iter().take(10).collect();
    Ok(rep)
}

/// Klein bottle: flip and grid maps at radius 8, non-normal at `(4, 2)`.
pub fn criterion_3() -> Result<Report> {
    let k = builtin_ball(Family::KleinBottle, 8, opts())?;
    let z = builtin_ball(Family::Zn(2), 8, opts())?;
    let flip = klein_flip_map(&k)?;
    let flip_ok = check_vertex_map(&k, &k, &flip)?;
    let affine = is_affine_on_ball(&k, &k, &flip)?;
    let grid_ok = check_vertex_map(&k, &z, &klein_grid_map(&k)?)?;
    let literal = check_vertex_map(&k, &k, &klein_literal_flip_map(&k)?)?;
    let kb = builtin(Family::KleinBottle)?;
    let gs = GenSet::new(&kb.presentation, kb.genset)?;
    let normality = normality_verdict(Arc::new(kb.presentation), gs, 4, 2, DEFAULT_AUT_CAP, opts())?;
    let ok = flip_ok.ok
        && !affine.affine
        && affine.witness.is_some()
        && grid_ok.ok
        && normality.verdict == Verdict::NonNormal;
    Ok(Report::new("the Klein-bottle Cayley graph is a grid and is not normal", verdict(ok))
        .param("r", 8)
        .param("flip_is_graph_map", flip_ok.ok)
        .param("flip_is_affine", affine.affine)
        .param("grid_map_ok", grid_ok.ok)
        .param("normality", normality.verdict)
        .witness(json!({"flip_affine_check": affine}))
        .witness(json!({"normality": normality}))
        .note(format!(
            "a^i b^j -> b^i a^j taken literally is not adjacency-preserving (witness {:?}); the flip used is a^i b^j -> a^j b^i",
            literal.witness
        )))
}

fn zz2() -> Result<(Arc<PcPresentation>, Vec<GroupElement>)> {
    let g = builtin(Family::ZnCrossCyclic { n: 1, m: 2 })?;
    Ok((Arc::new(g.presentation), g.genset))
}

fn fsf_ball(r: usize) -> Result<(Ball, bool)> {
    let (p, std) = zz2()?;
    let f = torsion_subgroup(&p)?;
    let s = GenSet::new(&p, std)?;
    let fsf = fsf_generating_set(&p, &f, &s)?;
    Ok((generate_ball(p, fsf.genset, r, opts())?, fsf.removed_identity))
}

/// `FSF` on `Z x Z_2`: twins are `F`-cosets, a twin swap is a non-affine
/// automorphism, and the graph is not normal.
pub fn criterion_4() -> Result<Report> {
    let (p, std) = zz2()?;
    let f = torsion_subgroup(&p)?;
    let f_elems = f.elements().expect("listed");
    let (ball, removed) = fsf_ball(5)?;
    let fsf = ball.genset().clone();
    // generating: every standard generator lies in the FSF ball
    let generating = std.iter().all(|g| ball.contains(g));
    let mut cosets_ok = true;
    for class in twin_classes(&ball) {
        let g = ball.vertex(class[0]);
        let coset: BTreeSet<GroupElement> = f_elems
            .iter()
            .map(|x| p.multiply(g, x))
            .collect::<Result<_>>()?;
        let got: BTreeSet<GroupElement> = class.iter().map(|&v| ball.vertex(v).clone()).collect();
        cosets_ok &= coset == got;
    }
    let (g, h) = (el(&[2, 0]), el(&[2, 1]));
    let swap = twin_swap_map(&ball, &g, &h, Some(fsf.elements()))?;
    let valid = check_vertex_map(&ball, &ball, &swap.map)?;
    let fixes_gens = fsf
        .elements()
        .iter()
        .chain([&p.identity()])
        .all(|s| swap.map.image_of(&ball, s) == Some(s));
    let affine = is_affine_on_ball(&ball, &ball, &swap.map)?;
    let normality = normality_verdict(Arc::clone(&p), fsf.clone(), 4, 2, DEFAULT_AUT_CAP, opts())?;
    let ok = fsf.is_symmetric()
        && generating
        && cosets_ok
        && valid.ok
        && fixes_gens
        && swap.warnings.is_empty()
        && !affine.affine
        && normality.verdict == Verdict::NonNormal;
    Ok(Report::new("Cay(G; FSF) is not normal", verdict(ok))
        .param("r", 5)
        .param("fsf", fsf.elements().iter().map(|g| g.to_string()).collect::<Vec<_>>())
        .param("identity_removed", removed)
        .param("symmetric", fsf.is_symmetric())
        .param("generating", generating)
        .param("twin_classes_are_cosets", cosets_ok)
        .param("swap_valid", valid.ok)
        .param("swap_fixes_fsf_and_e", fixes_gens)
        .param("swap_affine", affine.affine)
        .param("normality", normality.verdict)
        .witness(json!({"swap": [g.to_string(), h.to_string()], "affine_check": affine})))
}

/// Every stable local automorphism at `(3, 2)` is affine for `Z^2`, `Z^3`
/// and the Heisenberg group.
pub fn criterion_5() -> Result<Report> {
    let mut rows = Vec::new();
    let mut ok = true;
    for f in [Family::Zn(2), Family::Zn(3), Family::Heisenberg] {
        let g = builtin(f.clone())?;
        let gs = GenSet::new(&g.presentation, g.genset)?;
        let set = enumerate_local_auts_for(Arc::new(g.presentation), gs, 3, 2, DEFAULT_AUT_CAP, opts())?;
        let mut non_affine = 0;
        for a in &set.auts {
            let consistent = check_vertex_map(&set.inner, &set.inner, &a.map)?.ok;
            if !consistent || !is_affine_on_ball(&set.inner, &set.inner, &a.map)?.affine {
                non_affine += 1;
            }
        }
        ok &= non_affine == 0;
        if f == Family::Zn(2) {
            ok &= set.auts.len() == 8;
        }
        rows.push(json!({"family": f.id(), "local_automorphisms": set.auts.len(), "non_affine": non_affine}));
    }
    Ok(Report::new("stable local automorphisms are affine on the ball", verdict(ok))
        .param("r", 3)
        .param("t", 2)
        .param("families", rows)
        .note("evidence at radius (3, 2) only"))
}

/// Max generators give convex lines; the comparators are bi-invariant.
pub fn criterion_6(seed: u64, samples: usize) -> Result<Report> {
    let mut rng = rng_for(seed, 6);
    let mut rows = Vec::new();
    let mut ok = true;
    for f in torsion_free_nilpotent() {
        let g = builtin(f.clone())?;
        let p = Arc::new(g.presentation);
        let gs = GenSet::new(&p, g.genset)?;
        let order = BiOrder::new(Arc::clone(&p))?;
        let s = order.max_generator(&gs)?;
        let ball = generate_ball(Arc::clone(&p), gs, 6, opts())?;
        let convex = convexity_check(&ball, &s, 6)?;
        let mut violations = 0usize;
        let mut monotone_violations = 0usize;
        for _ in 0..samples {
            let a = p.random_element(&mut rng, 6);
            let x = p.random_element(&mut rng, 6);
            let y = p.random_element(&mut rng, 6);
            let b = p.random_element(&mut rng, 6);
            let (x, y) = match order.compare(&x, &y)? {
                Ordering::Less => (x, y),
                Ordering::Greater => (y, x),
                Ordering::Equal => continue,
            };
            let axb = p.multiply(&p.multiply(&a, &x)?, &b)?;
            let ayb = p.multiply(&p.multiply(&a, &y)?, &b)?;
            if order.compare(&axb, &ayb)? != Ordering::Less {
                violations += 1;
            }
            // x < y and a <= b imply a x < b y
            let (lo, hi) = match order.compare(&a, &b)? {
                Ordering::Greater => (b.clone(), a.clone()),
                _ => (a.clone(), b.clone()),
            };
            if order.compare(&p.multiply(&lo, &x)?, &p.multiply(&hi, &y)?)? != Ordering::Less {
                monotone_violations += 1;
            }
        }
        ok &= convex.passed() && violations == 0 && monotone_violations == 0;
        rows.push(json!({
            "family": f.id(),
            "max_generator": s.to_string(),
            "convex_to_k": 6,
            "convexity": convex.verdict,
            "bi_invariance_violations": violations,
            "monotonicity_violations": monotone_violations,
        }));
    }
    Ok(Report::new("the maximal generator spans a convex line; the order is bi-invariant", verdict(ok))
        .param("samples", samples)
        .param("families", rows))
}

/// Heisenberg `c` is distorted; `a` and `b` are not.
pub fn criterion_7() -> Result<Report> {
    let g = builtin(Family::Heisenberg)?;
    let p = Arc::new(g.presentation);
    let gs = GenSet::new(&p, g.genset)?;
    let mut ok = true;
    let mut rows = Vec::new();
    for (name, x, want) in [
        ("c", el(&[0, 0, 1]), Verdict::Distorted),
        ("a", el(&[1, 0, 0]), Verdict::Undistorted),
        ("b", el(&[0, 1, 0]), Verdict::Undistorted),
    ] {
        let rep = classify_distorted(Arc::clone(&p), &gs, &x, 64, DEFAULT_TOL, DEFAULT_PROFILE_BUDGET)?;
        let profile = rep.parameters["profile"].as_array().cloned().unwrap_or_default();
        let ratio_at = |k: u64| {
            profile
                .iter()
                .find(|row| row["k"] == k)
                .and_then(|row| row["ratio"].as_f64())
        };
        let analytic = rep.parameters.get("analytic_distorted").and_then(|v| v.as_bool());
        let mut good = rep.verdict == want && analytic == Some(want == Verdict::Distorted);
        if name == "c" {
            good &= ratio_at(1) == Some(4.0) && ratio_at(16).is_some_and(|r| r <= 1.0);
        } else {
            good &= profile.iter().all(|row| row["ratio"].as_f64() == Some(1.0));
        }
        ok &= good;
        rows.push(json!({"element": name, "verdict": rep.verdict, "analytic_distorted": analytic, "profile": profile}));
    }
    Ok(Report::new("distortion matches isolator membership", verdict(ok))
        .param("kmax", 64)
        .param("tol", DEFAULT_TOL)
        .param("elements", rows))
}

/// Torsion-label bound, edge insertion, geodesic count bound and the
/// orbit of the torsion generator.
pub fn criterion_8(seed: u64) -> Result<Report> {
    let (p, std) = zz2()?;
    let n = torsion_subgroup(&p)?;
    let n_elems = n.elements().expect("listed");
    let s_union_n = GenSet::new(&p, vec![el(&[1, 0]), el(&[-1, 0]), el(&[1, 1]), el(&[-1, 1]), el(&[0, 1])])?;
    let ball = generate_ball(Arc::clone(&p), s_union_n.clone(), 4, opts())?;
    let bound = torsion_label_bound(&ball, &n_elems)?;

    // (n, s, ..., s) is a geodesic for the standard set; insert n everywhere
    let std_ball = generate_ball(Arc::clone(&p), GenSet::new(&p, std)?, 6, opts())?;
    let mut insert_ok = true;
    let mut insert_rows = Vec::new();
    for k in 0..=4usize {
        let mut labels = vec![el(&[0, 1])];
        labels.extend(std::iter::repeat_n(el(&[1, 0]), k));
        let geo = GeodesicPath { start: p.identity(), labels };
        let end = geo.end(&p)?;
        let is_geodesic = std_ball.dist_of(&end) == Some(k as u32 + 1);
        let paths = insert_torsion_edge(&p, &geo, &n_elems)?;
        let distinct: BTreeSet<&GeodesicPath> = paths.iter().collect();
        let ends: BTreeSet<GroupElement> = paths.iter().map(|q| q.end(&p)).collect::<Result<_>>()?;
        let good = is_geodesic
            && paths.len() == k + 1
            && distinct.len() == k + 1
            && paths.iter().all(|q| q.len() == k + 1)
            && ends.len() == 1;
        insert_ok &= good;
        insert_rows.push(json!({"k": k, "paths": paths.len(), "distinct": distinct.len()}));
    }

    let mut rng = rng_for(seed, 8);
    let mut count_ok = true;
    let mut count_rows = Vec::new();
    for f in standard_families() {
        let b = builtin_ball(f.clone(), 4, opts())?;
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let u = b.vertex(rng.gen_range(0..b.len())).clone();
            let v = b.vertex(rng.gen_range(0..b.len())).clone();
            let bp = b.presentation();
            let x = bp.multiply(&bp.inverse(&u)?, &v)?;
            let Some(d) = b.dist_of(&x) else { continue };
            let count = b.count_geodesics(&u, &v)?;
            let cap = BigUint::from(b.genset().len()).pow(d);
            if count > cap {
                count_ok = false;
            }
            let listed = b.enumerate_geodesics(&u, &v, 1_000_000)?.len();
            if BigUint::from(listed) != count {
                count_ok = false;
            }
            let ratio = count.to_string().parse::<f64>().unwrap_or(0.0) / cap.to_string().parse::<f64>().unwrap_or(1.0);
            worst = worst.max(ratio);
        }
        count_rows.push(json!({"family": f.id(), "max_count_over_bound": worst}));
    }

    let set = enumerate_local_auts_for(Arc::clone(&p), s_union_n, 4, 2, DEFAULT_AUT_CAP, opts())?;
    let orbit = aut_e_orbit(&set, &el(&[0, 1]))?;
    let orbit_ok = orbit.iter().all(|g| n.contains(g));

    let ok = bound.passed() && insert_ok && count_ok && orbit_ok;
    Ok(Report::new("geodesics meet the torsion subgroup in at most one edge", verdict(ok))
        .param("label_bound", bound.verdict)
        .param("insertions", insert_rows)
        .param("count_bound", count_rows)
        .param("orbit_of_torsion", orbit.iter().map(|g| g.to_string()).collect::<Vec<_>>())
        .param("orbit_in_n", orbit_ok))
}

/// Induced quotient map of a twin swap, the wreath-product ball and rank
/// additivity.
pub fn criterion_9() -> Result<Report> {
    let (ball, _) = fsf_ball(5)?;
    let p = ball.presentation_arc();
    let n = torsion_subgroup(&p)?;
    let swap = twin_swap_map(&ball, &el(&[2, 0]), &el(&[2, 1]), None)?;
    let induced = induced_quotient_check(&ball, &ball, &swap.map, &n, &n)?;
    let induced_identity = induced.parameters.get("induced_identity") == Some(&json!(true));

    let lifted = lift_generating_set(&p, &[el(&[1]), el(&[-1])])?;
    let lifted_ball = generate_ball(Arc::clone(&p), lifted, 5, opts())?;
    let quotient_ball = builtin_ball(Family::Zn(1), 5, opts())?;
    let wreath = wreath_ball_check(&lifted_ball, &quotient_ball)?;
    let projected_ok = lifted_ball
        .vertices()
        .iter()
        .all(|g| quotient_ball.contains(&project_to_quotient(&p, g)));

    let mut ranks = Vec::new();
    let mut ranks_ok = true;
    for (f, expected) in [
        (Family::ZnCrossCyclic { n: 1, m: 2 }, (1, 0, 1)),
        (Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 3 }), (3, 0, 3)),
    ] {
        let q = builtin(f.clone())?.presentation;
        let t = torsion_subgroup(&q)?;
        let rep = rank_report(&q, &t)?;
        let got = (
            rep.parameters["rank_g"].as_u64().unwrap_or(u64::MAX),
            rep.parameters["rank_n"].as_u64().unwrap_or(u64::MAX),
            rep.parameters["rank_quotient"].as_u64().unwrap_or(u64::MAX),
        );
        ranks_ok &= rep.passed() && got == expected;
        ranks.push(json!({"family": f.id(), "rank_g": got.0, "rank_n": got.1, "rank_quotient": got.2}));
    }
    let ok = induced.passed() && induced_identity && wreath.ok && projected_ok && ranks_ok;
    Ok(Report::new("graph maps descend to affine maps of G/N", verdict(ok))
        .param("induced", induced.verdict)
        .param("induced_identity", induced_identity)
        .param("wreath_isomorphism", wreath.ok)
        .param("ranks", ranks))
}

pub fn run_criterion(id: u8, seed: u64) -> Result<Report> {
    match id {
        1 => criterion_1(seed, 10_000),
        2 => criterion_2(4),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(seed, 10_000),
        7 => criterion_7(),
        8 => criterion_8(seed),
        9 => criterion_9(),
        10 => criterion_10(seed, &[1, 2, 8]),
        _ => Err(Error::InvalidParams(format!("no criterion {id}"))),
    }
}

fn outcome(id: u8, report: Report) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name: CRITERIA[(id - 1) as usize].1,
        passed: report.passed(),
        report,
    }
}

/// Run the listed criteria in order.
pub fn run_suite(ids: &[u8], seed: u64) -> Result<SuiteReport> {
    let mut criteria = Vec::with_capacity(ids.len());
    for &id in ids {
        criteria.push(outcome(id, run_criterion(id, seed)?));
    }
    Ok(SuiteReport {
        tool_version: TOOL_VERSION,
        seed,
        criteria,
    })
}

/// Criteria 1-9 under several worker counts; the JSON must not change.
pub fn criterion_10(seed: u64, workers: &[usize]) -> Result<Report> {
    let ids: Vec<u8> = (1..=9).collect();
    let mut digests = Vec::new();
    let mut first: Option<String> = None;
    let mut same = true;
    for &w in workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        let json = pool.install(|| run_suite(&ids, seed))?.to_json();
        use sha2::{Digest, Sha256};
        digests.push(json!({"workers": w, "sha256": hex::encode(Sha256::digest(json.as_bytes()))}));
        match &first {
            None => first = Some(json),
            Some(f) => same &= *f == json,
        }
    }
    Ok(Report::new("reports are byte-identical across worker counts", verdict(same))
        .param("seed", seed)
        .param("runs", digests))
}
