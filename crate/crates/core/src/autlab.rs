//! Ball-level automorphisms: enumeration of stable local automorphisms,
//! affine-bijection detection and the checks built on top of them.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{check_vertex_map, generate_ball, Ball, BallOptions, GenSet, VertexMap};
use crate::error::{Error, Result};
use crate::pcgroup::{GroupElement, PcPresentation};
use crate::report::{Report, Verdict};
use crate::structure::{derived_isolator_witness, project_to_quotient, quotient_by_torsion, z_dagger, SubgroupWitness};

pub const DEFAULT_AUT_CAP: usize = 100_000;
/// Backtracking steps allowed per extension search.
const EXTENSION_FUEL: u64 = 5_000_000;

/// A self-map of `B(r)` fixing `e` that extends to an automorphism of the
/// induced graph on `B(r + t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalAutomorphism {
    pub map: VertexMap,
    pub stability: usize,
}

/// Enumeration result; `inner` is the radius-`r` ball the maps act on.
#[derive(Debug)]
pub struct LocalAutSet {
    pub inner: Ball,
    pub auts: Vec<LocalAutomorphism>,
}

struct Search<'a> {
    adj: &'a [Vec<usize>],
    color: &'a [u32],
    order: &'a [usize],
    parent: Vec<usize>,
    phi: Vec<usize>,
    inv: Vec<usize>,
    fuel: u64,
}

const UNSET: usize = usize::MAX;

impl Search<'_> {
    fn consistent(&self, v: usize, w: usize) -> bool {
        if self.inv[w] != UNSET || self.color[v] != self.color[w] {
            return false;
        }
        let mut assigned = 0;
        for &u in &self.adj[v] {
            let pu = self.phi[u];
            if pu != UNSET {
                assigned += 1;
                if self.adj[w].binary_search(&pu).is_err() {
                    return false;
                }
            }
        }
        let image_assigned = self.adj[w].iter().filter(|&&x| self.inv[x] != UNSET).count();
        assigned == image_assigned
    }

    fn candidates(&self, v: usize) -> Vec<usize> {
        let p = self.phi[self.parent[v]];
        self.adj[p]
            .iter()
            .copied()
            .filter(|&w| self.consistent(v, w))
            .collect()
    }

    /// Candidates for `v` from any assigned neighbour, or `None` if no
    /// neighbour of `v` is assigned yet.
    fn free_candidates(&self, v: usize) -> Option<Vec<usize>> {
        let u = self.adj[v].iter().copied().find(|&u| self.phi[u] != UNSET)?;
        Some(
            self.adj[self.phi[u]]
                .iter()
                .copied()
                .filter(|&w| self.consistent(v, w))
                .collect(),
        )
    }

    /// Assign every vertex in `rest`, most constrained first; true once a
    /// full assignment exists.
    fn extend(&mut self, rest: &mut Vec<usize>) -> Result<bool> {
        if rest.is_empty() {
            return Ok(true);
        }
        if self.fuel == 0 {
            return Err(Error::CapExceeded { cap: EXTENSION_FUEL as usize, partial: rest.len() });
        }
        self.fuel -= 1;
        let mut best: Option<(usize, Vec<usize>)> = None;
        for (i, &v) in rest.iter().enumerate() {
            let Some(c) = self.free_candidates(v) else { continue };
            if c.is_empty() {
                return Ok(false);
            }
            if best.as_ref().is_none_or(|(_, b)| c.len() < b.len()) {
                let single = c.len() == 1;
                best = Some((i, c));
                if single {
                    break;
                }
            }
        }
        let Some((i, cands)) = best else { return Ok(false) };
        let v = rest.swap_remove(i);
        for w in cands {
            self.phi[v] = w;
            self.inv[w] = v;
            let ok = self.extend(rest)?;
            self.phi[v] = UNSET;
            self.inv[w] = UNSET;
            if ok {
                rest.push(v);
                let last = rest.len() - 1;
                rest.swap(i, last);
                return Ok(true);
            }
        }
        rest.push(v);
        let last = rest.len() - 1;
        rest.swap(i, last);
        Ok(false)
    }

    fn enumerate(
        &mut self,
        pos: usize,
        inner_end: usize,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<()> {
        if pos == inner_end {
            let restriction: Vec<usize> = self.order[..inner_end].iter().map(|&v| self.phi[v]).collect();
            self.fuel = EXTENSION_FUEL;
            let mut rest = self.order[pos..].to_vec();
            if self.extend(&mut rest)? {
                if out.len() == cap {
                    return Err(Error::CapExceeded { cap, partial: out.len() });
                }
                out.push(restriction);
            }
            return Ok(());
        }
        let v = self.order[pos];
        for w in self.candidates(v) {
            self.phi[v] = w;
            self.inv[w] = v;
            let r = self.enumerate(pos + 1, inner_end, out, cap);
            self.phi[v] = UNSET;
            self.inv[w] = UNSET;
            r?;
        }
        Ok(())
    }
}

/// Stable colour refinement starting from distance to `e`.
fn refine_colors(adj: &[Vec<usize>], dist: &[u32]) -> Vec<u32> {
    let mut color: Vec<u32> = dist.to_vec();
    let mut classes = BTreeSet::from_iter(color.iter().copied()).len();
    loop {
        let sigs: Vec<(u32, Vec<u32>)> = (0..adj.len())
            .map(|v| {
                let mut nb: Vec<u32> = adj[v].iter().map(|&u| color[u]).collect();
                nb.sort_unstable();
                (color[v], nb)
            })
            .collect();
        let mut palette: Vec<&(u32, Vec<u32>)> = sigs.iter().collect();
        palette.sort();
        palette.dedup();
        let ids: HashMap<&(u32, Vec<u32>), u32> =
            palette.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let next: Vec<u32> = sigs.iter().map(|s| ids[s]).collect();
        let n = palette.len();
        color = next;
        if n == classes {
            return color;
        }
        classes = n;
    }
}

/// Self-maps of `B(R - t)` fixing `e` that extend to automorphisms of the
/// graph induced on `B(R)`, `R` the radius of `ball`; in backtracking order.
pub fn enumerate_local_auts(ball: &Ball, t: usize, cap: usize) -> Result<LocalAutSet> {
    if ball.radius() < t {
        return Err(Error::precondition(
            "radius",
            format!("ball radius {} is below stability {t}", ball.radius()),
        ));
    }
    let r = ball.radius() - t;
    let adj = ball.adjacency_lists();
    let color = refine_colors(&adj, ball.distances());
    let mut order: Vec<usize> = (0..ball.len()).collect();
    order.sort_by_key(|&v| (ball.dist(v), v));
    let mut rank = vec![0; ball.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let parent: Vec<usize> = (0..ball.len())
        .map(|v| {
            adj[v]
                .iter()
                .copied()
                .filter(|&u| ball.dist(u) + 1 == ball.dist(v))
                .min_by_key(|&u| rank[u])
                .unwrap_or(v)
        })
        .collect();
    let inner_end = order.iter().take_while(|&&v| ball.dist(v) as usize <= r).count();
    let e = ball.identity_index();
    let mut search = Search {
        adj: &adj,
        color: &color,
        order: &order,
        parent,
        phi: vec![UNSET; ball.len()],
        inv: vec![UNSET; ball.len()],
        fuel: EXTENSION_FUEL,
    };
    search.phi[e] = e;
    search.inv[e] = e;
    let mut raw = Vec::new();
    search.enumerate(1, inner_end, &mut raw, cap)?;

    let inner = generate_ball(ball.presentation_arc(), ball.genset().clone(), r, BallOptions::default())?;
    // inner vertices in lexicographic order; order[..inner_end] is by (dist, index)
    let auts = raw
        .into_iter()
        .map(|restriction| {
            let mut images = vec![inner.vertex(0).clone(); inner.len()];
            for (i, &v) in order[..inner_end].iter().enumerate() {
                let src = inner.index_of(ball.vertex(v)).expect("inner ball is a prefix");
                images[src] = ball.vertex(restriction[i]).clone();
            }
            LocalAutomorphism {
                map: VertexMap { images },
                stability: t,
            }
        })
        .collect();
    Ok(LocalAutSet { inner, auts })
}

/// Convenience form building the radius-`r + t` ball first.
pub fn enumerate_local_auts_for(
    p: Arc<PcPresentation>,
    s: GenSet,
    r: usize,
    t: usize,
    cap: usize,
    opts: BallOptions,
) -> Result<LocalAutSet> {
    let ball = generate_ball(p, s, r + t, opts)?;
    enumerate_local_auts(&ball, t, cap)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffineWitness {
    pub x: String,
    pub y: String,
    pub alpha_xy: String,
    pub alpha_x_alpha_y: String,
}

/// `m = h · α` on the ball, with `α` checked on interior pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AffineVerdict {
    pub affine: bool,
    pub h: String,
    pub alpha_on_generators: Vec<(String, String)>,
    pub generators_preserved: bool,
    pub witness: Option<AffineWitness>,
}

pub fn is_affine_on_ball(ball_a: &Ball, ball_b: &Ball, m: &VertexMap) -> Result<AffineVerdict> {
    if m.images.len() != ball_a.len() {
        return Err(Error::BadVertexMap("map length differs from the ball".into()));
    }
    let q = ball_b.presentation();
    let p = ball_a.presentation();
    let h = m.images[ball_a.identity_index()].clone();
    let h_inv = q.inverse(&h)?;
    let alpha: Vec<GroupElement> = m
        .images
        .par_iter()
        .map(|y| q.multiply(&h_inv, y))
        .collect::<Result<_>>()?;

    let mut on_gens = Vec::new();
    let mut gen_images = BTreeSet::new();
    for s in ball_a.genset().elements() {
        let i = ball_a
            .index_of(s)
            .ok_or_else(|| Error::precondition("radius", "generators must lie in the ball"))?;
        on_gens.push((s.to_string(), alpha[i].to_string()));
        gen_images.insert(alpha[i].clone());
    }
    let target: BTreeSet<GroupElement> = ball_b.genset().elements().iter().cloned().collect();
    let generators_preserved = gen_images == target;

    let interior: Vec<usize> = ball_a.interior().collect();
    let witness = interior
        .par_iter()
        .map(|&x| -> Result<Option<AffineWitness>> {
            for &y in &interior {
                let xy = p.multiply(ball_a.vertex(x), ball_a.vertex(y))?;
                let Some(k) = ball_a.index_of(&xy) else { continue };
                if !ball_a.is_interior(k) {
                    continue;
                }
                let prod = q.multiply(&alpha[x], &alpha[y])?;
                if prod != alpha[k] {
                    return Ok(Some(AffineWitness {
                        x: ball_a.vertex(x).to_string(),
                        y: ball_a.vertex(y).to_string(),
                        alpha_xy: alpha[k].to_string(),
                        alpha_x_alpha_y: prod.to_string(),
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(AffineVerdict {
        affine: witness.is_none() && generators_preserved,
        h: h.to_string(),
        alpha_on_generators: on_gens,
        generators_preserved,
        witness,
    })
}

/// Source/target pairs moved by `m`, capped for display.
pub fn moved_vertices(ball: &Ball, m: &VertexMap, limit: usize) -> Vec<(String, String)> {
    ball.vertices()
        .iter()
        .zip(&m.images)
        .filter(|(v, w)| v != w)
        .take(limit)
        .map(|(v, w)| (v.to_string(), w.to_string()))
        .collect()
}

/// Normal at radius `(r, t)` iff every stable local automorphism is affine.
pub fn normality_verdict(
    p: Arc<PcPresentation>,
    s: GenSet,
    r: usize,
    t: usize,
    cap: usize,
    opts: BallOptions,
) -> Result<Report> {
    let base = Report::new("every automorphism of the Cayley graph is affine", Verdict::Inconclusive)
        .param("group", p.name())
        .param("presentation", p.content_hash())
        .param("genset", s.elements().iter().map(|g| g.to_string()).collect::<Vec<_>>())
        .param("r", r)
        .param("t", t)
        .param("cap", cap);
    let set = match enumerate_local_auts_for(p, s, r, t, cap, opts) {
        Ok(set) => set,
        Err(Error::CapExceeded { partial, .. }) => {
            return Ok(base.note(format!("enumeration stopped after {partial} maps")));
        }
        Err(e) => return Err(e),
    };
    let verdicts: Vec<AffineVerdict> = set
        .auts
        .iter()
        .map(|a| is_affine_on_ball(&set.inner, &set.inner, &a.map))
        .collect::<Result<_>>()?;
    let mut report = base.param("local_automorphisms", set.auts.len());
    match verdicts.iter().position(|v| !v.affine) {
        Some(i) => {
            report.verdict = Verdict::NonNormal;
            report = report.witness(serde_json::json!({
                "moved": moved_vertices(&set.inner, &set.auts[i].map, 16),
                "affine_check": verdicts[i],
            }));
        }
        None => {
            report.verdict = Verdict::Normal;
            report = report.note(format!("normal at radius ({r}, {t}); says nothing beyond the ball"));
        }
    }
    Ok(report)
}

/// Orbit of `g` under the stable local automorphisms.
pub fn aut_e_orbit(set: &LocalAutSet, g: &GroupElement) -> Result<Vec<GroupElement>> {
    let i = set
        .inner
        .index_of(g)
        .ok_or_else(|| Error::NotInBall(g.to_string()))?;
    if !set.inner.is_interior(i) && set.inner.radius() > 0 {
        return Err(Error::precondition("interior", format!("({g}) is on the boundary")));
    }
    let orbit: BTreeSet<GroupElement> = set.auts.iter().map(|a| a.map.images[i].clone()).collect();
    Ok(orbit.into_iter().collect())
}

/// The map `x -> h · α(x)` where `α` sends basis generator `i` to
/// `images[i]`; `α` must be an endomorphism for the result to be affine.
pub fn from_endomorphism(ball: &Ball, target: &PcPresentation, h: &GroupElement, images: &[GroupElement]) -> Result<VertexMap> {
    let p = ball.presentation();
    if images.len() != p.rank() {
        return Err(Error::InvalidParams(format!(
            "{} generator images for rank {}",
            images.len(),
            p.rank()
        )));
    }
    VertexMap::from_fn(ball, |x| {
        let mut acc = h.clone();
        for (img, e) in images.iter().zip(x.exponents()) {
            acc = target.multiply(&acc, &target.power(img, e)?)?;
        }
        Ok(acc)
    })
}

fn quotient_setup(ball: &Ball) -> Result<(Arc<PcPresentation>, GenSet)> {
    let p = ball.presentation();
    let q = Arc::new(quotient_by_torsion(p)?);
    let mut images = Vec::new();
    for s in ball.genset().elements() {
        let x = project_to_quotient(p, s);
        if !x.is_identity() && !images.contains(&x) {
            images.push(x);
        }
    }
    let gs = GenSet::new(&q, images)?;
    Ok((q, gs))
}

/// Check that `m` maps cosets of `N1` into cosets of `N2` and that the
/// induced map on the quotient balls is affine.
pub fn induced_quotient_check(
    ball_a: &Ball,
    ball_b: &Ball,
    m: &VertexMap,
    n1: &SubgroupWitness,
    n2: &SubgroupWitness,
) -> Result<Report> {
    let (Some(n1e), Some(_)) = (n1.elements(), n2.elements()) else {
        return Err(Error::precondition("listed-subgroup", "N1 and N2 must be listed"));
    };
    let check = check_vertex_map(ball_a, ball_b, m)?;
    if !check.ok {
        return Err(Error::precondition("vertex-map", format!("map fails adjacency at {:?}", check.witness)));
    }
    let p = ball_a.presentation();
    let q = ball_b.presentation();
    let mut report = Report::new("the map sends N1-cosets into N2-cosets and induces an affine map", Verdict::Pass)
        .param("r", ball_a.radius())
        .param("n1_order", n1e.len())
        .param("n2_order", n2.order());
    for g in ball_a.interior() {
        let mg = &m.images[g];
        let mg_inv = q.inverse(mg)?;
        for n in &n1e {
            let gn = p.multiply(ball_a.vertex(g), n)?;
            let Some(k) = ball_a.index_of(&gn) else { continue };
            let quotient = q.multiply(&m.images[k], &mg_inv)?;
            if !n2.contains(&quotient) {
                report.verdict = Verdict::Fail;
                return Ok(report.witness(serde_json::json!({
                    "coset_of": ball_a.vertex(g).to_string(),
                    "n": n.to_string(),
                    "image": m.images[k].to_string(),
                })));
            }
        }
    }

    let (qa, sa) = quotient_setup(ball_a)?;
    let (qb, sb) = quotient_setup(ball_b)?;
    let r = ball_a.radius();
    let bar_a = generate_ball(qa, sa, r, BallOptions::default())?;
    let bar_b = generate_ball(qb, sb, r, BallOptions::default())?;
    let mut rep: Vec<Option<usize>> = vec![None; bar_a.len()];
    for (i, g) in ball_a.vertices().iter().enumerate() {
        if let Some(j) = bar_a.index_of(&project_to_quotient(p, g)) {
            if rep[j].is_none() {
                rep[j] = Some(i);
            }
        }
    }
    let mut images = Vec::with_capacity(bar_a.len());
    for (j, r) in rep.iter().enumerate() {
        let Some(i) = r else {
            return Err(Error::BadVertexMap(format!(
                "quotient vertex ({}) has no lift in the ball",
                bar_a.vertex(j)
            )));
        };
        images.push(project_to_quotient(q, &m.images[*i]));
    }
    let induced = VertexMap { images };
    let induced_check = match check_vertex_map(&bar_a, &bar_b, &induced) {
        Ok(c) => c,
        Err(e) => {
            report.verdict = Verdict::Fail;
            return Ok(report.witness(serde_json::json!({ "induced_map": e.to_string() })));
        }
    };
    let affine = is_affine_on_ball(&bar_a, &bar_b, &induced)?;
    let identity = induced.images == bar_a.vertices();
    if !induced_check.ok || !affine.affine {
        report.verdict = Verdict::Fail;
    }
    Ok(report
        .param("induced_identity", identity)
        .witness(serde_json::json!({ "induced_affine": affine })))
}

/// Check `m(g z^k) = m(g) σ^k` with `σ = m(g)^-1 m(g z)` independent of `g`
/// and lying in the target's `Z†`.
pub fn central_translation_check(
    ball_a: &Ball,
    ball_b: &Ball,
    m: &VertexMap,
    z: &GroupElement,
    kmax: u64,
) -> Result<Report> {
    let p = ball_a.presentation();
    let q = ball_b.presentation();
    if !p.is_torsion_free() {
        return Err(Error::precondition("torsion-free", format!("{} has torsion", p.name())));
    }
    if !z_dagger(ball_a, kmax.max(1))?.contains(z) || z.is_identity() {
        return Err(Error::precondition(
            "z-dagger",
            format!("({z}) is not a nontrivial element of Z† inside the ball"),
        ));
    }
    let check = check_vertex_map(ball_a, ball_b, m)?;
    if !check.ok {
        return Err(Error::precondition("vertex-map", format!("map fails adjacency at {:?}", check.witness)));
    }
    let k = kmax as i64;
    let zk: Vec<GroupElement> = (-k..=k).map(|j| p.power(z, &BigInt::from(j))).collect::<Result<_>>()?;
    let mut sigma: Option<GroupElement> = None;
    let mut samples = 0usize;
    let mut report = Report::new("central powers are carried to powers of one element of Z†", Verdict::Pass)
        .param("z", z.to_string())
        .param("kmax", kmax);
    for g in 0..ball_a.len() {
        let gx = ball_a.vertex(g);
        let idx: Option<Vec<usize>> = zk
            .iter()
            .map(|w| {
                let y = p.multiply(gx, w).ok()?;
                let i = ball_a.index_of(&y)?;
                ball_a.is_interior(i).then_some(i)
            })
            .collect();
        let Some(idx) = idx else { continue };
        samples += 1;
        let mg = &m.images[g];
        let mg_inv = q.inverse(mg)?;
        let s_g = q.multiply(&mg_inv, &m.images[idx[(k + 1) as usize]])?;
        for (j, &i) in (-k..=k).zip(&idx) {
            let want = q.multiply(mg, &q.power(&s_g, &BigInt::from(j))?)?;
            if m.images[i] != want {
                report.verdict = Verdict::Fail;
                return Ok(report.witness(serde_json::json!({
                    "g": gx.to_string(), "k": j, "sigma_g": s_g.to_string(),
                })));
            }
        }
        match &sigma {
            None => sigma = Some(s_g),
            Some(s0) if *s0 != s_g => {
                report.verdict = Verdict::Fail;
                return Ok(report.witness(serde_json::json!({
                    "g": gx.to_string(), "sigma_g": s_g.to_string(), "sigma": s0.to_string(),
                })));
            }
            Some(_) => {}
        }
    }
    let Some(sigma) = sigma else {
        return Err(Error::precondition("radius", "no g with all g z^k interior"));
    };
    let central = q.is_central(&sigma)?;
    let derived = derived_isolator_witness(ball_b)?;
    if !central || !derived.contains(&sigma) {
        report.verdict = Verdict::Fail;
    }
    Ok(report
        .param("samples", samples)
        .param("sigma", sigma.to_string())
        .param("sigma_in_target_z_dagger", central && derived.contains(&sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::builtin_ball;
    use crate::constructions::{klein_flip_map, lift_generating_set, twin_swap_map};
    use crate::pcgroup::{builtin, Family};
    use crate::structure::torsion_subgroup;

    fn el(v: &[i64]) -> GroupElement {
        GroupElement::from_i64s(v)
    }

    fn opts() -> BallOptions {
        BallOptions::default()
    }

    #[test]
    fn square_symmetries() {
        let ball = builtin_ball(Family::Zn(2), 5, opts()).unwrap();
        let set = enumerate_local_auts(&ball, 2, DEFAULT_AUT_CAP).unwrap();
        assert_eq!(set.auts.len(), 8);
        for a in &set.auts {
            assert!(check_vertex_map(&set.inner, &set.inner, &a.map).unwrap().ok);
            assert!(is_affine_on_ball(&set.inner, &set.inner, &a.map).unwrap().affine);
        }
        let orbit = aut_e_orbit(&set, &el(&[1, 0])).unwrap();
        assert_eq!(orbit, vec![el(&[-1, 0]), el(&[0, -1]), el(&[0, 1]), el(&[1, 0])]);
        assert_eq!(aut_e_orbit(&set, &el(&[0, 0])).unwrap(), vec![el(&[0, 0])]);
    }

    #[test]
    fn radius_zero_has_only_the_identity() {
        let ball = builtin_ball(Family::Heisenberg, 2, opts()).unwrap();
        let set = enumerate_local_auts(&ball, 2, 10).unwrap();
        assert_eq!(set.auts.len(), 1);
    }

    #[test]
    fn klein_flip_is_found_and_not_affine() {
        let ball = builtin_ball(Family::KleinBottle, 6, opts()).unwrap();
        let set = enumerate_local_auts(&ball, 2, DEFAULT_AUT_CAP).unwrap();
        let flip = klein_flip_map(&set.inner).unwrap();
        assert!(set.auts.iter().any(|a| a.map == flip));
        let v = is_affine_on_ball(&set.inner, &set.inner, &flip).unwrap();
        assert!(!v.affine);
        assert!(v.witness.is_some());
    }

    #[test]
    fn translations_are_affine() {
        let ball = builtin_ball(Family::Heisenberg, 4, opts()).unwrap();
        let m = VertexMap::left_translation(&ball, &el(&[1, -1, 2])).unwrap();
        let v = is_affine_on_ball(&ball, &ball, &m).unwrap();
        assert!(v.affine);
        assert!(v.alpha_on_generators.iter().all(|(s, a)| s == a));
    }

    #[test]
    fn normality_verdicts() {
        let z2 = builtin(Family::Zn(2)).unwrap();
        let gs = GenSet::new(&z2.presentation, z2.genset).unwrap();
        let r = normality_verdict(Arc::new(z2.presentation), gs, 3, 2, DEFAULT_AUT_CAP, opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Normal);

        let k = builtin(Family::KleinBottle).unwrap();
        let gs = GenSet::new(&k.presentation, k.genset).unwrap();
        let r = normality_verdict(Arc::new(k.presentation), gs, 4, 2, DEFAULT_AUT_CAP, opts()).unwrap();
        assert_eq!(r.verdict, Verdict::NonNormal);
        assert_eq!(r.witnesses.len(), 1);

        let zz2 = builtin("ZxZ2".parse().unwrap()).unwrap().presentation;
        let s = lift_generating_set(&zz2, &[el(&[1]), el(&[-1])]).unwrap();
        let r = normality_verdict(Arc::new(zz2), s, 4, 2, DEFAULT_AUT_CAP, opts()).unwrap();
        assert_eq!(r.verdict, Verdict::NonNormal);
    }

    #[test]
    fn tiny_cap_is_inconclusive() {
        let k = builtin(Family::KleinBottle).unwrap();
        let gs = GenSet::new(&k.presentation, k.genset).unwrap();
        let r = normality_verdict(Arc::new(k.presentation), gs, 4, 2, 1, opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    fn fsf_ball(r: usize) -> Ball {
        let zz2 = builtin("ZxZ2".parse().unwrap()).unwrap().presentation;
        let s = lift_generating_set(&zz2, &[el(&[1]), el(&[-1])]).unwrap();
        generate_ball(Arc::new(zz2), s, r, opts()).unwrap()
    }

    #[test]
    fn twin_swap_is_not_affine_but_induces_identity() {
        let ball = fsf_ball(5);
        let swap = twin_swap_map(&ball, &el(&[2, 0]), &el(&[2, 1]), None).unwrap();
        let v = is_affine_on_ball(&ball, &ball, &swap.map).unwrap();
        assert!(!v.affine);
        assert!(v.generators_preserved);
        let n = torsion_subgroup(ball.presentation()).unwrap();
        let r = induced_quotient_check(&ball, &ball, &swap.map, &n, &n).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.parameters["induced_identity"], true);
    }

    #[test]
    fn fiber_permutation_induces_identity() {
        let ball = fsf_ball(4);
        let m = VertexMap::from_fn(&ball, |g| {
            let x = g.to_i64s().unwrap();
            let flip = i64::from(x[0].rem_euclid(2) == 0);
            Ok(el(&[x[0], (x[1] + flip).rem_euclid(2)]))
        })
        .unwrap();
        let n = torsion_subgroup(ball.presentation()).unwrap();
        let r = induced_quotient_check(&ball, &ball, &m, &n, &n).unwrap();
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn central_translations() {
        let ball = builtin_ball(Family::Heisenberg, 8, opts()).unwrap();
        let c = el(&[0, 0, 1]);
        let m = VertexMap::left_translation(&ball, &el(&[1, 1, 0])).unwrap();
        let r = central_translation_check(&ball, &ball, &m, &c, 1).unwrap();
        assert!(r.passed());
        assert_eq!(r.parameters["sigma"], "0,0,1");

        let p = ball.presentation();
        let swap = from_endomorphism(&ball, p, &p.identity(), &[el(&[0, 1, 0]), el(&[1, 0, 0]), el(&[0, 0, -1])]).unwrap();
        let r = central_translation_check(&ball, &ball, &swap, &c, 1).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.parameters["sigma"], "0,0,-1");

        let k = builtin_ball(Family::KleinBottle, 6, opts()).unwrap();
        let z = builtin_ball(Family::Zn(2), 6, opts()).unwrap();
        let grid = crate::constructions::klein_grid_map(&k).unwrap();
        assert!(matches!(
            central_translation_check(&k, &z, &grid, &el(&[0, 2]), 1),
            Err(Error::Precondition { what: "torsion-free", .. } | Error::Precondition { what: "z-dagger", .. })
        ));
    }
}
