//! Finite balls of Cayley graphs, the word metric they certify, and geodesic
//! counting/enumeration.
//!
//! Vertices of a [`Ball`] are kept in lexicographic order of their exponent
//! vectors, so ball construction is deterministic no matter how many rayon
//! workers process the BFS frontiers.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pcgroup::{builtin, Family, GroupElement, PcPresentation};
use crate::report::{Report, Verdict};

pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;
pub const DEFAULT_GEODESIC_CAP: usize = 1_000_000;

const NO_VERTEX: u32 = u32::MAX;

/// A finite generating set, deduplicated, never containing the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSet {
    elements: Vec<GroupElement>,
    inverse: Vec<Option<usize>>,
    symmetric: bool,
}

impl GenSet {
    pub fn new(p: &PcPresentation, elements: Vec<GroupElement>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut uniq = Vec::new();
        for g in elements {
            if !p.is_normal_form(&g) {
                return Err(Error::InvalidParams(format!(
                    "generator `{g}` is not a normal form for {}",
                    p.name()
                )));
            }
            if g.is_identity() {
                return Err(Error::precondition(
                    "identity-free",
                    "generating sets may not contain the identity",
                ));
            }
            if seen.insert(g.clone()) {
                uniq.push(g);
            }
        }
        let inverse = uniq
            .iter()
            .map(|g| {
                let inv = p.inverse(g)?;
                Ok(uniq.iter().position(|h| *h == inv))
            })
            .collect::<Result<Vec<_>>>()?;
        let symmetric = inverse.iter().all(Option::is_some);
        Ok(GenSet {
            elements: uniq,
            inverse,
            symmetric,
        })
    }

    /// `S` together with the inverses of its elements.
    pub fn symmetrized(p: &PcPresentation, elements: Vec<GroupElement>) -> Result<Self> {
        let mut all = Vec::with_capacity(elements.len() * 2);
        for g in elements {
            let inv = p.inverse(&g)?;
            all.push(g);
            all.push(inv);
        }
        GenSet::new(p, all)
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.elements.iter().position(|h| h == g)
    }

    pub fn inverse_index(&self, s: usize) -> Option<usize> {
        self.inverse[s]
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.position(g).is_some()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BallOptions {
    pub vertex_cap: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

/// The radius-`r` ball around `e` in `Cay(G; S)`.
#[derive(Debug)]
pub struct Ball {
    presentation: Arc<PcPresentation>,
    genset: GenSet,
    radius: usize,
    vertices: Vec<GroupElement>,
    dist: Vec<u32>,
    index: HashMap<GroupElement, u32>,
    adj: Vec<u32>,
    identity: usize,
    geodesic_counts: OnceLock<Vec<BigUint>>,
}

pub fn generate_ball(
    p: Arc<PcPresentation>,
    genset: GenSet,
    radius: usize,
    opts: BallOptions,
) -> Result<Ball> {
    if !genset.is_symmetric() {
        return Err(Error::precondition(
            "symmetric-genset",
            "ball generation needs a symmetric generating set",
        ));
    }
    let e = p.identity();
    let mut dist_of: HashMap<GroupElement, u32> = HashMap::new();
    dist_of.insert(e.clone(), 0);
    let mut frontier = vec![e];
    for level in 1..=radius {
        let products: Vec<Result<Vec<GroupElement>>> = frontier
            .par_iter()
            .map(|v| genset.elements.iter().map(|s| p.multiply(v, s)).collect())
            .collect();
        let mut next = Vec::new();
        for row in products {
            for w in row? {
                if !dist_of.contains_key(&w) {
                    next.push(w);
                }
            }
        }
        next.par_sort_unstable();
        next.dedup();
        if dist_of.len() + next.len() > opts.vertex_cap {
            return Err(Error::VertexBudget {
                cap: opts.vertex_cap,
                radius,
            });
        }
        for w in &next {
            dist_of.insert(w.clone(), level as u32);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }

    let mut vertices: Vec<GroupElement> = dist_of.keys().cloned().collect();
    vertices.par_sort_unstable();
    let dist: Vec<u32> = vertices.iter().map(|v| dist_of[v]).collect();
    let index: HashMap<GroupElement, u32> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i as u32))
        .collect();
    let k = genset.len();
    let rows: Vec<Result<Vec<u32>>> = vertices
        .par_iter()
        .map(|v| {
            genset
                .elements
                .iter()
                .map(|s| {
                    let w = p.multiply(v, s)?;
                    Ok(index.get(&w).copied().unwrap_or(NO_VERTEX))
                })
                .collect()
        })
        .collect();
    let mut adj = Vec::with_capacity(vertices.len() * k);
    for row in rows {
        adj.extend(row?);
    }
    let identity = index[&p.identity()] as usize;
    Ok(Ball {
        presentation: p,
        genset,
        radius,
        vertices,
        dist,
        index,
        adj,
        identity,
        geodesic_counts: OnceLock::new(),
    })
}

/// Ball of a built-in family with its standard generating set.
pub fn builtin_ball(family: Family, radius: usize, opts: BallOptions) -> Result<Ball> {
    let g = builtin(family)?;
    let gs = GenSet::new(&g.presentation, g.genset)?;
    generate_ball(Arc::new(g.presentation), gs, radius, opts)
}

/// Result of a distance query: exact, or only a certified lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Exact(u32),
    /// The ball cannot certify the distance; it is at least this value.
    Unknown { at_least: u32 },
}

impl Distance {
    pub fn exact(self) -> Option<u32> {
        match self {
            Distance::Exact(d) => Some(d),
            Distance::Unknown { .. } => None,
        }
    }
}

/// A path given by its start vertex and edge labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeodesicPath {
    pub start: GroupElement,
    pub labels: Vec<GroupElement>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The vertices visited, starting with `start`.
    pub fn vertices(&self, p: &PcPresentation) -> Result<Vec<GroupElement>> {
        let mut out = Vec::with_capacity(self.labels.len() + 1);
        let mut cur = self.start.clone();
        out.push(cur.clone());
        for s in &self.labels {
            cur = p.multiply(&cur, s)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn end(&self, p: &PcPresentation) -> Result<GroupElement> {
        let mut cur = self.start.clone();
        for s in &self.labels {
            cur = p.multiply(&cur, s)?;
        }
        Ok(cur)
    }

    pub fn describe(&self) -> String {
        let labels: Vec<String> = self.labels.iter().map(|s| format!("({s})")).collect();
        format!("({}) {}", self.start, labels.join(" "))
    }
}

impl Ball {
    pub fn presentation(&self) -> &PcPresentation {
        &self.presentation
    }

    pub fn presentation_arc(&self) -> Arc<PcPresentation> {
        Arc::clone(&self.presentation)
    }

    pub fn genset(&self) -> &GenSet {
        &self.genset
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[GroupElement] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &GroupElement {
        &self.vertices[i]
    }

    pub fn dist(&self, i: usize) -> u32 {
        self.dist[i]
    }

    pub fn distances(&self) -> &[u32] {
        &self.dist
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).map(|&i| i as usize)
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    /// `dist(e, g)` if `g` lies in the ball.
    pub fn dist_of(&self, g: &GroupElement) -> Option<u32> {
        self.index_of(g).map(|i| self.dist[i])
    }

    /// Index of `v * s_k`, if it lies in the ball.
    pub fn neighbor(&self, v: usize, s: usize) -> Option<usize> {
        let w = self.adj[v * self.genset.len() + s];
        (w != NO_VERTEX).then_some(w as usize)
    }

    /// In-ball neighbours of `v`, one per generator (so possibly repeated
    /// when two generators give the same vertex, which cannot happen for a
    /// deduplicated set).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.genset.len()).filter_map(move |s| self.neighbor(v, s).map(|w| (s, w)))
    }

    pub fn is_interior(&self, v: usize) -> bool {
        (self.dist[v] as usize) < self.radius
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| self.is_interior(v))
    }

    pub fn sphere(&self, k: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.dist[v] == k)
    }

    /// Whether `u` and `v` are adjacent, decided algebraically.
    pub fn adjacent(&self, u: &GroupElement, v: &GroupElement) -> Result<bool> {
        let p = &self.presentation;
        let d = p.multiply(&p.inverse(u)?, v)?;
        Ok(self.genset.contains(&d))
    }

    /// Oriented edges `(u, s, u*s)` with both ends in the ball.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).flat_map(move |u| self.neighbors(u).map(move |(s, v)| (u, s, v)))
    }

    /// Sorted neighbour lists of the induced subgraph on the ball.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|u| {
                let mut row: Vec<usize> = self.neighbors(u).map(|(_, v)| v).collect();
                row.sort_unstable();
                row.dedup();
                row
            })
            .collect()
    }

    /// `dist_S(u, v)`, exact when the ball can certify it.
    ///
    /// With `x = u^-1 v`: if `x` is in the ball its distance is read off;
    /// otherwise any geodesic of length `D <= 2r` passes through a vertex `w`
    /// on the sphere of radius `r` with `w^-1 x` in the ball, so the minimum
    /// of `r + dist(w^-1 x)` over that sphere is exact. If no such `w`
    /// exists the distance exceeds `2r`.
    pub fn distance(&self, u: &GroupElement, v: &GroupElement) -> Result<Distance> {
        let p = &self.presentation;
        let x = p.multiply(&p.inverse(u)?, v)?;
        if let Some(d) = self.dist_of(&x) {
            return Ok(Distance::Exact(d));
        }
        let r = self.radius as u32;
        let sphere: Vec<usize> = self.sphere(r).collect();
        let best = sphere
            .par_iter()
            .map(|&w| -> Result<Option<u32>> {
                let y = p.multiply(&p.inverse(&self.vertices[w])?, &x)?;
                Ok(self.dist_of(&y).map(|d| r + d))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .min();
        Ok(match best {
            Some(d) => Distance::Exact(d),
            None => Distance::Unknown {
                at_least: 2 * r + 1,
            },
        })
    }

    fn counts(&self) -> &[BigUint] {
        self.geodesic_counts.get_or_init(|| {
            let mut order: Vec<usize> = (0..self.len()).collect();
            order.sort_by_key(|&v| self.dist[v]);
            let mut cnt = vec![BigUint::zero(); self.len()];
            cnt[self.identity] = BigUint::one();
            for &v in &order {
                if self.dist[v] == 0 {
                    continue;
                }
                let mut acc = BigUint::zero();
                for (s, u) in self.predecessors(v, &self.dist) {
                    let _ = s;
                    acc += &cnt[u];
                }
                cnt[v] = acc;
            }
            cnt
        })
    }

    /// In-ball predecessors `(label index, u)` of `v` with `u * s = v` and
    /// `table[u] + 1 == table[v]`.
    fn predecessors<'a>(
        &'a self,
        v: usize,
        table: &'a [u32],
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        (0..self.genset.len()).filter_map(move |s| {
            let inv = self.genset.inverse_index(s)?;
            let u = self.neighbor(v, inv)?;
            (table[u] + 1 == table[v]).then_some((s, u))
        })
    }

    fn translate_target(&self, u: &GroupElement, v: &GroupElement) -> Result<usize> {
        let p = &self.presentation;
        let x = p.multiply(&p.inverse(u)?, v)?;
        self.index_of(&x).ok_or_else(|| {
            Error::NotInBall(format!(
                "u^-1 v = ({x}) is outside the radius-{} ball",
                self.radius
            ))
        })
    }

    /// Number of geodesic label sequences from `u` to `v`.
    pub fn count_geodesics(&self, u: &GroupElement, v: &GroupElement) -> Result<BigUint> {
        let x = self.translate_target(u, v)?;
        Ok(self.counts()[x].clone())
    }

    /// Geodesics from `u` to `v`, in lexicographic order of label indices.
    pub fn enumerate_geodesics(
        &self,
        u: &GroupElement,
        v: &GroupElement,
        cap: usize,
    ) -> Result<Vec<GeodesicPath>> {
        let x = self.translate_target(u, v)?;
        // vertices lying on some geodesic from e to x
        let mut on_path = vec![false; self.len()];
        on_path[x] = true;
        let mut stack = vec![x];
        while let Some(w) = stack.pop() {
            for (_, pred) in self.predecessors(w, &self.dist) {
                if !on_path[pred] {
                    on_path[pred] = true;
                    stack.push(pred);
                }
            }
        }
        let target_d = self.dist[x];
        let mut out = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        let mut truncated = false;
        self.walk_geodesics(self.identity, x, target_d, &on_path, &mut labels, &mut out, cap, &mut truncated);
        if truncated {
            return Err(Error::CapExceeded {
                cap,
                partial: out.len(),
            });
        }
        Ok(out
            .into_iter()
            .map(|ls| GeodesicPath {
                start: u.clone(),
                labels: ls.into_iter().map(|s| self.genset.elements[s].clone()).collect(),
            })
            .collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_geodesics(
        &self,
        w: usize,
        x: usize,
        target_d: u32,
        on_path: &[bool],
        labels: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if self.dist[w] == target_d {
            if w == x {
                if out.len() == cap {
                    *truncated = true;
                    return;
                }
                out.push(labels.clone());
            }
            return;
        }
        for s in 0..self.genset.len() {
            let Some(next) = self.neighbor(w, s) else { continue };
            if on_path[next] && self.dist[next] == self.dist[w] + 1 {
                labels.push(s);
                self.walk_geodesics(next, x, target_d, on_path, labels, out, cap, truncated);
                labels.pop();
            }
        }
    }

    /// TSV edge list `src<TAB>label<TAB>dst` with a commented header.
    pub fn export_graph(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# group {}", self.presentation.name());
        let _ = writeln!(out, "# presentation {}", self.presentation.content_hash());
        let gens: Vec<String> = self.genset.elements.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(out, "# genset {}", gens.join(" "));
        let _ = writeln!(out, "# radius {}", self.radius);
        for (u, s, v) in self.edges() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                self.vertices[u], self.genset.elements[s], self.vertices[v]
            );
        }
        out
    }

    /// TSV `vertex<TAB>dist`.
    pub fn export_distances(&self) -> String {
        let mut out = String::new();
        for (v, d) in self.vertices.iter().zip(&self.dist) {
            let _ = writeln!(out, "{v}\t{d}");
        }
        out
    }
}

fn sampled_normality(ball: &Ball, n_set: &HashSet<GroupElement>) -> Result<Option<String>> {
    let p = ball.presentation();
    for n in n_set {
        for s in ball.genset().elements() {
            let c = p.conjugate(n, s)?;
            if !n_set.contains(&c) {
                return Ok(Some(format!("({n}) conjugated by ({s}) gives ({c}) outside N")));
            }
        }
    }
    Ok(None)
}

type LabelCount = (u32, Option<(usize, usize)>);

/// Check that no geodesic from `e` inside the ball uses two edges labelled
/// by elements of `N`.
pub fn torsion_label_bound(ball: &Ball, n_elements: &[GroupElement]) -> Result<Report> {
    torsion_label_bound_with(ball, ball.distances(), n_elements)
}

/// As [`torsion_label_bound`], trusting the supplied distance table; a
/// corrupted table yields a failing verdict with a witness path.
pub fn torsion_label_bound_with(
    ball: &Ball,
    table: &[u32],
    n_elements: &[GroupElement],
) -> Result<Report> {
    let n_set: HashSet<GroupElement> = n_elements.iter().cloned().collect();
    if let Some(why) = sampled_normality(ball, &n_set)? {
        return Err(Error::precondition("normal-subgroup", why));
    }
    let labelled_n: Vec<bool> = ball
        .genset()
        .elements()
        .iter()
        .map(|s| n_set.contains(s))
        .collect();
    let mut order: Vec<usize> = (0..ball.len()).collect();
    order.sort_by_key(|&v| (table[v], v));
    // best N-label count reaching v, with the predecessor edge (u, s)
    let mut best: Vec<Option<LabelCount>> = vec![None; ball.len()];
    best[ball.identity_index()] = Some((0, None));
    let mut worst: Option<usize> = None;
    for &v in &order {
        if v == ball.identity_index() {
            continue;
        }
        let mut here: Option<(u32, Option<(usize, usize)>)> = None;
        for (s, u) in ball.predecessors(v, table) {
            let Some((cu, _)) = best[u] else { continue };
            let c = cu + u32::from(labelled_n[s]);
            if here.is_none_or(|(h, _)| c > h) {
                here = Some((c, Some((u, s))));
            }
        }
        best[v] = here;
        if let Some((c, _)) = here {
            if c >= 2 && worst.is_none() {
                worst = Some(v);
            }
        }
    }
    let n_edges = ball
        .edges()
        .filter(|&(_, s, _)| labelled_n[s])
        .count();
    let mut report = Report::new(
        "every geodesic in the ball has at most one edge labelled by N",
        Verdict::Pass,
    )
    .param("r", ball.radius())
    .param("n_order", n_set.len())
    .param("n_labelled_edges", n_edges);
    if let Some(v) = worst {
        let mut labels = Vec::new();
        let mut cur = v;
        while let Some((_, Some((u, s)))) = best[cur] {
            labels.push(ball.genset().elements()[s].clone());
            cur = u;
        }
        labels.reverse();
        let path = GeodesicPath {
            start: ball.presentation().identity(),
            labels,
        };
        report.verdict = Verdict::Fail;
        report = report.witness(path.describe());
    }
    Ok(report)
}

/// Insert one `N`-labelled edge at every position of a geodesic.
///
/// `geo` has labels `(n, s_1, ..., s_k)` with `n` in `N`; the result holds the
/// `k + 1` paths `(s_1, ..., s_i, n_i, s_{i+1}, ..., s_k)` where
/// `n_i = (s_1...s_i)^-1 n (s_1...s_i)`.
pub fn insert_torsion_edge(
    p: &PcPresentation,
    geo: &GeodesicPath,
    n_elements: &[GroupElement],
) -> Result<Vec<GeodesicPath>> {
    let n_set: HashSet<&GroupElement> = n_elements.iter().collect();
    let Some((n, rest)) = geo.labels.split_first() else {
        return Err(Error::precondition("torsion-label", "path is empty"));
    };
    if !n_set.contains(n) {
        return Err(Error::precondition(
            "torsion-label",
            format!("first label ({n}) is not in N"),
        ));
    }
    let end = geo.end(p)?;
    let mut prefix = p.identity();
    let mut out: Vec<GeodesicPath> = Vec::with_capacity(rest.len() + 1);
    for i in 0..=rest.len() {
        let n_i = p.conjugate(n, &prefix)?;
        if !n_set.contains(&n_i) {
            return Err(Error::precondition(
                "normal-subgroup",
                format!("conjugate ({n_i}) of ({n}) falls outside N"),
            ));
        }
        let mut labels: Vec<GroupElement> = rest[..i].to_vec();
        labels.push(n_i);
        labels.extend_from_slice(&rest[i..]);
        let path = GeodesicPath {
            start: geo.start.clone(),
            labels,
        };
        debug_assert_eq!(path.end(p)?, end);
        out.push(path);
        if i < rest.len() {
            prefix = p.multiply(&prefix, &rest[i])?;
        }
    }
    Ok(out)
}

/// A candidate graph map: `images[i]` is the image of source vertex `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexMap {
    pub images: Vec<GroupElement>,
}

impl VertexMap {
    pub fn identity(ball: &Ball) -> Self {
        VertexMap {
            images: ball.vertices().to_vec(),
        }
    }

    pub fn from_fn(ball: &Ball, mut f: impl FnMut(&GroupElement) -> Result<GroupElement>) -> Result<Self> {
        Ok(VertexMap {
            images: ball.vertices().iter().map(&mut f).collect::<Result<_>>()?,
        })
    }

    /// `x -> g x`.
    pub fn left_translation(ball: &Ball, g: &GroupElement) -> Result<Self> {
        let p = ball.presentation();
        VertexMap::from_fn(ball, |x| p.multiply(g, x))
    }

    pub fn image_of(&self, ball: &Ball, x: &GroupElement) -> Option<&GroupElement> {
        ball.index_of(x).map(|i| &self.images[i])
    }

    /// TSV `src<TAB>dst`.
    pub fn export_tsv(&self, ball: &Ball) -> String {
        let mut out = String::new();
        for (v, w) in ball.vertices().iter().zip(&self.images) {
            let _ = writeln!(out, "{v}\t{w}");
        }
        out
    }
}

/// Outcome of [`check_vertex_map`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapCheck {
    pub ok: bool,
    /// First offending pair `(u, v)` of source vertices when `ok` is false.
    pub witness: Option<(String, String)>,
}

/// Whether `m` maps `ball_a` bijectively onto the ball of the same radius
/// around `m(e)` in the target graph, preserving adjacency and
/// non-adjacency between each interior vertex and every ball vertex.
pub fn check_vertex_map(ball_a: &Ball, ball_b: &Ball, m: &VertexMap) -> Result<MapCheck> {
    if m.images.len() != ball_a.len() {
        return Err(Error::BadVertexMap(format!(
            "map has {} images for {} vertices",
            m.images.len(),
            ball_a.len()
        )));
    }
    if ball_b.radius() < ball_a.radius() {
        return Err(Error::BadVertexMap(format!(
            "radius mismatch: target radius {} < source radius {}",
            ball_b.radius(),
            ball_a.radius()
        )));
    }
    let q = ball_b.presentation();
    let r = ball_a.radius() as u32;
    let h = &m.images[ball_a.identity_index()];
    let h_inv = q.inverse(h)?;
    let mut preimage: HashMap<&GroupElement, usize> = HashMap::with_capacity(m.images.len());
    for (i, img) in m.images.iter().enumerate() {
        if !q.is_normal_form(img) {
            return Err(Error::BadVertexMap(format!("image ({img}) is not a normal form")));
        }
        if preimage.insert(img, i).is_some() {
            return Err(Error::BadVertexMap(format!(
                "not injective: ({img}) is hit twice"
            )));
        }
        let rel = q.multiply(&h_inv, img)?;
        match ball_b.dist_of(&rel) {
            Some(d) if d <= r => {}
            _ => {
                return Err(Error::BadVertexMap(format!(
                    "image ({img}) of ({}) lies outside the radius-{r} ball around ({h})",
                    ball_a.vertex(i)
                )))
            }
        }
    }
    let target_size = ball_b.distances().iter().filter(|&&d| d <= r).count();
    if target_size != ball_a.len() {
        return Err(Error::BadVertexMap(format!(
            "not surjective: {} source vertices, {target_size} target vertices",
            ball_a.len()
        )));
    }
    let fail = (0..ball_a.len())
        .into_par_iter()
        .filter(|&u| ball_a.is_interior(u))
        .map(|u| -> Result<Option<(usize, usize)>> {
            let mut src: Vec<usize> = ball_a.neighbors(u).map(|(_, v)| v).collect();
            src.sort_unstable();
            let mu = &m.images[u];
            let mut dst: Vec<usize> = Vec::with_capacity(ball_b.genset().len());
            for s in ball_b.genset().elements() {
                let w = q.multiply(mu, s)?;
                if let Some(&v) = preimage.get(&w) {
                    dst.push(v);
                }
            }
            dst.sort_unstable();
            if src == dst {
                return Ok(None);
            }
            let v = src
                .iter()
                .find(|v| !dst.contains(v))
                .or_else(|| dst.iter().find(|v| !src.contains(v)))
                .copied()
                .unwrap_or(u);
            Ok(Some((u, v)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .next();
    Ok(match fail {
        None => MapCheck {
            ok: true,
            witness: None,
        },
        Some((u, v)) => MapCheck {
            ok: false,
            witness: Some((ball_a.vertex(u).to_string(), ball_a.vertex(v).to_string())),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcgroup::{builtin, Family};

    fn ball_for(f: Family, r: usize) -> Ball {
        let g = builtin(f).unwrap();
        let gs = GenSet::new(&g.presentation, g.genset).unwrap();
        generate_ball(Arc::new(g.presentation), gs, r, BallOptions::default()).unwrap()
    }

    fn el(v: &[i64]) -> GroupElement {
        GroupElement::from_i64s(v)
    }

    #[test]
    fn small_ball_sizes() {
        assert_eq!(ball_for(Family::Zn(2), 2).len(), 13);
        assert_eq!(ball_for(Family::Heisenberg, 0).len(), 1);
        assert_eq!(ball_for(Family::KleinBottle, 1).len(), 5);
    }

    #[test]
    fn vertices_are_lexicographic() {
        let b = ball_for(Family::Heisenberg, 3);
        assert!(b.vertices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn distances_and_certification() {
        let z2 = ball_for(Family::Zn(2), 4);
        assert_eq!(z2.distance(&el(&[0, 0]), &el(&[3, 4])).unwrap(), Distance::Exact(7));
        assert_eq!(z2.distance(&el(&[0, 0]), &el(&[0, 0])).unwrap(), Distance::Exact(0));
        assert_eq!(
            z2.distance(&el(&[0, 0]), &el(&[5, 5])).unwrap(),
            Distance::Unknown { at_least: 9 }
        );
        let h = ball_for(Family::Heisenberg, 4);
        assert_eq!(h.dist_of(&el(&[0, 0, 1])), Some(4));
    }

    #[test]
    fn geodesic_counts_and_paths() {
        let z2 = ball_for(Family::Zn(2), 4);
        let e = el(&[0, 0]);
        assert_eq!(z2.enumerate_geodesics(&e, &el(&[1, 1]), 100).unwrap().len(), 2);
        assert_eq!(z2.enumerate_geodesics(&e, &el(&[2, 0]), 100).unwrap().len(), 1);
        assert_eq!(z2.count_geodesics(&e, &el(&[2, 1])).unwrap(), BigUint::from(3u32));
        assert_eq!(z2.count_geodesics(&e, &e).unwrap(), BigUint::one());
        let single = z2.enumerate_geodesics(&e, &el(&[0, -1]), 100).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].labels, vec![el(&[0, -1])]);
        assert!(matches!(
            z2.enumerate_geodesics(&e, &el(&[2, 2]), 3),
            Err(Error::CapExceeded { cap: 3, partial: 3 })
        ));
    }

    #[test]
    fn geodesics_between_translated_pairs() {
        let z2 = ball_for(Family::Zn(2), 3);
        let u = el(&[2, 0]);
        let v = el(&[3, 1]);
        let paths = z2.enumerate_geodesics(&u, &v, 10).unwrap();
        assert_eq!(paths.len(), 2);
        for p in &paths {
            assert_eq!(p.start, u);
            assert_eq!(p.end(z2.presentation()).unwrap(), v);
        }
    }

    #[test]
    fn export_formats() {
        let z = ball_for(Family::Zn(1), 1);
        let tsv = z.export_graph();
        assert!(tsv.starts_with("# group Z^1\n"));
        assert!(tsv.contains("# radius 1\n"));
        assert!(tsv.contains("0\t1\t1\n"));
        assert!(tsv.contains("0\t-1\t-1\n"));
        assert_eq!(z.export_distances(), "-1\t1\n0\t0\n1\t1\n");
    }

    #[test]
    fn nonsymmetric_genset_is_refused() {
        let g = builtin(Family::Zn(2)).unwrap();
        let gs = GenSet::new(&g.presentation, vec![el(&[1, 0]), el(&[0, 1])]).unwrap();
        assert!(!gs.is_symmetric());
        assert!(generate_ball(Arc::new(g.presentation), gs, 2, BallOptions::default()).is_err());
    }

    #[test]
    fn identity_in_genset_is_refused() {
        let g = builtin(Family::Zn(2)).unwrap();
        assert!(GenSet::new(&g.presentation, vec![el(&[0, 0])]).is_err());
    }

    #[test]
    fn vertex_budget() {
        let g = builtin(Family::Zn(2)).unwrap();
        let gs = GenSet::new(&g.presentation, g.genset).unwrap();
        let err = generate_ball(Arc::new(g.presentation), gs, 10, BallOptions { vertex_cap: 50 }).unwrap_err();
        assert!(matches!(err, Error::VertexBudget { cap: 50, .. }));
    }

    #[test]
    fn vertex_map_checks() {
        let z2 = ball_for(Family::Zn(2), 4);
        let id = VertexMap::identity(&z2);
        assert!(check_vertex_map(&z2, &z2, &id).unwrap().ok);
        let t = VertexMap::left_translation(&z2, &el(&[1, 2])).unwrap();
        assert!(check_vertex_map(&z2, &z2, &t).unwrap().ok);
        // (x, y) -> (x, x + y) is a bijection of Z^2 but not of the ball
        let p = z2.presentation();
        let shear = VertexMap::from_fn(&z2, |v| {
            let x = v.to_i64s().unwrap();
            Ok(GroupElement::from_i64s(&[x[0], x[0] + x[1]]))
        })
        .unwrap();
        let _ = p;
        assert!(matches!(check_vertex_map(&z2, &z2, &shear), Err(Error::BadVertexMap(_))));
        // swap two vertices at distance 1 and 3: bijective but breaks adjacency
        let mut bad = id.clone();
        let i = z2.index_of(&el(&[1, 0])).unwrap();
        let j = z2.index_of(&el(&[0, 3])).unwrap();
        bad.images.swap(i, j);
        let check = check_vertex_map(&z2, &z2, &bad).unwrap();
        assert!(!check.ok);
        assert!(check.witness.is_some());
    }
}
