//! Explicit graph and generating-set constructions: lexicographic products,
//! lifted and `FSF` generating sets, twin classes and the Klein-bottle maps.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::cayley::{Ball, GenSet, MapCheck, VertexMap};
use crate::error::{Error, Result};
use crate::pcgroup::{GroupElement, PcPresentation};
use crate::structure::{project_to_quotient, torsion_subgroup, SubgroupWitness};

/// A finite simple graph with printable vertex labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    pub colors: Option<Vec<u32>>,
}

impl LabeledGraph {
    /// Edges are undirected; duplicates are merged, self-loops rejected.
    pub fn new(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParams(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        Ok(LabeledGraph {
            labels,
            edges: set.into_iter().collect(),
            adj,
            colors: None,
        })
    }

    /// The subgraph of the Cayley graph induced on the ball.
    pub fn from_ball(ball: &Ball) -> Self {
        let labels = ball.vertices().iter().map(|v| v.to_string()).collect();
        LabeledGraph::new(labels, ball.edges().map(|(u, _, v)| (u, v)))
            .expect("Cayley balls have no loops")
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Whether `map` (vertex `i` goes to `map[i]`) is an isomorphism onto
    /// `other`.
    pub fn check_isomorphism(&self, other: &LabeledGraph, map: &[usize]) -> Result<MapCheck> {
        if map.len() != self.vertex_count() || other.vertex_count() != self.vertex_count() {
            return Err(Error::BadVertexMap(format!(
                "vertex counts differ: {} -> {} via {} images",
                self.vertex_count(),
                other.vertex_count(),
                map.len()
            )));
        }
        let mut hit = vec![false; other.vertex_count()];
        for &j in map {
            if j >= hit.len() || std::mem::replace(&mut hit[j], true) {
                return Err(Error::BadVertexMap(format!("not a bijection at image {j}")));
            }
        }
        let witness = |u: usize, v: usize| MapCheck {
            ok: false,
            witness: Some((self.labels[u].clone(), self.labels[v].clone())),
        };
        if self.edge_count() != other.edge_count() {
            // find an edge that is not preserved, in either direction
            if let Some(&(u, v)) = self
                .edges
                .iter()
                .find(|&&(u, v)| !other.has_edge(map[u], map[v]))
            {
                return Ok(witness(u, v));
            }
            let mut inv = vec![0; map.len()];
            for (i, &j) in map.iter().enumerate() {
                inv[j] = i;
            }
            let &(x, y) = other
                .edges
                .iter()
                .find(|&&(x, y)| !self.has_edge(inv[x], inv[y]))
                .expect("edge counts differ");
            return Ok(witness(inv[x], inv[y]));
        }
        for &(u, v) in &self.edges {
            if !other.has_edge(map[u], map[v]) {
                return Ok(witness(u, v));
            }
        }
        Ok(MapCheck {
            ok: true,
            witness: None,
        })
    }
}

pub fn edgeless_graph(n: usize) -> Result<LabeledGraph> {
    if n == 0 {
        return Err(Error::InvalidParams("edgeless graph needs n >= 1".into()));
    }
    LabeledGraph::new((0..n).map(|i| i.to_string()).collect(), [])
}

/// Lexicographic product `X1[X2]`: vertex `(v1, v2)` has index
/// `v1 * |V2| + v2`.
pub fn wreath_product(x1: &LabeledGraph, x2: &LabeledGraph) -> LabeledGraph {
    let n2 = x2.vertex_count();
    let mut labels = Vec::with_capacity(x1.vertex_count() * n2);
    for l1 in x1.labels() {
        for l2 in x2.labels() {
            labels.push(format!("{l1}|{l2}"));
        }
    }
    let mut edges = Vec::new();
    for &(u1, v1) in x1.edges() {
        for a in 0..n2 {
            for b in 0..n2 {
                edges.push((u1 * n2 + a, v1 * n2 + b));
            }
        }
    }
    for v1 in 0..x1.vertex_count() {
        for &(a, b) in x2.edges() {
            edges.push((v1 * n2 + a, v1 * n2 + b));
        }
    }
    LabeledGraph::new(labels, edges).expect("products of simple graphs are simple")
}

fn embed_quotient(p: &PcPresentation, xbar: &GroupElement) -> Result<GroupElement> {
    let block = p.torsion_block();
    if xbar.len() + block.len() != p.rank() {
        return Err(Error::InvalidParams(format!(
            "quotient element ({xbar}) has the wrong length"
        )));
    }
    let mut it = xbar.exponents().iter();
    Ok(GroupElement::from_exponents(
        (0..p.rank())
            .map(|i| {
                if block.contains(&i) {
                    BigInt::zero()
                } else {
                    it.next().cloned().unwrap_or_default()
                }
            })
            .collect(),
    ))
}

/// Full preimage of a quotient generating set under `G -> G/N`, `N` the
/// torsion subgroup.
pub fn lift_generating_set(p: &PcPresentation, sbar: &[GroupElement]) -> Result<GenSet> {
    let n = torsion_subgroup(p)?.elements().expect("torsion subgroups are listed");
    let mut out = Vec::with_capacity(sbar.len() * n.len());
    for x in sbar {
        if x.is_identity() {
            return Err(Error::precondition(
                "identity-free",
                "the quotient generating set contains the identity",
            ));
        }
        let lift = embed_quotient(p, x)?;
        for t in &n {
            out.push(p.multiply(&lift, t)?);
        }
    }
    GenSet::new(p, out)
}

/// `FSF = { f1 s f2 }`, with the identity removed if it occurs.
#[derive(Clone, Debug)]
pub struct FsfGenSet {
    pub genset: GenSet,
    pub removed_identity: bool,
}

pub fn fsf_generating_set(p: &PcPresentation, f: &SubgroupWitness, s: &GenSet) -> Result<FsfGenSet> {
    let Some(fs) = f.elements() else {
        return Err(Error::precondition("finite-subgroup", "F must be listed"));
    };
    SubgroupWitness::from_elements(p, fs.clone())?;
    let mut seen = BTreeSet::new();
    let mut removed_identity = false;
    for f1 in &fs {
        for x in s.elements() {
            let left = p.multiply(f1, x)?;
            for f2 in &fs {
                let y = p.multiply(&left, f2)?;
                if y.is_identity() {
                    removed_identity = true;
                } else {
                    seen.insert(y);
                }
            }
        }
    }
    let genset = GenSet::new(p, seen.into_iter().collect())?;
    if !genset.is_symmetric() {
        return Err(Error::Inconsistent("FSF came out non-symmetric".into()));
    }
    Ok(FsfGenSet {
        genset,
        removed_identity,
    })
}

/// Classes of the twin relation `N(u) - {v} = N(v) - {u}` among `among`.
///
/// Non-adjacent twins share open neighbourhoods and adjacent twins share
/// closed ones; no vertex has twins of both kinds, so the union of the two
/// partitions is the twin partition.
fn twin_partition(adj: &[Vec<usize>], among: impl Iterator<Item = usize>) -> Vec<Vec<usize>> {
    let among: Vec<usize> = among.collect();
    let mut open: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    let mut closed: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for &v in &among {
        open.entry(adj[v].as_slice()).or_default().push(v);
        let mut nb = adj[v].clone();
        let pos = nb.binary_search(&v).unwrap_err();
        nb.insert(pos, v);
        closed.entry(nb).or_default().push(v);
    }
    let mut class_of: HashMap<usize, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for group in open.into_values().chain(closed.into_values()) {
        if group.len() < 2 {
            continue;
        }
        let id = classes.len();
        classes.push(group.clone());
        for v in group {
            class_of.insert(v, id);
        }
    }
    for v in among {
        if let std::collections::hash_map::Entry::Vacant(slot) = class_of.entry(v) {
            slot.insert(classes.len());
            classes.push(vec![v]);
        }
    }
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Interior vertices grouped into twin classes.
pub fn twin_classes(ball: &Ball) -> Vec<Vec<usize>> {
    let adj = ball.adjacency_lists();
    twin_partition(&adj, ball.interior())
}

/// All vertices of `g` grouped into twin classes.
pub fn twin_classes_of_graph(g: &LabeledGraph) -> Vec<Vec<usize>> {
    twin_partition(g.adjacency(), 0..g.vertex_count())
}

/// `a^i b^j -> (i, j)`: the Klein-bottle ball mapped into `Z^2`.
pub fn klein_grid_map(ball: &Ball) -> Result<VertexMap> {
    expect_klein(ball.presentation())?;
    VertexMap::from_fn(ball, |x| Ok(x.clone()))
}

/// `a^i b^j -> a^j b^i`: the coordinate swap of the grid picture, a graph
/// automorphism fixing `e` that sends `a` to `b`.
///
/// The formula `a^i b^j -> b^i a^j` (normal form `a^((-1)^i j) b^i`) is not
/// adjacency-preserving for edges `g -- gs`: `a^j b = b a^-j`, so the image of
/// the neighbour `a^(i+1) b^j` is not a neighbour of `b^i a^j` once `j != 0`.
/// It is kept as [`klein_literal_flip_map`] for comparison.
pub fn klein_flip_map(ball: &Ball) -> Result<VertexMap> {
    expect_klein(ball.presentation())?;
    VertexMap::from_fn(ball, |x| {
        let [i, j] = x.exponents() else { unreachable!() };
        Ok(GroupElement::from_exponents(vec![j.clone(), i.clone()]))
    })
}

/// `a^i b^j -> b^i a^j`, rewritten to normal form by collection.
pub fn klein_literal_flip_map(ball: &Ball) -> Result<VertexMap> {
    let p = ball.presentation();
    expect_klein(p)?;
    let (a, b) = (p.generator(0), p.generator(1));
    VertexMap::from_fn(ball, |x| {
        let [i, j] = x.exponents() else { unreachable!() };
        p.multiply(&p.power(&b, i)?, &p.power(&a, j)?)
    })
}

/// Closed form of [`klein_literal_flip_map`]: `b^i a^j = a^((-1)^i j) b^i`.
pub fn klein_flip_formula(i: i64, j: i64) -> (i64, i64) {
    let sign = if i.rem_euclid(2) == 0 { 1 } else { -1 };
    (sign * j, i)
}

fn expect_klein(p: &PcPresentation) -> Result<()> {
    let ok = p.rank() == 2
        && p.is_torsion_free()
        && p.is_normal_form(&GroupElement::from_i64s(&[0, 0]))
        && {
            let (a, b) = (p.generator(0), p.generator(1));
            p.conjugate(&a, &b)? == p.inverse(&a)?
        };
    if ok {
        Ok(())
    } else {
        Err(Error::precondition(
            "klein-bottle",
            format!("{} is not the Klein-bottle presentation <a, b | b^-1 a b = a^-1>", p.name()),
        ))
    }
}

/// The transposition of two twin vertices.
#[derive(Clone, Debug)]
pub struct TwinSwap {
    pub map: VertexMap,
    pub warnings: Vec<String>,
}

pub fn twin_swap_map(
    ball: &Ball,
    g: &GroupElement,
    h: &GroupElement,
    generating: Option<&[GroupElement]>,
) -> Result<TwinSwap> {
    let gi = ball
        .index_of(g)
        .ok_or_else(|| Error::NotInBall(g.to_string()))?;
    let hi = ball
        .index_of(h)
        .ok_or_else(|| Error::NotInBall(h.to_string()))?;
    let mut map = VertexMap::identity(ball);
    let mut warnings = Vec::new();
    if gi == hi {
        return Ok(TwinSwap { map, warnings });
    }
    for (v, x) in [(gi, g), (hi, h)] {
        if !ball.is_interior(v) {
            return Err(Error::precondition(
                "interior",
                format!("({x}) lies on the boundary sphere"),
            ));
        }
    }
    let adj = ball.adjacency_lists();
    let without = |v: usize, drop: usize| -> Vec<usize> {
        adj[v].iter().copied().filter(|&u| u != drop).collect()
    };
    if without(gi, hi) != without(hi, gi) {
        return Err(Error::precondition(
            "twins",
            format!("({g}) and ({h}) have different neighbourhoods"),
        ));
    }
    if let Some(set) = generating {
        for x in [g, h] {
            if x.is_identity() || set.contains(x) {
                warnings.push(format!("({x}) lies in the generating set or is e"));
            }
        }
    }
    map.images.swap(gi, hi);
    Ok(TwinSwap { map, warnings })
}

/// Check that `g -> (image of g in G/N, torsion part of g)` is an isomorphism
/// from the lifted ball onto `quotient_ball[E_|N|]`.
pub fn wreath_ball_check(lifted: &Ball, quotient: &Ball) -> Result<MapCheck> {
    let p = lifted.presentation();
    let n = torsion_subgroup(p)?.elements().expect("listed");
    let n_index: HashMap<&GroupElement, usize> = n.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let w = wreath_product(&LabeledGraph::from_ball(quotient), &edgeless_graph(n.len())?);
    let block = p.torsion_block();
    let mut map = Vec::with_capacity(lifted.len());
    for g in lifted.vertices() {
        let q = project_to_quotient(p, g);
        let qi = quotient
            .index_of(&q)
            .ok_or_else(|| Error::BadVertexMap(format!("({q}) missing from the quotient ball")))?;
        let t = GroupElement::from_exponents(
            g.exponents()
                .iter()
                .enumerate()
                .map(|(i, x)| if block.contains(&i) { x.clone() } else { BigInt::zero() })
                .collect(),
        );
        map.push(qi * n.len() + n_index[&t]);
    }
    LabeledGraph::from_ball(lifted).check_isomorphism(&w, &map)
}

/// Summary used by reports.
#[derive(Clone, Debug, Serialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
}

impl From<&LabeledGraph> for GraphSummary {
    fn from(g: &LabeledGraph) -> Self {
        GraphSummary {
            vertices: g.vertex_count(),
            edges: g.edge_count(),
        }
    }
}
