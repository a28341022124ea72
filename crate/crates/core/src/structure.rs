//! Torsion subgroups, quotients by torsion, isolators, `Z†`, conjugator
//! search and Hirsch-rank bookkeeping.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{Ball, Distance};
use crate::error::{Error, Result};
use crate::pcgroup::{GroupElement, PcPresentation, PresentationDraft, RelativeOrder, Word};
use crate::report::{Report, Verdict};

/// Largest torsion subgroup this module will enumerate.
pub const MAX_TORSION_ORDER: u64 = 1 << 20;

/// Per-coordinate membership rule for subgroups described by a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoordRule {
    Free,
    Zero,
    Multiple(BigInt),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// The full, finite element list.
    Listed(BTreeSet<GroupElement>),
    /// A coordinate predicate on normal forms, trusted for built-ins.
    Coordinates(Vec<CoordRule>),
}

/// Outcome of sampled conjugation checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalityCertificate {
    pub conjugations_checked: usize,
    pub stable: bool,
}

/// A subgroup given by generators plus a way to decide membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupWitness {
    pub generators: Vec<GroupElement>,
    pub membership: Membership,
    pub normality: Option<NormalityCertificate>,
}

impl SubgroupWitness {
    pub fn trivial(p: &PcPresentation) -> Self {
        let e = p.identity();
        SubgroupWitness {
            generators: Vec::new(),
            membership: Membership::Listed(BTreeSet::from([e])),
            normality: Some(NormalityCertificate {
                conjugations_checked: 0,
                stable: true,
            }),
        }
    }

    /// Finite subgroup from a full element list; closure is verified.
    pub fn from_elements(p: &PcPresentation, elements: Vec<GroupElement>) -> Result<Self> {
        let set: BTreeSet<GroupElement> = elements.into_iter().collect();
        if let Some(why) = closure_failure(p, &set)? {
            return Err(Error::precondition("finite-subgroup", why));
        }
        Ok(SubgroupWitness {
            generators: set.iter().filter(|g| !g.is_identity()).cloned().collect(),
            membership: Membership::Listed(set),
            normality: None,
        })
    }

    pub fn from_rules(generators: Vec<GroupElement>, rules: Vec<CoordRule>) -> Self {
        SubgroupWitness {
            generators,
            membership: Membership::Coordinates(rules),
            normality: None,
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match &self.membership {
            Membership::Listed(set) => set.contains(g),
            Membership::Coordinates(rules) => {
                g.exponents().iter().zip(rules).all(|(x, rule)| match rule {
                    CoordRule::Free => true,
                    CoordRule::Zero => x.is_zero(),
                    CoordRule::Multiple(m) => x.is_multiple_of(m),
                })
            }
        }
    }

    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        match &self.membership {
            Membership::Listed(set) => Some(set.iter().cloned().collect()),
            Membership::Coordinates(_) => None,
        }
    }

    pub fn order(&self) -> Option<usize> {
        match &self.membership {
            Membership::Listed(set) => Some(set.len()),
            Membership::Coordinates(_) => None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == Some(1)
    }

    /// Check that conjugation by every generator (and inverse) of `p`
    /// preserves the listed elements.
    pub fn certify_normal(&mut self, p: &PcPresentation) -> Result<bool> {
        let Some(elems) = self.elements() else {
            return Err(Error::precondition(
                "listed-subgroup",
                "normality certificates need the full element list",
            ));
        };
        let mut checked = 0;
        let mut stable = true;
        'outer: for n in &elems {
            for i in 0..p.rank() {
                let g = p.generator(i);
                for h in [g.clone(), p.inverse(&g)?] {
                    checked += 1;
                    if !self.contains(&p.conjugate(n, &h)?) {
                        stable = false;
                        break 'outer;
                    }
                }
            }
        }
        self.normality = Some(NormalityCertificate {
            conjugations_checked: checked,
            stable,
        });
        Ok(stable)
    }
}

fn closure_failure(p: &PcPresentation, set: &BTreeSet<GroupElement>) -> Result<Option<String>> {
    if !set.contains(&p.identity()) {
        return Ok(Some("identity missing".into()));
    }
    for x in set {
        let inv = p.inverse(x)?;
        if !set.contains(&inv) {
            return Ok(Some(format!("inverse of ({x}) missing")));
        }
        for y in set {
            let xy = p.multiply(x, y)?;
            if !set.contains(&xy) {
                return Ok(Some(format!("({x})*({y}) = ({xy}) missing")));
            }
        }
    }
    Ok(None)
}

/// All elements supported on the torsion block.
pub fn torsion_subgroup(p: &PcPresentation) -> Result<SubgroupWitness> {
    let block = p.torsion_block();
    let mut orders = Vec::new();
    let mut total: u64 = 1;
    for i in block.clone() {
        let RelativeOrder::Finite(m) = p.generators()[i].order else {
            unreachable!("validated presentations keep the torsion block finite");
        };
        orders.push(m);
        total = total.saturating_mul(m);
    }
    if total > MAX_TORSION_ORDER {
        return Err(Error::InvalidParams(format!(
            "torsion block has {total} elements, above the {MAX_TORSION_ORDER} limit"
        )));
    }
    let mut elements = Vec::with_capacity(total as usize);
    let mut digits = vec![0u64; orders.len()];
    loop {
        let mut exps = vec![BigInt::zero(); p.rank()];
        for (slot, d) in block.clone().zip(&digits) {
            exps[slot] = BigInt::from(*d);
        }
        elements.push(GroupElement::from_exponents(exps));
        let mut pos = 0;
        while pos < digits.len() {
            digits[pos] += 1;
            if digits[pos] < orders[pos] {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == digits.len() {
            break;
        }
    }
    let n_order = BigInt::from(total);
    for x in &elements {
        if !p.power(x, &n_order)?.is_identity() {
            return Err(Error::Inconsistent(format!(
                "torsion element ({x}) has infinite order"
            )));
        }
    }
    let set: BTreeSet<GroupElement> = elements.into_iter().collect();
    if let Some(why) = closure_failure(p, &set)? {
        return Err(Error::Inconsistent(format!(
            "torsion block is not a subgroup: {why}"
        )));
    }
    let mut w = SubgroupWitness {
        generators: block.map(|i| p.generator(i)).collect(),
        membership: Membership::Listed(set),
        normality: None,
    };
    if !w.certify_normal(p)? {
        return Err(Error::Inconsistent(
            "torsion block is not conjugation-stable".into(),
        ));
    }
    Ok(w)
}

fn strip_torsion(w: &Word, keep: &[Option<usize>]) -> Word {
    Word(
        w.0.iter()
            .filter_map(|(g, e)| keep[*g].map(|j| (j, e.clone())))
            .collect(),
    )
}

/// The presentation of `G/N` on the infinite-order generators.
pub fn quotient_by_torsion(p: &PcPresentation) -> Result<PcPresentation> {
    torsion_subgroup(p)?;
    let block = p.torsion_block();
    let mut keep = vec![None; p.rank()];
    let mut d = PresentationDraft::new(if block.is_empty() {
        p.name().to_string()
    } else {
        format!("{}/torsion", p.name())
    });
    for (i, g) in p.generators().iter().enumerate() {
        if !block.contains(&i) {
            if g.order.is_finite() {
                return Err(Error::Inconsistent(format!(
                    "finite-order generator {} outside the torsion block",
                    g.name
                )));
            }
            keep[i] = Some(d.add_generator(g.name.clone(), RelativeOrder::Infinite));
        }
    }
    for (x, by, c) in p.relations() {
        let (Some(nx), Some(nby)) = (keep[x], keep[by]) else {
            continue;
        };
        let conj = strip_torsion(&c.by_gen, &keep);
        let conj_inv = strip_torsion(&c.by_inverse, &keep);
        if conj == Word::generator(nx) && conj_inv == Word::generator(nx) {
            continue;
        }
        d.set_conjugates(nx, nby, conj, conj_inv);
    }
    d.filtration = p.filtration().map(|blocks| {
        blocks
            .iter()
            .map(|b| b.iter().filter_map(|&i| keep[i]).collect::<Vec<_>>())
            .filter(|b| !b.is_empty())
            .collect()
    });
    d.nilpotent = p.is_nilpotent();
    d.polycyclic = p.is_polycyclic_certified();
    d.derived_isolator = p.derived_isolator_mask().map(|mask| {
        mask.iter()
            .enumerate()
            .filter(|(i, _)| keep[*i].is_some())
            .map(|(_, &m)| m)
            .collect()
    });
    let mut genset = Vec::new();
    for w in p.genset_words() {
        let s = strip_torsion(w, &keep);
        if !s.is_identity() && !genset.contains(&s) {
            genset.push(s);
        }
    }
    d.genset = genset;
    d.validate()
}

/// Image of `g` in `G/N` with `N` the torsion block.
pub fn project_to_quotient(p: &PcPresentation, g: &GroupElement) -> GroupElement {
    let block = p.torsion_block();
    GroupElement::from_exponents(
        g.exponents()
            .iter()
            .enumerate()
            .filter(|(i, _)| !block.contains(i))
            .map(|(_, x)| x.clone())
            .collect(),
    )
}

/// A ball element together with the least `k` certifying `g^k ∈ H`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsolatorMember {
    pub element: String,
    pub k: u64,
}

/// Ball elements with some power `g^k ∈ H`, `1 <= k <= kmax`: a certified
/// lower approximation of the isolator inside the ball.
pub fn isolator_oracle(
    ball: &Ball,
    h: &SubgroupWitness,
    kmax: u64,
) -> Result<Vec<(GroupElement, u64)>> {
    let p = ball.presentation();
    let rows: Vec<Option<(GroupElement, u64)>> = ball
        .vertices()
        .par_iter()
        .map(|g| -> Result<Option<(GroupElement, u64)>> {
            let mut acc = g.clone();
            for k in 1..=kmax {
                if h.contains(&acc) {
                    return Ok(Some((g.clone(), k)));
                }
                acc = p.multiply(&acc, g)?;
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Lower approximation of `[G,G] ∩ ball`: the closure inside the ball of
/// the commutators of generating-set elements.
pub fn commutator_closure(ball: &Ball) -> Result<SubgroupWitness> {
    let p = ball.presentation();
    let gens = ball.genset().elements();
    let mut comms = BTreeSet::new();
    for s in gens {
        for t in gens {
            let c = p.commutator(s, t)?;
            if !c.is_identity() {
                comms.insert(p.inverse(&c)?);
                comms.insert(c);
            }
        }
    }
    let e = p.identity();
    let mut seen: BTreeSet<GroupElement> = BTreeSet::from([e.clone()]);
    let mut stack = vec![e];
    while let Some(x) = stack.pop() {
        for c in &comms {
            let y = p.multiply(&x, c)?;
            if ball.contains(&y) && seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    Ok(SubgroupWitness {
        generators: comms.into_iter().collect(),
        membership: Membership::Listed(seen),
        normality: None,
    })
}

/// The `√[G,G]` membership predicate: the declared table when present,
/// otherwise the commutator-closure lower approximation.
pub fn derived_isolator_witness(ball: &Ball) -> Result<SubgroupWitness> {
    let p = ball.presentation();
    if let Some(mask) = p.derived_isolator_mask() {
        let rules = mask
            .iter()
            .map(|&inside| if inside { CoordRule::Free } else { CoordRule::Zero })
            .collect();
        let gens = mask
            .iter()
            .enumerate()
            .filter(|(_, &inside)| inside)
            .map(|(i, _)| p.generator(i))
            .collect();
        return Ok(SubgroupWitness::from_rules(gens, rules));
    }
    commutator_closure(ball)
}

/// Central ball elements lying in `√[G,G]`.
pub fn z_dagger(ball: &Ball, kmax: u64) -> Result<Vec<GroupElement>> {
    let p = ball.presentation();
    let derived = derived_isolator_witness(ball)?;
    let analytic = p.derived_isolator_mask().is_some();
    let central: Vec<Option<GroupElement>> = ball
        .vertices()
        .par_iter()
        .map(|g| -> Result<Option<GroupElement>> {
            if !p.is_central(g)? {
                return Ok(None);
            }
            let inside = if analytic {
                derived.contains(g)
            } else {
                let mut acc = g.clone();
                let mut hit = false;
                for _ in 0..kmax {
                    if derived.contains(&acc) {
                        hit = true;
                        break;
                    }
                    acc = p.multiply(&acc, g)?;
                }
                hit
            };
            Ok(inside.then(|| g.clone()))
        })
        .collect::<Result<_>>()?;
    Ok(central.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjugatorWitness {
    pub g: String,
    /// `dist(a^k, g b^k)` for `k = 1..=kmax`.
    pub distances: Vec<Distance>,
    pub constant: bool,
}

/// Shortlex-least ball element `g` with `g^-1 a g = b`.
pub fn find_conjugator(
    ball: &Ball,
    a: &GroupElement,
    b: &GroupElement,
    kmax: u64,
) -> Result<Option<(GroupElement, ConjugatorWitness)>> {
    let p = ball.presentation();
    let mut order: Vec<usize> = (0..ball.len()).collect();
    order.sort_by_key(|&v| (ball.dist(v), v));
    let hits: Vec<bool> = order
        .par_iter()
        .map(|&v| Ok(p.conjugate(a, ball.vertex(v))? == *b))
        .collect::<Result<_>>()?;
    let Some(pos) = hits.iter().position(|&h| h) else {
        return Ok(None);
    };
    let g = ball.vertex(order[pos]).clone();
    let mut distances = Vec::new();
    let mut ak = p.identity();
    let mut bk = p.identity();
    for _ in 0..kmax {
        ak = p.multiply(&ak, a)?;
        bk = p.multiply(&bk, b)?;
        let gbk = p.multiply(&g, &bk)?;
        distances.push(ball.distance(&ak, &gbk)?);
    }
    let constant = distances.windows(2).all(|w| w[0] == w[1]);
    Ok(Some((
        g.clone(),
        ConjugatorWitness {
            g: g.to_string(),
            distances,
            constant,
        },
    )))
}

/// `rank G = rank N + rank G/N` for `N` trivial or the torsion subgroup.
pub fn rank_report(p: &PcPresentation, n: &SubgroupWitness) -> Result<Report> {
    let Some(n_order) = n.order() else {
        return Err(Error::precondition(
            "subgroup-shape",
            "only finite listed subgroups are supported",
        ));
    };
    let rank_g = p.hirsch_rank()?;
    let torsion = torsion_subgroup(p)?;
    let rank_q = if n.is_trivial() {
        rank_g
    } else if n.elements() == torsion.elements() {
        quotient_by_torsion(p)?.hirsch_rank()?
    } else {
        return Err(Error::precondition(
            "subgroup-shape",
            "N must be trivial or the torsion subgroup",
        ));
    };
    let rank_n = 0usize;
    let verdict = if rank_g == rank_n + rank_q {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(Report::new("rank G = rank N + rank G/N", verdict)
        .param("group", p.name())
        .param("order_n", n_order)
        .param("rank_g", rank_g)
        .param("rank_n", rank_n)
        .param("rank_quotient", rank_q))
}

/// Whether every listed element of `h` has finite order dividing `|h|`.
pub fn all_finite_order(p: &PcPresentation, h: &SubgroupWitness) -> Result<bool> {
    let Some(elems) = h.elements() else {
        return Ok(false);
    };
    let n = BigInt::from(elems.len());
    for x in &elems {
        if !p.power(x, &n)?.is_identity() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `set` is closed under products and inverses and contains `e`.
pub fn is_closed(p: &PcPresentation, set: &HashSet<GroupElement>) -> Result<bool> {
    let s: BTreeSet<GroupElement> = set.iter().cloned().collect();
    Ok(closure_failure(p, &s)?.is_none())
}
