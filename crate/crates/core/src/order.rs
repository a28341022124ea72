//! Bi-orders read off declared filtrations, maximal generators, convex
//! geodesic lines and the distortion classifier.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::cayley::{generate_ball, Ball, BallOptions, Distance, GenSet, GeodesicPath};
use crate::error::{Error, Result};
use crate::pcgroup::{GroupElement, PcPresentation};
use crate::report::{Report, Verdict};

pub const DEFAULT_TOL: f64 = 0.5;
pub const DEFAULT_KMAX: u64 = 64;
/// Vertex budget for the balls grown while certifying a distortion profile.
pub const DEFAULT_PROFILE_BUDGET: usize = 2_000_000;

/// The order on a torsion-free nilpotent group given by scanning the blocks
/// of its declared filtration.
#[derive(Clone, Debug)]
pub struct BiOrder {
    presentation: Arc<PcPresentation>,
    scan: Vec<usize>,
}

impl BiOrder {
    pub fn new(p: Arc<PcPresentation>) -> Result<Self> {
        if !p.is_torsion_free() {
            return Err(Error::precondition(
                "torsion-free",
                format!("{} has torsion generators; no bi-order exists", p.name()),
            ));
        }
        if !p.is_nilpotent() {
            return Err(Error::precondition(
                "nilpotent",
                format!("{} is not declared nilpotent", p.name()),
            ));
        }
        let Some(blocks) = p.filtration() else {
            return Err(Error::precondition(
                "filtration",
                format!("{} declares no filtration", p.name()),
            ));
        };
        let scan: Vec<usize> = blocks.iter().flatten().copied().collect();
        if scan.len() != p.rank() {
            return Err(Error::precondition(
                "filtration",
                format!(
                    "filtration covers {} of {} generators",
                    scan.len(),
                    p.rank()
                ),
            ));
        }
        Ok(BiOrder {
            presentation: p,
            scan,
        })
    }

    pub fn presentation(&self) -> &PcPresentation {
        &self.presentation
    }

    /// Sign of the first nonzero exponent of `g` in scan order.
    pub fn sign(&self, g: &GroupElement) -> Ordering {
        for &i in &self.scan {
            let x = &g.exponents()[i];
            if !x.is_zero() {
                return if x.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        Ordering::Equal
    }

    /// `Less` iff `x ≺ y`, decided by the sign of `x^-1 y`.
    pub fn compare(&self, x: &GroupElement, y: &GroupElement) -> Result<Ordering> {
        let p = &self.presentation;
        let d = p.multiply(&p.inverse(x)?, y)?;
        Ok(self.sign(&d).reverse())
    }

    pub fn max_generator(&self, s: &GenSet) -> Result<GroupElement> {
        if s.is_empty() || !s.is_symmetric() {
            return Err(Error::precondition(
                "symmetric-genset",
                "need a nonempty symmetric generating set",
            ));
        }
        let mut best = &s.elements()[0];
        for g in &s.elements()[1..] {
            if self.compare(best, g)? == Ordering::Less {
                best = g;
            }
        }
        Ok(best.clone())
    }
}

/// Check that `k -> s^k` is a convex geodesic for `0 <= k <= kmax`.
pub fn convexity_check(ball: &Ball, s: &GroupElement, kmax: usize) -> Result<Report> {
    if !ball.genset().contains(s) {
        return Err(Error::precondition(
            "generator",
            format!("({s}) is not in the generating set"),
        ));
    }
    if kmax > ball.radius() {
        return Err(Error::precondition(
            "radius",
            format!("kmax {kmax} exceeds ball radius {}", ball.radius()),
        ));
    }
    let p = ball.presentation();
    let e = p.identity();
    let mut report = Report::new("powers of s form a convex geodesic", Verdict::Pass)
        .param("s", s.to_string())
        .param("kmax", kmax)
        .param("r", ball.radius());
    let mut g = e.clone();
    for k in 1..=kmax {
        g = p.multiply(&g, s)?;
        let d = ball.dist_of(&g);
        let count = ball.count_geodesics(&e, &g)?;
        if d != Some(k as u32) || count != 1u32.into() {
            report.verdict = Verdict::Fail;
            let mut paths = ball.enumerate_geodesics(&e, &g, 2).unwrap_or_default();
            let other = paths
                .drain(..)
                .find(|path| path.labels.iter().any(|l| l != s));
            report = report
                .witness(serde_json::json!({
                    "k": k,
                    "dist": d,
                    "geodesic_count": count.to_string(),
                    "other_geodesic": other.map(|path| path.describe()),
                }));
            return Ok(report);
        }
    }
    Ok(report.note(format!("verified for 1 <= k <= {kmax} only")))
}

/// Check that a convex segment containing an edge labelled by a central
/// `s` has every edge labelled `s`.
pub fn central_label_propagation(
    ball: &Ball,
    segment: &GeodesicPath,
    s: &GroupElement,
) -> Result<Report> {
    let p = ball.presentation();
    let verts = segment.vertices(p)?;
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            let d = ball.distance(&verts[i], &verts[j])?;
            if d != Distance::Exact((j - i) as u32) {
                return Err(Error::precondition(
                    "convex",
                    format!(
                        "dist(({}), ({})) is {d:?}, expected {}",
                        verts[i],
                        verts[j],
                        j - i
                    ),
                ));
            }
            let count = ball.count_geodesics(&verts[i], &verts[j])?;
            if count != 1u32.into() {
                return Err(Error::precondition(
                    "convex",
                    format!(
                        "{count} geodesics between ({}) and ({})",
                        verts[i], verts[j]
                    ),
                ));
            }
        }
    }
    if !p.is_central(s)? {
        return Err(Error::precondition(
            "central",
            format!("({s}) is not central"),
        ));
    }
    if !segment.labels.contains(s) {
        return Err(Error::precondition(
            "labelled-edge",
            format!("no edge of the segment is labelled ({s})"),
        ));
    }
    let mut report = Report::new(
        "every edge of a convex segment through a central label carries that label",
        Verdict::Pass,
    )
    .param("s", s.to_string())
    .param("length", segment.len());
    if let Some(i) = segment.labels.iter().position(|l| l != s) {
        report.verdict = Verdict::Fail;
        report = report.witness(serde_json::json!({
            "from": verts[i].to_string(),
            "label": segment.labels[i].to_string(),
        }));
    }
    Ok(report)
}

/// One row of a distortion profile: bounds on `dist(e, g^k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub k: u64,
    pub lower: u64,
    pub upper: u64,
}

impl ProfileEntry {
    pub fn exact(&self) -> Option<u64> {
        (self.lower == self.upper).then_some(self.lower)
    }

    pub fn ratio(&self) -> f64 {
        self.upper as f64 / self.k as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionProfile {
    pub element: String,
    pub entries: Vec<ProfileEntry>,
    /// Radius of the largest ball used for certification.
    pub radius: usize,
}

impl DistortionProfile {
    pub fn is_certified(&self) -> bool {
        self.entries.iter().all(|e| e.exact().is_some())
    }

    /// TSV `k<TAB>dist<TAB>ratio`; uncertified rows print `lower..upper`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("k\tdist\tratio\n");
        for e in &self.entries {
            let dist = match e.exact() {
                Some(d) => d.to_string(),
                None => format!("{}..{}", e.lower, e.upper),
            };
            out.push_str(&format!("{}\t{}\t{:.6}\n", e.k, dist, e.ratio()));
        }
        out
    }
}

fn profile_ks(kmax: u64) -> Vec<u64> {
    let mut ks = Vec::new();
    let mut k = 1;
    while k <= kmax {
        ks.push(k);
        k *= 2;
    }
    if ks.last() != Some(&kmax) {
        ks.push(kmax);
    }
    ks
}

/// Lower bound from the projection onto the first filtration block, which
/// is a homomorphism to a free abelian group for a central filtration.
fn abelian_lower_bound(p: &PcPresentation, s: &GenSet, g: &GroupElement, k: u64) -> u64 {
    let Some(blocks) = p.filtration().filter(|_| p.is_nilpotent()) else {
        return 0;
    };
    let Some(first) = blocks.first() else { return 0 };
    let l1 = |x: &GroupElement| -> BigInt {
        first.iter().map(|&i| x.exponents()[i].abs()).sum()
    };
    let step = s.elements().iter().map(&l1).max().unwrap_or_default();
    if step.is_zero() {
        return 0;
    }
    let total = l1(g) * BigInt::from(k);
    let bound = (total + &step - 1u32) / step;
    u64::try_from(bound).unwrap_or(u64::MAX)
}

/// Bounds on `dist_S(e, g^k)` for `k = 1, 2, 4, ..., kmax`, growing a ball
/// until every entry is exact or the vertex budget runs out.
pub fn distortion_profile(
    p: Arc<PcPresentation>,
    s: &GenSet,
    g: &GroupElement,
    kmax: u64,
    budget: usize,
) -> Result<DistortionProfile> {
    if g.is_identity() {
        return Err(Error::precondition("nontrivial", "g must not be the identity"));
    }
    if kmax == 0 {
        return Err(Error::InvalidParams("kmax must be at least 1".into()));
    }
    let ks = profile_ks(kmax);
    let mut powers = Vec::with_capacity(ks.len());
    for &k in &ks {
        powers.push(p.power(g, &BigInt::from(k))?);
    }
    let mut entries: Vec<ProfileEntry> = ks
        .iter()
        .map(|&k| ProfileEntry {
            k,
            lower: abelian_lower_bound(&p, s, g, k),
            upper: u64::MAX,
        })
        .collect();
    let mut radius = 0;
    let mut r = 1;
    loop {
        let ball = match generate_ball(Arc::clone(&p), s.clone(), r, BallOptions { vertex_cap: budget }) {
            Ok(b) => b,
            Err(Error::VertexBudget { .. }) => break,
            Err(e) => return Err(e),
        };
        radius = r;
        let e = p.identity();
        for (entry, gk) in entries.iter_mut().zip(&powers) {
            if entry.exact().is_some() {
                continue;
            }
            match ball.distance(&e, gk)? {
                Distance::Exact(d) => {
                    entry.lower = d as u64;
                    entry.upper = d as u64;
                }
                Distance::Unknown { at_least } => {
                    entry.lower = entry.lower.max(at_least as u64);
                }
            }
        }
        // subadditivity: dist(g^k) <= dist(g^j) + dist(g^(k-j))
        for i in 1..entries.len() {
            let (k, prev) = (entries[i].k, entries[i - 1].clone());
            let via_prev = if prev.k * 2 == k {
                prev.upper.saturating_mul(2)
            } else {
                u64::MAX
            };
            let via_first = entries[0].upper.saturating_mul(k);
            let ub = entries[i].upper.min(via_prev).min(via_first);
            entries[i].upper = ub.max(entries[i].lower);
        }
        if entries.iter().all(|e| e.exact().is_some()) {
            break;
        }
        r += 1;
    }
    Ok(DistortionProfile {
        element: g.to_string(),
        entries,
        radius,
    })
}

/// Membership of `g` in the isolator of the derived subgroup, where the
/// presentation declares it and is nilpotent.
pub fn analytic_distortion(p: &PcPresentation, g: &GroupElement) -> Option<bool> {
    if !p.is_nilpotent() {
        return None;
    }
    let mask = p.derived_isolator_mask()?;
    Some(
        g.exponents()
            .iter()
            .zip(mask)
            .all(|(x, &inside)| inside || x.is_zero()),
    )
}

pub fn classify_distorted(
    p: Arc<PcPresentation>,
    s: &GenSet,
    g: &GroupElement,
    kmax: u64,
    tol: f64,
    budget: usize,
) -> Result<Report> {
    let profile = distortion_profile(Arc::clone(&p), s, g, kmax, budget)?;
    let verdict = classify_profile(&profile, tol);
    let analytic = analytic_distortion(&p, g);
    if let Some(expected) = analytic {
        let clash = match verdict {
            Verdict::Distorted => !expected,
            Verdict::Undistorted => expected,
            _ => false,
        };
        if clash {
            return Err(Error::AnalyticDisagreement(format!(
                "({g}) classified {verdict:?} but isolator membership is {expected}"
            )));
        }
    }
    let rows: Vec<serde_json::Value> = profile
        .entries
        .iter()
        .map(|e| {
            serde_json::json!({
                "k": e.k,
                "dist": e.exact(),
                "lower": e.lower,
                "upper": e.upper,
                "ratio": e.ratio(),
            })
        })
        .collect();
    let mut report = Report::new("dist(e, g^k) / k tends to zero", verdict)
        .param("g", g.to_string())
        .param("kmax", kmax)
        .param("tol", tol)
        .param("radius", profile.radius)
        .param("profile", rows);
    if let Some(a) = analytic {
        report = report.param("analytic_distorted", a);
    }
    Ok(report)
}

fn classify_profile(profile: &DistortionProfile, tol: f64) -> Verdict {
    let e = &profile.entries;
    let Some(d1) = e[0].exact() else {
        return Verdict::Inconclusive;
    };
    let first = d1 as f64;
    let last = e[e.len() - 1].ratio();
    let ratios: Vec<f64> = e.iter().map(ProfileEntry::ratio).collect();
    let non_increasing = ratios.windows(2).all(|w| w[1] <= w[0]);
    if e.len() > 1 && last < tol * first && non_increasing {
        return Verdict::Distorted;
    }
    let exact: Option<Vec<u64>> = e.iter().map(ProfileEntry::exact).collect();
    if let Some(ds) = exact {
        let constant = e
            .iter()
            .zip(&ds)
            .all(|(entry, &d)| d as f64 / entry.k as f64 == first);
        if constant && first >= 1.0 {
            return Verdict::Undistorted;
        }
    }
    Verdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcgroup::{builtin, Family};

    fn setup(f: Family) -> (Arc<PcPresentation>, GenSet) {
        let g = builtin(f).unwrap();
        let gs = GenSet::new(&g.presentation, g.genset).unwrap();
        (Arc::new(g.presentation), gs)
    }

    fn el(v: &[i64]) -> GroupElement {
        GroupElement::from_i64s(v)
    }

    #[test]
    fn comparator_examples() {
        let (z2, _) = setup(Family::Zn(2));
        let o = BiOrder::new(z2).unwrap();
        assert_eq!(o.compare(&el(&[0, 1]), &el(&[1, 0])).unwrap(), Ordering::Less);
        assert_eq!(o.compare(&el(&[0, 0]), &el(&[1, 0])).unwrap(), Ordering::Less);
        assert_eq!(o.compare(&el(&[2, 3]), &el(&[2, 3])).unwrap(), Ordering::Equal);
        let (h, _) = setup(Family::Heisenberg);
        let o = BiOrder::new(h).unwrap();
        let (a, b, c) = (el(&[1, 0, 0]), el(&[0, 1, 0]), el(&[0, 0, 1]));
        assert_eq!(o.compare(&c, &b).unwrap(), Ordering::Less);
        assert_eq!(o.compare(&b, &a).unwrap(), Ordering::Less);
    }

    #[test]
    fn klein_and_torsion_are_refused() {
        let (k, _) = setup(Family::KleinBottle);
        assert!(matches!(BiOrder::new(k), Err(Error::Precondition { .. })));
        let (t, _) = setup(Family::ZnCrossCyclic { n: 1, m: 2 });
        assert!(matches!(
            BiOrder::new(t),
            Err(Error::Precondition { what: "torsion-free", .. })
        ));
    }

    #[test]
    fn maximal_generators() {
        let (z2, s) = setup(Family::Zn(2));
        assert_eq!(BiOrder::new(z2).unwrap().max_generator(&s).unwrap(), el(&[1, 0]));
        let (h, s) = setup(Family::Heisenberg);
        assert_eq!(BiOrder::new(h).unwrap().max_generator(&s).unwrap(), el(&[1, 0, 0]));
    }

    #[test]
    fn convexity() {
        let (z2, s) = setup(Family::Zn(2));
        let ball = generate_ball(z2, s, 6, BallOptions::default()).unwrap();
        assert!(convexity_check(&ball, &el(&[1, 0]), 5).unwrap().passed());
        assert!(matches!(
            convexity_check(&ball, &el(&[1, 1]), 5),
            Err(Error::Precondition { .. })
        ));
        let (h, s) = setup(Family::Heisenberg);
        let ball = generate_ball(h, s, 6, BallOptions::default()).unwrap();
        assert!(convexity_check(&ball, &el(&[1, 0, 0]), 5).unwrap().passed());
    }

    #[test]
    fn convexity_fails_for_a_torsion_generator() {
        let (p, s) = setup(Family::ZnCrossCyclic { n: 1, m: 2 });
        let ball = generate_ball(p, s, 3, BallOptions::default()).unwrap();
        let r = convexity_check(&ball, &el(&[0, 1]), 2).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn central_labels() {
        let (z2, s) = setup(Family::Zn(2));
        let ball = generate_ball(z2, s, 6, BallOptions::default()).unwrap();
        let seg = GeodesicPath {
            start: el(&[0, 0]),
            labels: vec![el(&[1, 0]); 5],
        };
        assert!(central_label_propagation(&ball, &seg, &el(&[1, 0])).unwrap().passed());

        let (h, s) = setup(Family::Heisenberg);
        let ball = generate_ball(h, s, 6, BallOptions::default()).unwrap();
        let seg = GeodesicPath {
            start: el(&[0, 0, 0]),
            labels: vec![el(&[1, 0, 0]); 3],
        };
        assert!(matches!(
            central_label_propagation(&ball, &seg, &el(&[1, 0, 0])),
            Err(Error::Precondition { what: "central", .. })
        ));
        // not convex: two routes to (1,1)
        let (z2, s) = setup(Family::Zn(2));
        let ball = generate_ball(z2, s, 4, BallOptions::default()).unwrap();
        let bent = GeodesicPath {
            start: el(&[0, 0]),
            labels: vec![el(&[1, 0]), el(&[0, 1])],
        };
        assert!(matches!(
            central_label_propagation(&ball, &bent, &el(&[1, 0])),
            Err(Error::Precondition { what: "convex", .. })
        ));
    }

    #[test]
    fn central_factor_of_a_product() {
        let f: Family = "H3xZ".parse().unwrap();
        let (p, s) = setup(f);
        let x = el(&[0, 0, 0, 1]);
        let ball = generate_ball(p, s, 5, BallOptions::default()).unwrap();
        let seg = GeodesicPath {
            start: el(&[0, 0, 0, 0]),
            labels: vec![x.clone(); 4],
        };
        assert!(central_label_propagation(&ball, &seg, &x).unwrap().passed());
    }

    #[test]
    fn heisenberg_center_is_distorted() {
        let (h, s) = setup(Family::Heisenberg);
        let prof = distortion_profile(h.clone(), &s, &el(&[0, 0, 1]), 16, DEFAULT_PROFILE_BUDGET).unwrap();
        assert_eq!(prof.entries[0].exact(), Some(4));
        let last = prof.entries.last().unwrap();
        assert_eq!(last.k, 16);
        assert!(last.ratio() <= 1.0);
        let r = classify_distorted(h, &s, &el(&[0, 0, 1]), 64, DEFAULT_TOL, DEFAULT_PROFILE_BUDGET).unwrap();
        assert_eq!(r.verdict, Verdict::Distorted);
    }

    #[test]
    fn basis_directions_are_undistorted() {
        let (z2, s) = setup(Family::Zn(2));
        let r = classify_distorted(z2, &s, &el(&[1, 0]), 64, DEFAULT_TOL, DEFAULT_PROFILE_BUDGET).unwrap();
        assert_eq!(r.verdict, Verdict::Undistorted);
        let (h, s) = setup(Family::Heisenberg);
        let r = classify_distorted(h, &s, &el(&[1, 0, 0]), 64, DEFAULT_TOL, DEFAULT_PROFILE_BUDGET).unwrap();
        assert_eq!(r.verdict, Verdict::Undistorted);
    }

    #[test]
    fn tiny_budget_is_inconclusive() {
        let (h, s) = setup(Family::Heisenberg);
        let r = classify_distorted(h, &s, &el(&[0, 0, 1]), 64, DEFAULT_TOL, 20).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn profile_points() {
        assert_eq!(profile_ks(64), vec![1, 2, 4, 8, 16, 32, 64]);
        assert_eq!(profile_ks(10), vec![1, 2, 4, 8, 10]);
    }
}
