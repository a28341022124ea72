//! Built-in group families with their standard generating sets.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use super::{GroupElement, PcPresentation, PresentationDraft, RelativeOrder, Word};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Free abelian group of rank n.
    Zn(usize),
    /// Discrete Heisenberg group, basis a, b, c with `[a, b] = c`.
    Heisenberg,
    /// `<a, b | b^-1 a b = a^-1>`, normal form `a^i b^j`.
    KleinBottle,
    /// `Z^n x Z_m`, the cyclic factor last.
    ZnCrossCyclic { n: usize, m: u64 },
    DirectProduct(Box<Family>, Box<Family>),
}

impl Family {
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn product(a: Family, b: Family) -> Family {
        Family::DirectProduct(Box::new(a), Box::new(b))
    }

    /// Torsion-free members of the built-in catalogue that are nilpotent.
    pub fn is_torsion_free_nilpotent(&self) -> bool {
        match self {
            Family::Zn(_) | Family::Heisenberg => true,
            Family::KleinBottle | Family::ZnCrossCyclic { .. } => false,
            Family::DirectProduct(a, b) => a.is_torsion_free_nilpotent() && b.is_torsion_free_nilpotent(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zn(n) => write!(f, "zn:{n}"),
            Family::Heisenberg => f.write_str("heisenberg"),
            Family::KleinBottle => f.write_str("klein_bottle"),
            Family::ZnCrossCyclic { n, m } => write!(f, "zn_cross_cyclic:{n}:{m}"),
            Family::DirectProduct(a, b) => write!(f, "direct_product({a},{b})"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts the canonical ids printed by `Display` plus a few aliases:
    /// `Z`, `Z2`, `Z3`, `H3`, `klein`, `ZxZ2`, `H3xZ3`, `H3xZ2`, `H3xZ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |what: &str| Error::InvalidParams(format!("{what} in family id `{s}`"));
        match s {
            "Z" => return Ok(Family::Zn(1)),
            "Z2" => return Ok(Family::Zn(2)),
            "Z3" => return Ok(Family::Zn(3)),
            "H3" | "heisenberg" => return Ok(Family::Heisenberg),
            "klein" | "klein_bottle" => return Ok(Family::KleinBottle),
            "ZxZ2" => return Ok(Family::ZnCrossCyclic { n: 1, m: 2 }),
            "H3xZ3" => return Ok(Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 3 })),
            "H3xZ2" => return Ok(Family::product(Family::Heisenberg, Family::ZnCrossCyclic { n: 0, m: 2 })),
            "H3xZ" => return Ok(Family::product(Family::Heisenberg, Family::Zn(1))),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("direct_product(").and_then(|r| r.strip_suffix(')')) {
            // split at the top-level comma
            let mut depth = 0usize;
            let mut split = None;
            for (i, ch) in inner.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth = depth.checked_sub(1).ok_or_else(|| bad("unbalanced parentheses"))?,
                    ',' if depth == 0 => {
                        split = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            let i = split.ok_or_else(|| bad("missing factor"))?;
            return Ok(Family::product(inner[..i].parse()?, inner[i + 1..].parse()?));
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let nums: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<u64> {
            nums.get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse::<u64>()
                .map_err(|_| bad("non-numeric parameter"))
        };
        match head {
            "zn" if nums.len() == 1 => Ok(Family::Zn(num(0)? as usize)),
            "zn_cross_cyclic" if nums.len() == 2 => Ok(Family::ZnCrossCyclic {
                n: num(0)? as usize,
                m: num(1)?,
            }),
            "zn" | "zn_cross_cyclic" => Err(bad("wrong parameter count")),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// A validated built-in presentation together with its standard generating set.
#[derive(Clone, Debug)]
pub struct BuiltinGroup {
    pub family: Family,
    pub presentation: PcPresentation,
    pub genset: Vec<GroupElement>,
}

pub fn builtin(family: Family) -> Result<BuiltinGroup> {
    let draft = draft_for(&family)?;
    let presentation = draft.validate()?;
    let genset = presentation.declared_genset()?;
    Ok(BuiltinGroup {
        family,
        presentation,
        genset,
    })
}

fn word(syllables: &[(usize, i64)]) -> Word {
    Word(syllables.iter().map(|&(g, e)| (g, BigInt::from(e))).collect())
}

fn plus_minus(g: usize) -> [Word; 2] {
    [Word::generator(g), word(&[(g, -1)])]
}

fn zn_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

fn draft_for(family: &Family) -> Result<PresentationDraft> {
    match family {
        Family::Zn(n) => {
            if *n == 0 {
                return Err(Error::InvalidParams("zn needs n >= 1".into()));
            }
            let mut d = PresentationDraft::new(format!("Z^{n}"));
            d.nilpotent = true;
            for name in zn_names(*n) {
                let g = d.add_generator(name, RelativeOrder::Infinite);
                d.genset.extend(plus_minus(g));
            }
            d.filtration = Some(vec![(0..*n).collect()]);
            d.derived_isolator = Some(vec![false; *n]);
            Ok(d)
        }
        Family::Heisenberg => {
            let mut d = PresentationDraft::new("heisenberg");
            d.nilpotent = true;
            let a = d.add_generator("a", RelativeOrder::Infinite);
            let b = d.add_generator("b", RelativeOrder::Infinite);
            let c = d.add_generator("c", RelativeOrder::Infinite);
            // ab = ba c, so a^-1 b a = b c^-1 and a b a^-1 = b c
            d.set_conjugates(b, a, word(&[(b, 1), (c, -1)]), word(&[(b, 1), (c, 1)]));
            d.filtration = Some(vec![vec![a, b], vec![c]]);
            d.genset.extend(plus_minus(a));
            d.genset.extend(plus_minus(b));
            d.derived_isolator = Some(vec![false, false, true]);
            Ok(d)
        }
        Family::KleinBottle => {
            let mut d = PresentationDraft::new("klein_bottle");
            d.nilpotent = false;
            d.polycyclic = true;
            let a = d.add_generator("a", RelativeOrder::Infinite);
            let b = d.add_generator("b", RelativeOrder::Infinite);
            // b^-1 a b = a^-1 = b a b^-1
            d.set_conjugates(a, b, word(&[(a, -1)]), word(&[(a, -1)]));
            d.genset.extend(plus_minus(a));
            d.genset.extend(plus_minus(b));
            d.derived_isolator = Some(vec![true, false]);
            Ok(d)
        }
        Family::ZnCrossCyclic { n, m } => {
            if *m < 2 {
                return Err(Error::InvalidParams(format!(
                    "cyclic factor order must be at least 2, got {m}"
                )));
            }
            let mut d = PresentationDraft::new(if *n == 0 {
                format!("Z_{m}")
            } else {
                format!("Z^{n}xZ_{m}")
            });
            d.nilpotent = true;
            for name in zn_names(*n).into_iter().take(*n) {
                let g = d.add_generator(name, RelativeOrder::Infinite);
                d.genset.extend(plus_minus(g));
            }
            let t = d.add_generator("t", RelativeOrder::Finite(*m));
            d.power[t] = Some(Word::identity());
            d.torsion = t..t + 1;
            d.genset.push(Word::generator(t));
            if *m > 2 {
                d.genset.push(word(&[(t, *m as i64 - 1)]));
            }
            if *n > 0 {
                d.filtration = Some(vec![(0..*n).collect()]);
            }
            let mut mask = vec![false; *n];
            mask.push(true);
            d.derived_isolator = Some(mask);
            Ok(d)
        }
        Family::DirectProduct(a, b) => {
            let da = draft_for(a)?;
            let db = draft_for(b)?;
            direct_product(da, db)
        }
    }
}

fn direct_product(a: PresentationDraft, b: PresentationDraft) -> Result<PresentationDraft> {
    for f in [&a, &b] {
        if !f.torsion.is_empty() && f.torsion.end != f.generators.len() {
            return Err(Error::InvalidParams(format!(
                "direct products need torsion listed last in {}",
                f.name
            )));
        }
    }
    let na = a.generators.len();
    let nb = b.generators.len();
    let fa = na - a.torsion.len();
    let fb = nb - b.torsion.len();
    // free parts of both factors first, then both torsion blocks
    let map_a = |i: usize| if i < fa { i } else { fa + fb + (i - fa) };
    let map_b = |i: usize| {
        if i < fb {
            fa + i
        } else {
            fa + fb + a.torsion.len() + (i - fb)
        }
    };
    let n = na + nb;
    let mut order: Vec<(usize, bool)> = vec![(0, false); n];
    for i in 0..na {
        order[map_a(i)] = (i, true);
    }
    for i in 0..nb {
        order[map_b(i)] = (i, false);
    }

    let mut d = PresentationDraft::new(format!("{}x{}", a.name, b.name));
    d.nilpotent = a.nilpotent && b.nilpotent;
    d.polycyclic = (a.polycyclic || a.nilpotent) && (b.polycyclic || b.nilpotent);
    let mut used: Vec<String> = Vec::new();
    for &(i, from_a) in &order {
        let g = if from_a { &a.generators[i] } else { &b.generators[i] };
        let mut name = g.name.clone();
        while used.contains(&name) {
            name.push('2');
        }
        used.push(name.clone());
        d.add_generator(name, g.order);
    }
    let remap = |w: &Word, from_a: bool| {
        Word(
            w.0.iter()
                .map(|(g, e)| (if from_a { map_a(*g) } else { map_b(*g) }, e.clone()))
                .collect(),
        )
    };
    for (src, from_a) in [(&a, true), (&b, false)] {
        let m = |i: usize| if from_a { map_a(i) } else { map_b(i) };
        let count = src.generators.len();
        for i in 0..count {
            if let Some(w) = &src.power[i] {
                d.power[m(i)] = Some(remap(w, from_a));
            }
        }
        for (&(x, by), c) in &src.relations {
            d.set_conjugates(m(x), m(by), remap(&c.by_gen, from_a), remap(&c.by_inverse, from_a));
        }
        d.genset.extend(src.genset.iter().map(|w| remap(w, from_a)));
    }
    d.torsion = fa + fb..n;
    d.filtration = match (&a.filtration, &b.filtration, fa, fb) {
        (Some(x), Some(y), _, _) => {
            let len = x.len().max(y.len());
            Some(
                (0..len)
                    .map(|k| {
                        let mut block: Vec<usize> = Vec::new();
                        if let Some(bx) = x.get(k) {
                            block.extend(bx.iter().map(|&g| map_a(g)));
                        }
                        if let Some(by) = y.get(k) {
                            block.extend(by.iter().map(|&g| map_b(g)));
                        }
                        block.sort_unstable();
                        block
                    })
                    .collect(),
            )
        }
        (Some(x), None, _, 0) => Some(x.iter().map(|bl| bl.iter().map(|&g| map_a(g)).collect()).collect()),
        (None, Some(y), 0, _) => Some(y.iter().map(|bl| bl.iter().map(|&g| map_b(g)).collect()).collect()),
        _ => None,
    };
    d.derived_isolator = match (&a.derived_isolator, &b.derived_isolator) {
        (Some(x), Some(y)) => {
            let mut mask = vec![false; n];
            for (i, &v) in x.iter().enumerate() {
                mask[map_a(i)] = v;
            }
            for (i, &v) in y.iter().enumerate() {
                mask[map_b(i)] = v;
            }
            Some(mask)
        }
        _ => None,
    };
    Ok(d)
}
