//! Exact arithmetic in groups given by power-commutator presentations.
//!
//! Elements are stored as exponent vectors over the presentation basis, in
//! the normal form `g_1^{e_1} ... g_n^{e_n}` with `0 <= e_i < m_i` whenever
//! `g_i` has finite relative order `m_i`. Products are normalised by
//! collection from the left with an explicit fuel bound, so a presentation
//! that does not confluently rewrite surfaces as [`Error::FuelExhausted`]
//! instead of hanging.
//!
//! Commutators follow `[x, y] = x^-1 y^-1 x y`.

mod builtin;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use builtin::{builtin, BuiltinGroup, Family};
pub use parse::parse_presentation;

/// Default number of rewrite steps a single collection may take.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// An element in normal form, stored as its exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(Vec<BigInt>);

impl GroupElement {
    pub fn identity(rank: usize) -> Self {
        GroupElement(vec![BigInt::zero(); rank])
    }

    pub fn from_exponents(exponents: Vec<BigInt>) -> Self {
        GroupElement(exponents)
    }

    pub fn from_i64s(exponents: &[i64]) -> Self {
        GroupElement(exponents.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn exponents(&self) -> &[BigInt] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Exponents as machine integers, if they all fit.
    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }

    fn syllables(&self) -> impl DoubleEndedIterator<Item = (usize, BigInt)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, e)| (i, e.clone()))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(GroupElement(Vec::new()));
        }
        s.split(',')
            .enumerate()
            .map(|(i, part)| {
                part.trim().parse::<BigInt>().map_err(|_| Error::Syntax {
                    line: 1,
                    column: i + 1,
                    message: format!("`{}` is not an integer exponent", part.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(GroupElement)
    }
}

/// Relative order of a basis generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelativeOrder {
    Finite(u64),
    Infinite,
}

impl RelativeOrder {
    pub fn is_finite(self) -> bool {
        matches!(self, RelativeOrder::Finite(_))
    }
}

/// A word as a sequence of `(generator index, exponent)` syllables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<(usize, BigInt)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(index: usize) -> Self {
        Word(vec![(index, BigInt::one())])
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|(g, e)| (*g, -e)).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|(_, e)| e.is_zero())
    }

    fn mentions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().filter(|(_, e)| !e.is_zero()).map(|(g, _)| *g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub order: RelativeOrder,
}

/// Conjugates of one generator by another: `(g^-1 x g, g x g^-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conjugates {
    pub by_gen: Word,
    pub by_inverse: Word,
}

/// How collection swaps an out-of-order pair `g_k^f g_i` with `i < k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PairRule {
    Commute,
    /// A relation conjugates `g_k` by `g_i`: move `g_i` left, one letter at a time.
    Forward { abelian: [bool; 2] },
    /// A relation conjugates `g_i` by `g_k`: move `g_k^f` right in one go.
    Backward,
}

/// Finite description of a group by a power-commutator presentation.
///
/// `relations[(x, g)]` holds the conjugates of generator `x` by generator
/// `g`. When `g` precedes `x` in the basis the relation is *forward*
/// (nilpotent presentations use only these); when `g` comes after `x` it is
/// *backward*, which is how a normal subgroup listed first is described,
/// e.g. `b^-1 a b = a^-1` in the Klein-bottle group. Absent pairs commute.
#[derive(Clone, Debug)]
pub struct PcPresentation {
    name: String,
    generators: Vec<Generator>,
    power: Vec<Option<Word>>,
    relations: BTreeMap<(usize, usize), Conjugates>,
    torsion: Range<usize>,
    filtration: Option<Vec<Vec<usize>>>,
    nilpotent: bool,
    polycyclic: bool,
    genset: Vec<Word>,
    derived_isolator: Option<Vec<bool>>,
    fuel: u64,
    rules: Vec<Vec<PairRule>>,
}

/// Builder-side description of a presentation before validation.
#[derive(Clone, Debug, Default)]
pub struct PresentationDraft {
    pub name: String,
    pub generators: Vec<Generator>,
    pub power: Vec<Option<Word>>,
    pub relations: BTreeMap<(usize, usize), Conjugates>,
    pub torsion: Range<usize>,
    pub filtration: Option<Vec<Vec<usize>>>,
    pub nilpotent: bool,
    pub polycyclic: bool,
    pub genset: Vec<Word>,
    pub derived_isolator: Option<Vec<bool>>,
}

impl PresentationDraft {
    pub fn new(name: impl Into<String>) -> Self {
        PresentationDraft {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_generator(&mut self, name: impl Into<String>, order: RelativeOrder) -> usize {
        let idx = self.generators.len();
        self.generators.push(Generator {
            name: name.into(),
            order,
        });
        self.power.push(None);
        idx
    }

    /// Record `by^-1 x by = conj` and `by x by^-1 = conj_inv`.
    pub fn set_conjugates(&mut self, x: usize, by: usize, conj: Word, conj_inv: Word) {
        self.relations.insert(
            (x, by),
            Conjugates {
                by_gen: conj,
                by_inverse: conj_inv,
            },
        );
    }

    pub fn validate(self) -> Result<PcPresentation> {
        PcPresentation::from_draft(self)
    }
}

impl PcPresentation {
    fn from_draft(d: PresentationDraft) -> Result<Self> {
        let n = d.generators.len();
        if d.torsion.end > n || d.torsion.start > d.torsion.end {
            return Err(Error::Inconsistent(format!(
                "torsion block {:?} does not fit {n} generators",
                d.torsion
            )));
        }
        if d.torsion.start != 0 && d.torsion.end != n {
            return Err(Error::Inconsistent(
                "torsion generators must form a prefix or a suffix of the basis".into(),
            ));
        }
        for (i, g) in d.generators.iter().enumerate() {
            let in_torsion = d.torsion.contains(&i);
            match (g.order, in_torsion) {
                (RelativeOrder::Finite(m), _) if m < 2 => {
                    return Err(Error::Inconsistent(format!(
                        "generator {} has relative order {m}; finite orders must be at least 2",
                        g.name
                    )))
                }
                (RelativeOrder::Infinite, true) => {
                    return Err(Error::Inconsistent(format!(
                        "torsion block contains infinite-order generator {}",
                        g.name
                    )))
                }
                (RelativeOrder::Finite(_), false) => {
                    return Err(Error::Inconsistent(format!(
                        "finite-order generator {} lies outside the declared torsion block",
                        g.name
                    )))
                }
                _ => {}
            }
        }
        for (i, p) in d.power.iter().enumerate() {
            if p.is_some() && !d.generators[i].order.is_finite() {
                return Err(Error::Inconsistent(format!(
                    "power relation given for infinite-order generator {}",
                    d.generators[i].name
                )));
            }
        }
        if let Some(blocks) = &d.filtration {
            let mut seen = vec![false; n];
            for &g in blocks.iter().flatten() {
                if g >= n || seen[g] {
                    return Err(Error::Inconsistent(
                        "filtration blocks must partition distinct generators".into(),
                    ));
                }
                if d.generators[g].order.is_finite() {
                    return Err(Error::Inconsistent(format!(
                        "filtration mentions finite-order generator {}",
                        d.generators[g].name
                    )));
                }
                seen[g] = true;
            }
        }
        if let Some(mask) = &d.derived_isolator {
            if mask.len() != n {
                return Err(Error::Inconsistent("isolator mask has wrong length".into()));
            }
        }

        let mut p = PcPresentation {
            name: d.name,
            power: d
                .power
                .into_iter()
                .enumerate()
                .map(|(i, w)| match d.generators[i].order {
                    RelativeOrder::Finite(_) => Some(w.unwrap_or_default()),
                    RelativeOrder::Infinite => None,
                })
                .collect(),
            generators: d.generators,
            relations: d.relations,
            torsion: d.torsion,
            filtration: d.filtration,
            nilpotent: d.nilpotent,
            polycyclic: d.polycyclic,
            genset: Vec::new(),
            derived_isolator: d.derived_isolator,
            fuel: DEFAULT_FUEL,
            rules: Vec::new(),
        };
        p.check_relation_shapes()?;
        p.precompute();
        p.genset = d.genset;
        p.check_consistency()?;
        Ok(p)
    }

    fn check_relation_shapes(&self) -> Result<()> {
        let n = self.rank();
        let in_normal_form = |w: &Word| -> bool {
            let mut last: Option<usize> = None;
            for (g, e) in &w.0 {
                if *g >= n || e.is_zero() {
                    return false;
                }
                if last.is_some_and(|l| l >= *g) {
                    return false;
                }
                if let RelativeOrder::Finite(m) = self.generators[*g].order {
                    if e.is_negative() || *e >= BigInt::from(m) {
                        return false;
                    }
                }
                last = Some(*g);
            }
            true
        };
        for (i, w) in self.power.iter().enumerate() {
            if let Some(w) = w {
                if !in_normal_form(w) {
                    return Err(Error::Inconsistent(format!(
                        "power relation of {} is not in normal form",
                        self.generators[i].name
                    )));
                }
                if w.mentions().any(|g| g <= i) {
                    return Err(Error::Inconsistent(format!(
                        "power relation of {} must only mention later generators",
                        self.generators[i].name
                    )));
                }
            }
        }
        for (&(x, by), c) in &self.relations {
            if x >= n || by >= n || x == by {
                return Err(Error::Inconsistent(format!(
                    "conjugation relation ({x}, {by}) does not name two distinct generators"
                )));
            }
            let (xn, gn) = (&self.generators[x].name, &self.generators[by].name);
            if by > x && self.relations.contains_key(&(by, x)) {
                return Err(Error::Inconsistent(format!(
                    "both {xn} by {gn} and {gn} by {xn} are given; keep one direction"
                )));
            }
            for (kind, w) in [("conj", &c.by_gen), ("conjinv", &c.by_inverse)] {
                if !in_normal_form(w) {
                    return Err(Error::Inconsistent(format!(
                        "{kind} {xn} by {gn} is not in normal form"
                    )));
                }
                if by < x && self.nilpotent && w.mentions().any(|g| g < x) {
                    return Err(Error::Inconsistent(format!(
                        "{kind} {xn} by {gn} mentions a generator before {xn} in a nilpotent presentation"
                    )));
                }
                if by > x && w.mentions().any(|g| g >= by) {
                    return Err(Error::Inconsistent(format!(
                        "{kind} {xn} by {gn} must only mention generators before {gn}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn precompute(&mut self) {
        let n = self.rank();
        let trivial = |w: &Word, x: usize| w.0.len() == 1 && w.0[0].0 == x && w.0[0].1.is_one();
        let mut commutes = vec![vec![true; n]; n];
        for (&(x, by), c) in &self.relations {
            if !(trivial(&c.by_gen, x) && trivial(&c.by_inverse, x)) {
                commutes[x][by] = false;
                commutes[by][x] = false;
            }
        }
        let word_abelian = |w: &Word| {
            let gens: Vec<usize> = w.mentions().collect();
            gens.iter()
                .all(|&a| gens.iter().all(|&b| a == b || commutes[a][b]))
        };
        let mut rules = vec![vec![PairRule::Commute; n]; n];
        for i in 0..n {
            for k in i + 1..n {
                if commutes[i][k] {
                    continue;
                }
                rules[i][k] = match self.relations.get(&(k, i)) {
                    Some(c) => PairRule::Forward {
                        abelian: [word_abelian(&c.by_gen), word_abelian(&c.by_inverse)],
                    },
                    None => PairRule::Backward,
                };
            }
        }
        self.rules = rules;
    }

    /// Sampled validation: conjugation relations are mutually inverse, power
    /// words commute with their generator, and multiplication is associative
    /// on a fixed pseudo-random sample.
    fn check_consistency(&self) -> Result<()> {
        for (&(x, by), c) in &self.relations {
            // g (g^-1 x g) g^-1 and g^-1 (g x g^-1) g must both give back x
            let xe = self.generator(x);
            let g = self.generator(by);
            let conj = self.collect_word(&c.by_gen)?;
            let conj_inv = self.collect_word(&c.by_inverse)?;
            let g_inv = self.inverse(&g)?;
            if self.conjugate(&conj, &g_inv)? != xe || self.conjugate(&conj_inv, &g)? != xe {
                return Err(Error::Inconsistent(format!(
                    "conj and conjinv of {} by {} are not mutually inverse",
                    self.generators[x].name, self.generators[by].name
                )));
            }
        }
        for (i, w) in self.power.iter().enumerate() {
            let Some(w) = w else { continue };
            let pw = self.collect_word(w)?;
            let gi = self.generator(i);
            if self.conjugate(&pw, &gi)? != pw {
                return Err(Error::Inconsistent(format!(
                    "power relation of {} does not commute with {}",
                    self.generators[i].name, self.generators[i].name
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_fc01_1ec7);
        for _ in 0..40 {
            let x = self.random_element(&mut rng, 3);
            let y = self.random_element(&mut rng, 3);
            let z = self.random_element(&mut rng, 3);
            let left = self.multiply(&self.multiply(&x, &y)?, &z)?;
            let right = self.multiply(&x, &self.multiply(&y, &z)?)?;
            if left != right {
                return Err(Error::Inconsistent(format!(
                    "associativity fails on sample ({x}) ({y}) ({z})"
                )));
            }
            if !self.multiply(&x, &self.inverse(&x)?)?.is_identity() {
                return Err(Error::Inconsistent(format!("x * x^-1 != e for x = {x}")));
            }
        }
        let genset: Vec<GroupElement> = self
            .genset
            .iter()
            .map(|w| self.collect_word(w))
            .collect::<Result<_>>()?;
        drop(genset);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn torsion_block(&self) -> Range<usize> {
        self.torsion.clone()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    pub fn filtration(&self) -> Option<&[Vec<usize>]> {
        self.filtration.as_deref()
    }

    pub fn is_nilpotent(&self) -> bool {
        self.nilpotent
    }

    pub fn is_polycyclic_certified(&self) -> bool {
        self.polycyclic
    }

    /// Coordinates that may be nonzero for elements of the isolator of the
    /// commutator subgroup, when the family knows it exactly.
    pub fn derived_isolator_mask(&self) -> Option<&[bool]> {
        self.derived_isolator.as_deref()
    }

    pub fn power_word(&self, i: usize) -> Option<&Word> {
        self.power[i].as_ref()
    }

    /// Declared conjugates of generator `x` by generator `by`, if any.
    pub fn conjugation_words(&self, x: usize, by: usize) -> Option<&Conjugates> {
        self.relations.get(&(x, by))
    }

    pub fn relations(&self) -> impl Iterator<Item = (usize, usize, &Conjugates)> {
        self.relations.iter().map(|(&(x, by), c)| (x, by, c))
    }

    pub fn genset_words(&self) -> &[Word] {
        &self.genset
    }

    /// Attached generating set, evaluated to normal forms.
    pub fn declared_genset(&self) -> Result<Vec<GroupElement>> {
        self.genset.iter().map(|w| self.collect_word(w)).collect()
    }

    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    pub fn fuel(&self) -> u64 {
        self.fuel
    }

    pub fn with_genset(mut self, genset: Vec<Word>) -> Result<Self> {
        for w in &genset {
            self.collect_word(w)?;
        }
        self.genset = genset;
        Ok(self)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.rank())
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut e = vec![BigInt::zero(); self.rank()];
        e[i] = BigInt::one();
        GroupElement(e)
    }

    /// Whether `x` is a well-formed normal form for this presentation.
    pub fn is_normal_form(&self, x: &GroupElement) -> bool {
        x.len() == self.rank()
            && x.0.iter().zip(&self.generators).all(|(e, g)| match g.order {
                RelativeOrder::Finite(m) => !e.is_negative() && *e < BigInt::from(m),
                RelativeOrder::Infinite => true,
            })
    }

    fn check_element(&self, x: &GroupElement) -> Result<()> {
        if self.is_normal_form(x) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "`{x}` is not a normal form for {}",
                self.name
            )))
        }
    }

    /// Collect an arbitrary word into normal form.
    pub fn collect_word(&self, w: &Word) -> Result<GroupElement> {
        let mut nf = vec![BigInt::zero(); self.rank()];
        for (g, _) in &w.0 {
            if *g >= self.rank() {
                return Err(Error::InvalidParams(format!("generator index {g} out of range")));
            }
        }
        self.collect(&mut nf, w.0.to_vec())?;
        Ok(GroupElement(nf))
    }

    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        debug_assert!(self.is_normal_form(x) && self.is_normal_form(y));
        let mut nf = x.0.clone();
        self.collect(&mut nf, y.syllables().collect())?;
        Ok(GroupElement(nf))
    }

    pub fn inverse(&self, x: &GroupElement) -> Result<GroupElement> {
        let word: Vec<(usize, BigInt)> = x.syllables().rev().map(|(g, e)| (g, -e)).collect();
        let mut nf = vec![BigInt::zero(); self.rank()];
        self.collect(&mut nf, word)?;
        Ok(GroupElement(nf))
    }

    /// `x^k` by square-and-multiply.
    pub fn power(&self, x: &GroupElement, k: &BigInt) -> Result<GroupElement> {
        let base = if k.is_negative() {
            self.inverse(x)?
        } else {
            x.clone()
        };
        let mut exp = k.abs();
        let mut acc = self.identity();
        let mut sq = base;
        let two = BigInt::from(2);
        while !exp.is_zero() {
            if exp.is_odd() {
                acc = self.multiply(&acc, &sq)?;
            }
            exp /= &two;
            if !exp.is_zero() {
                sq = self.multiply(&sq, &sq)?;
            }
        }
        Ok(acc)
    }

    pub fn power_i64(&self, x: &GroupElement, k: i64) -> Result<GroupElement> {
        self.power(x, &BigInt::from(k))
    }

    /// `[x, y] = x^-1 y^-1 x y`.
    pub fn commutator(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let xy = self.multiply(x, y)?;
        let yx = self.multiply(y, x)?;
        let yx_inv = self.inverse(&yx)?;
        self.multiply(&yx_inv, &xy)
    }

    /// `g^-1 x g`.
    pub fn conjugate(&self, x: &GroupElement, g: &GroupElement) -> Result<GroupElement> {
        let g_inv = self.inverse(g)?;
        let xg = self.multiply(x, g)?;
        self.multiply(&g_inv, &xg)
    }

    /// True iff `x` commutes with every basis generator.
    pub fn is_central(&self, x: &GroupElement) -> Result<bool> {
        self.check_element(x)?;
        for i in 0..self.rank() {
            let g = self.generator(i);
            if self.multiply(x, &g)? != self.multiply(&g, x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Number of infinite-order basis generators.
    pub fn hirsch_rank(&self) -> Result<usize> {
        if !self.nilpotent && !self.polycyclic {
            return Err(Error::precondition(
                "hirsch-rank",
                format!(
                    "{} is neither declared nilpotent nor certified polycyclic",
                    self.name
                ),
            ));
        }
        Ok(self
            .generators
            .iter()
            .filter(|g| !g.order.is_finite())
            .count())
    }

    /// Uniform sample with infinite-order exponents in `[-bound, bound]`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, bound: i64) -> GroupElement {
        GroupElement(
            self.generators
                .iter()
                .map(|g| match g.order {
                    RelativeOrder::Finite(m) => BigInt::from(rng.gen_range(0..m)),
                    RelativeOrder::Infinite => BigInt::from(rng.gen_range(-bound..=bound)),
                })
                .collect(),
        )
    }

    /// Canonical text form; round-trips through [`parse_presentation`].
    pub fn to_source(&self) -> String {
        parse::render(self)
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_source().as_bytes());
        hex::encode(&digest[..12])
    }

    /// Render a normal form as a word like `a^2*b*c^-1`.
    pub fn format_word(&self, x: &GroupElement) -> String {
        let parts: Vec<String> = x
            .syllables()
            .map(|(g, e)| {
                let name = &self.generators[g].name;
                if e.is_one() {
                    name.clone()
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    fn reduce_power(&self, i: usize, e: &mut BigInt) -> Option<BigInt> {
        let RelativeOrder::Finite(m) = self.generators[i].order else {
            return None;
        };
        let m = BigInt::from(m);
        if !e.is_negative() && *e < m {
            return None;
        }
        let (q, r) = e.div_mod_floor(&m);
        *e = r;
        Some(q)
    }

    /// `g_k^f g_i g_k^-f` as a (not necessarily normal) word, for a backward pair.
    fn backward_image(&self, i: usize, k: usize, f: &BigInt, fuel: &mut Fuel) -> Result<Word> {
        let start = Word::generator(i);
        let mut w = start.clone();
        let steps = f
            .abs()
            .to_u64()
            .ok_or(Error::FuelExhausted { steps: fuel.total })?;
        let mut done = 0u64;
        while done < steps {
            let mut next: Vec<(usize, BigInt)> = Vec::new();
            for (l, e) in &w.0 {
                let image = match self.relations.get(&(*l, k)) {
                    None => {
                        next.push((*l, e.clone()));
                        continue;
                    }
                    Some(c) if f.is_positive() => &c.by_inverse,
                    Some(c) => &c.by_gen,
                };
                let mut tmp = Vec::new();
                push_power(&mut tmp, image, e, false, fuel)?;
                next.extend(tmp.into_iter().rev());
            }
            fuel.spend(next.len() as u64)?;
            w = merge_syllables(next);
            done += 1;
            if w == start {
                // the action has finite period `done`; skip whole periods
                let remaining = (steps - done) % done;
                done = steps - remaining;
            }
        }
        Ok(w)
    }

    fn is_central_generator(&self, g: usize) -> bool {
        (0..self.rank()).all(|j| j == g || self.rules[j.min(g)][j.max(g)] == PairRule::Commute)
    }

    /// For `w = g_k u` with every letter of `u` central, the syllables of `u`.
    fn central_tail<'w>(&self, w: &'w Word, k: usize) -> Option<&'w [(usize, BigInt)]> {
        let (first, rest) = w.0.split_first()?;
        if first.0 != k || !first.1.is_one() {
            return None;
        }
        rest.iter().all(|(g, _)| self.is_central_generator(*g)).then_some(rest)
    }

    /// Collection from the left: multiply the normal form `nf` by the word
    /// whose syllables are given in order.
    fn collect(&self, nf: &mut [BigInt], word: Vec<(usize, BigInt)>) -> Result<()> {
        let n = nf.len();
        let mut stack: Vec<(usize, BigInt)> = word;
        stack.reverse();
        let mut fuel = Fuel {
            left: self.fuel,
            total: self.fuel,
        };
        while let Some((i, e)) = stack.pop() {
            fuel.spend(1)?;
            if e.is_zero() {
                continue;
            }
            let blocked = (i + 1..n).any(|k| !nf[k].is_zero() && self.rules[i][k] != PairRule::Commute);
            if !blocked {
                nf[i] += &e;
                if let Some(q) = self.reduce_power(i, &mut nf[i]) {
                    // the power word has to land before the (commuting) tail
                    let tail = strip_tail(nf, i);
                    stack.extend(tail.into_iter().rev());
                    if let Some(w) = &self.power[i] {
                        push_power(&mut stack, w, &q, true, &mut fuel)?;
                    }
                }
                continue;
            }
            // peel the rightmost syllable g_k^f of the normal form and swap it with g_i^e
            let k = (i + 1..n).rev().find(|&k| !nf[k].is_zero()).expect("blocked implies a tail");
            let f = std::mem::take(&mut nf[k]);
            match self.rules[i][k] {
                PairRule::Commute => {
                    stack.push((k, f));
                    stack.push((i, e));
                }
                PairRule::Backward => {
                    // g_k^f g_i^e = (g_k^f g_i g_k^-f)^e g_k^f
                    stack.push((k, f.clone()));
                    let image = self.backward_image(i, k, &f, &mut fuel)?;
                    push_power(&mut stack, &image, &e, false, &mut fuel)?;
                }
                PairRule::Forward { abelian } => {
                    let positive = e.is_positive();
                    let c = &self.relations[&(k, i)];
                    let w = if positive { &c.by_gen } else { &c.by_inverse };
                    if let Some(u) = self.central_tail(w, k) {
                        // g_i^-e g_k g_i^e = g_k u^|e| with u central
                        let m = e.abs() * &f;
                        for (g, x) in u.iter().rev() {
                            stack.push((*g, x * &m));
                        }
                        stack.push((k, f));
                        stack.push((i, e));
                        continue;
                    }
                    // g_k^f g_i^s = g_i^s (g_i^-s g_k g_i^s)^f, one letter s = +-1 at a time
                    let step = if positive { BigInt::one() } else { -BigInt::one() };
                    let rest = &e - &step;
                    if !rest.is_zero() {
                        stack.push((i, rest));
                    }
                    let (w, ab) = if positive {
                        (&c.by_gen, abelian[0])
                    } else {
                        (&c.by_inverse, abelian[1])
                    };
                    push_power(&mut stack, w, &f, ab, &mut fuel)?;
                    stack.push((i, step));
                }
            }
        }
        Ok(())
    }
}

fn merge_syllables(word: Vec<(usize, BigInt)>) -> Word {
    let mut out: Vec<(usize, BigInt)> = Vec::with_capacity(word.len());
    for (g, e) in word {
        if e.is_zero() {
            continue;
        }
        match out.last_mut() {
            Some((h, acc)) if *h == g => {
                *acc += e;
                if acc.is_zero() {
                    out.pop();
                }
            }
            _ => out.push((g, e)),
        }
    }
    Word(out)
}

struct Fuel {
    left: u64,
    total: u64,
}

impl Fuel {
    fn spend(&mut self, n: u64) -> Result<()> {
        if self.left < n {
            return Err(Error::FuelExhausted { steps: self.total });
        }
        self.left -= n;
        Ok(())
    }
}

fn strip_tail(nf: &mut [BigInt], i: usize) -> Vec<(usize, BigInt)> {
    let mut tail = Vec::new();
    for (k, e) in nf.iter_mut().enumerate().skip(i + 1) {
        if !e.is_zero() {
            tail.push((k, std::mem::take(e)));
        }
    }
    tail
}

/// Push `w^f` onto the collection stack so that it is processed next.
fn push_power(
    stack: &mut Vec<(usize, BigInt)>,
    w: &Word,
    f: &BigInt,
    abelian: bool,
    fuel: &mut Fuel,
) -> Result<()> {
    if f.is_zero() || w.is_identity() {
        return Ok(());
    }
    if abelian || w.0.len() == 1 {
        fuel.spend(w.0.len() as u64)?;
        for (g, e) in w.0.iter().rev() {
            stack.push((*g, e * f));
        }
        return Ok(());
    }
    let reps = f
        .abs()
        .to_u64()
        .ok_or(Error::FuelExhausted { steps: fuel.total })?;
    fuel.spend(reps.saturating_mul(w.0.len() as u64))?;
    let base = if f.is_positive() { w.clone() } else { w.inverse() };
    for _ in 0..reps {
        for s in base.0.iter().rev() {
            stack.push(s.clone());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(v: &[i64]) -> GroupElement {
        GroupElement::from_i64s(v)
    }

    fn heis() -> PcPresentation {
        builtin(Family::Heisenberg).unwrap().presentation
    }

    fn klein() -> PcPresentation {
        builtin(Family::KleinBottle).unwrap().presentation
    }

    #[test]
    fn heisenberg_products() {
        let h = heis();
        let a = el(&[1, 0, 0]);
        let b = el(&[0, 1, 0]);
        assert_eq!(h.multiply(&a, &b).unwrap(), el(&[1, 1, 0]));
        assert_eq!(h.multiply(&b, &a).unwrap(), el(&[1, 1, -1]));
        assert_eq!(h.commutator(&a, &b).unwrap(), el(&[0, 0, 1]));
    }

    #[test]
    fn heisenberg_matches_closed_form() {
        let h = heis();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = h.random_element(&mut rng, 20);
            let y = h.random_element(&mut rng, 20);
            let xv = x.to_i64s().unwrap();
            let yv = y.to_i64s().unwrap();
            let expected = el(&[
                xv[0] + yv[0],
                xv[1] + yv[1],
                xv[2] + yv[2] - xv[1] * yv[0],
            ]);
            assert_eq!(h.multiply(&x, &y).unwrap(), expected);
        }
    }

    #[test]
    fn klein_rewrites() {
        let k = klein();
        let a = el(&[1, 0]);
        let b = el(&[0, 1]);
        assert_eq!(k.multiply(&b, &a).unwrap(), el(&[-1, 1]));
        assert_eq!(k.commutator(&a, &b).unwrap(), el(&[-2, 0]));
        let b2 = el(&[0, 2]);
        assert!(k.is_central(&b2).unwrap());
        assert!(!k.is_central(&a).unwrap());
    }

    #[test]
    fn centrality() {
        let h = heis();
        assert!(h.is_central(&el(&[0, 0, 1])).unwrap());
        assert!(!h.is_central(&el(&[1, 0, 0])).unwrap());
        let z2 = builtin(Family::Zn(2)).unwrap().presentation;
        assert!(z2.is_central(&el(&[3, -4])).unwrap());
    }

    #[test]
    fn hirsch_ranks() {
        assert_eq!(builtin(Family::Zn(2)).unwrap().presentation.hirsch_rank().unwrap(), 2);
        assert_eq!(heis().hirsch_rank().unwrap(), 3);
        let zz2 = builtin(Family::ZnCrossCyclic { n: 1, m: 2 }).unwrap().presentation;
        assert_eq!(zz2.hirsch_rank().unwrap(), 1);
    }

    #[test]
    fn hirsch_rank_refused_without_certification() {
        let src = "group kb\nnilpotent false\ngen a order inf\ngen b order inf\n\
                   conj a by b = a^-1\nconjinv a by b = a^-1\n";
        let p = parse_presentation(src).unwrap();
        assert!(matches!(p.hirsch_rank(), Err(Error::Precondition { .. })));
    }

    #[test]
    fn torsion_wraps_through_power_relation() {
        let zz2 = builtin(Family::ZnCrossCyclic { n: 1, m: 2 }).unwrap().presentation;
        let t = el(&[0, 1]);
        assert!(zz2.multiply(&t, &t).unwrap().is_identity());
        assert_eq!(zz2.inverse(&t).unwrap(), t);
        assert_eq!(zz2.power_i64(&t, -3).unwrap(), t);
    }

    #[test]
    fn nontrivial_power_word() {
        // Z_4 extension where t^2 = z with z central of order 2
        let src = "group q\nnilpotent true\ntorsion_suffix 2\n\
                   gen t order 2\ngen z order 2\npow t = z\n";
        let p = parse_presentation(src).unwrap();
        let t = p.generator(0);
        assert_eq!(p.multiply(&t, &t).unwrap(), el(&[0, 1]));
        assert!(p.power_i64(&t, 4).unwrap().is_identity());
        assert_eq!(p.inverse(&t).unwrap(), el(&[1, 1]));
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let p = heis().with_fuel(3);
        let x = el(&[10, 10, 0]);
        let y = el(&[10, 10, 0]);
        assert!(matches!(p.multiply(&x, &y), Err(Error::FuelExhausted { .. })));
        assert!(heis().with_fuel(50).multiply(&x, &y).is_ok());
    }

    #[test]
    fn big_exponents_stay_exact() {
        let h = heis();
        let big = BigInt::from(1u64 << 40);
        let c = h.generator(2);
        let p = h.power(&c, &big).unwrap();
        assert_eq!(p.exponents()[2], big);
        let a = h.generator(0);
        let b = h.generator(1);
        let ak = h.power(&a, &BigInt::from(3000)).unwrap();
        let bk = h.power(&b, &BigInt::from(3000)).unwrap();
        let comm = h.commutator(&ak, &bk).unwrap();
        assert_eq!(comm.exponents()[2], BigInt::from(9_000_000));
    }

    #[test]
    fn element_text_roundtrip() {
        let x: GroupElement = "1,0,-3".parse().unwrap();
        assert_eq!(x, el(&[1, 0, -3]));
        assert_eq!(x.to_string(), "1,0,-3");
        assert!("1,x".parse::<GroupElement>().is_err());
    }
}
