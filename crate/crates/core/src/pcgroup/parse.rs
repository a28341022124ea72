//! Line-oriented presentation text format.
//!
//! ```text
//! group heisenberg
//! nilpotent true
//! gen a order inf
//! gen b order inf
//! gen c order inf
//! conj b by a = b*c^-1
//! conjinv b by a = b*c
//! block a b
//! block c
//! genset a a^-1 b b^-1
//! ```
//!
//! `torsion_prefix <t>` / `torsion_suffix <t>` declare which generators span
//! the torsion subgroup, and `polycyclic true` certifies a non-nilpotent
//! presentation for rank computations. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{PcPresentation, PresentationDraft, RelativeOrder, Word};
use crate::error::{Error, Result};

struct Line<'a> {
    number: usize,
    text: &'a str,
}

impl Line<'_> {
    fn err(&self, token: &str, message: impl Into<String>) -> Error {
        // token is a subslice of text, so pointer arithmetic gives the column
        let column = (token.as_ptr() as usize)
            .checked_sub(self.text.as_ptr() as usize)
            .filter(|&c| c <= self.text.len())
            .map_or(1, |c| c + 1);
        Error::Syntax {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn end_err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.number,
            column: self.text.len() + 1,
            message: message.into(),
        }
    }
}

pub fn parse_presentation(text: &str) -> Result<PcPresentation> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| Line {
            number: i + 1,
            text: raw.split('#').next().unwrap_or(""),
        })
        .filter(|l| !l.text.trim().is_empty())
        .collect();

    let mut draft = PresentationDraft::new("unnamed");
    let mut names: Vec<String> = Vec::new();

    // generators first, so relations may reference any of them
    for line in &lines {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        if toks[0] != "gen" {
            continue;
        }
        if toks.len() != 4 || toks[2] != "order" {
            return Err(line.err(toks[0], "expected `gen <sym> order <m|inf>`"));
        }
        let sym = toks[1];
        if !is_symbol(sym) {
            return Err(line.err(sym, format!("`{sym}` is not a valid generator symbol")));
        }
        if names.iter().any(|n| n == sym) {
            return Err(line.err(sym, format!("generator `{sym}` declared twice")));
        }
        let order = match toks[3] {
            "inf" => RelativeOrder::Infinite,
            m => match m.parse::<u64>() {
                Ok(m) if m >= 2 => RelativeOrder::Finite(m),
                _ => return Err(line.err(toks[3], format!("bad relative order `{m}`"))),
            },
        };
        names.push(sym.to_string());
        draft.add_generator(sym, order);
    }

    let mut torsion: Option<(bool, usize)> = None;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut seen_conj = std::collections::HashSet::new();
    let mut half_relations: BTreeMap<(usize, usize), (Option<Word>, Option<Word>)> = BTreeMap::new();
    for line in &lines {
        let toks: Vec<&str> = line.text.split_whitespace().collect();
        match toks[0] {
            "gen" => {}
            "group" => {
                if toks.len() != 2 {
                    return Err(line.err(toks[0], "expected `group <name>`"));
                }
                draft.name = toks[1].to_string();
            }
            "nilpotent" | "polycyclic" => {
                let flag = match toks.get(1).copied() {
                    Some("true") if toks.len() == 2 => true,
                    Some("false") if toks.len() == 2 => false,
                    _ => return Err(line.err(toks[0], "expected `true` or `false`")),
                };
                if toks[0] == "nilpotent" {
                    draft.nilpotent = flag;
                } else {
                    draft.polycyclic = flag;
                }
            }
            "torsion_prefix" | "torsion_suffix" => {
                let t = toks
                    .get(1)
                    .filter(|_| toks.len() == 2)
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| line.err(toks[0], "expected a generator count"))?;
                if torsion.is_some() {
                    return Err(line.err(toks[0], "torsion declared twice"));
                }
                torsion = Some((toks[0] == "torsion_prefix", t));
            }
            "pow" => {
                let (sym, rhs) = split_relation(line, &toks, 1)?;
                let g = lookup(line, &names, sym)?;
                if draft.power[g].is_some() {
                    return Err(line.err(sym, format!("power relation for `{sym}` given twice")));
                }
                draft.power[g] = Some(parse_word(line, &names, rhs)?);
            }
            "conj" | "conjinv" => {
                if toks.len() < 6 || toks[2] != "by" || toks[4] != "=" {
                    return Err(line.err(toks[0], format!("expected `{} <sym> by <sym> = <word>`", toks[0])));
                }
                let x = lookup(line, &names, toks[1])?;
                let by = lookup(line, &names, toks[3])?;
                if x == by {
                    return Err(line.err(toks[3], "a generator cannot be conjugated by itself"));
                }
                if !seen_conj.insert((toks[0] == "conj", x, by)) {
                    return Err(line.err(toks[0], "relation given twice"));
                }
                let word = parse_word(line, &names, &toks[5..].join(" "))?;
                let slot = half_relations.entry((x, by)).or_insert((None, None));
                if toks[0] == "conj" {
                    slot.0 = Some(word);
                } else {
                    slot.1 = Some(word);
                }
            }
            "block" => {
                if toks.len() < 2 {
                    return Err(line.end_err("empty block"));
                }
                let block = toks[1..]
                    .iter()
                    .map(|s| lookup(line, &names, s))
                    .collect::<Result<Vec<_>>>()?;
                blocks.push(block);
            }
            "genset" => {
                for tok in &toks[1..] {
                    draft.genset.push(parse_word(line, &names, tok)?);
                }
            }
            other => return Err(line.err(other, format!("unknown directive `{other}`"))),
        }
    }

    for ((x, by), pair) in half_relations {
        match pair {
            (Some(c), Some(ci)) => draft.set_conjugates(x, by, c, ci),
            _ => {
                return Err(Error::Inconsistent(format!(
                    "both conj and conjinv must be given for {} by {}",
                    names[x], names[by]
                )))
            }
        }
    }
    let n = names.len();
    draft.torsion = match torsion {
        None => 0..0,
        Some((_, t)) if t > n => {
            return Err(Error::Inconsistent(format!(
                "torsion block of {t} generators exceeds the {n} declared"
            )))
        }
        Some((true, t)) => 0..t,
        Some((false, t)) => n - t..n,
    };
    if !blocks.is_empty() {
        draft.filtration = Some(blocks);
    }
    draft.validate()
}

fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn lookup(line: &Line, names: &[String], sym: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == sym)
        .ok_or_else(|| line.err(sym, format!("unknown generator `{sym}`")))
}

fn split_relation<'a>(line: &Line, toks: &[&'a str], sym_pos: usize) -> Result<(&'a str, &'a str)> {
    if toks.len() < sym_pos + 3 || toks[sym_pos + 1] != "=" {
        return Err(line.err(toks[0], format!("expected `{} <sym> = <word>`", toks[0])));
    }
    // the word is the last token; words contain no whitespace
    if toks.len() != sym_pos + 3 {
        return Err(line.err(toks[sym_pos + 3], "unexpected trailing token"));
    }
    Ok((toks[sym_pos], toks[sym_pos + 2]))
}

/// Parse `sym^k*sym*...` or `1`.
fn parse_word(line: &Line, names: &[String], text: &str) -> Result<Word> {
    let text = text.trim();
    if text == "1" {
        return Ok(Word::identity());
    }
    if text.is_empty() {
        return Err(line.end_err("empty word"));
    }
    let mut syllables = Vec::new();
    for factor in text.split('*') {
        let factor = factor.trim();
        if factor.is_empty() {
            return Err(line.err(text, "empty factor in word"));
        }
        let (sym, exp) = match factor.split_once('^') {
            None => (factor, BigInt::one()),
            Some((sym, exp)) => {
                let exp = exp.trim_start_matches('+');
                let e = exp
                    .parse::<BigInt>()
                    .map_err(|_| line.err(factor, format!("bad exponent in `{factor}`")))?;
                (sym, e)
            }
        };
        let g = lookup(line, names, sym)?;
        if !exp.is_zero() {
            syllables.push((g, exp));
        }
    }
    Ok(Word(syllables))
}

fn render_word(p: &PcPresentation, w: &Word) -> String {
    if w.0.is_empty() {
        return "1".into();
    }
    w.0.iter()
        .map(|(g, e)| {
            let name = &p.generators[*g].name;
            if e.is_one() {
                name.clone()
            } else {
                format!("{name}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

pub(super) fn render(p: &PcPresentation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "group {}", p.name);
    let _ = writeln!(out, "nilpotent {}", p.nilpotent);
    if p.polycyclic {
        let _ = writeln!(out, "polycyclic true");
    }
    if !p.torsion.is_empty() {
        if p.torsion.start == 0 {
            let _ = writeln!(out, "torsion_prefix {}", p.torsion.len());
        } else {
            let _ = writeln!(out, "torsion_suffix {}", p.torsion.len());
        }
    }
    for g in &p.generators {
        match g.order {
            RelativeOrder::Finite(m) => {
                let _ = writeln!(out, "gen {} order {m}", g.name);
            }
            RelativeOrder::Infinite => {
                let _ = writeln!(out, "gen {} order inf", g.name);
            }
        }
    }
    for (i, w) in p.power.iter().enumerate() {
        if let Some(w) = w {
            if !w.is_identity() {
                let _ = writeln!(out, "pow {} = {}", p.generators[i].name, render_word(p, w));
            }
        }
    }
    for (x, by, c) in p.relations() {
        let (gx, gb) = (&p.generators[x].name, &p.generators[by].name);
        let _ = writeln!(out, "conj {gx} by {gb} = {}", render_word(p, &c.by_gen));
        let _ = writeln!(out, "conjinv {gx} by {gb} = {}", render_word(p, &c.by_inverse));
    }
    if let Some(blocks) = &p.filtration {
        for b in blocks {
            let names: Vec<&str> = b.iter().map(|&g| p.generators[g].name.as_str()).collect();
            let _ = writeln!(out, "block {}", names.join(" "));
        }
    }
    if !p.genset.is_empty() {
        let words: Vec<String> = p.genset.iter().map(|w| render_word(p, w)).collect();
        let _ = writeln!(out, "genset {}", words.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcgroup::{builtin, Family, GroupElement};

    const HEIS: &str = "\
group heisenberg
nilpotent true
gen a order inf
gen b order inf
gen c order inf
conj b by a = b*c^-1
conjinv b by a = b*c
block a b
block c
genset a a^-1 b b^-1
";

    #[test]
    fn parses_heisenberg() {
        let p = parse_presentation(HEIS).unwrap();
        assert_eq!(p.rank(), 3);
        assert_eq!(p.filtration().unwrap(), &[vec![0, 1], vec![2]]);
        let a = p.generator(0);
        let b = p.generator(1);
        assert_eq!(p.commutator(&a, &b).unwrap(), GroupElement::from_i64s(&[0, 0, 1]));
        assert_eq!(p.declared_genset().unwrap().len(), 4);
    }

    #[test]
    fn parses_free_abelian_without_relations() {
        let p = parse_presentation("group Z2\nnilpotent true\ngen x order inf\ngen y order inf\n").unwrap();
        assert_eq!(p.rank(), 2);
        assert!(p.conjugation_words(1, 0).is_none());
        assert!(p.filtration().is_none());
    }

    #[test]
    fn parses_klein_bottle() {
        let src = "group klein\nnilpotent false\npolycyclic true\ngen a order inf\ngen b order inf\n\
                   conj a by b = a^-1\nconjinv a by b = a^-1\n";
        let p = parse_presentation(src).unwrap();
        assert!(!p.is_nilpotent());
        assert!(p.filtration().is_none());
        let (a, b) = (p.generator(0), p.generator(1));
        assert_eq!(p.multiply(&b, &a).unwrap(), GroupElement::from_i64s(&[-1, 1]));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_presentation("group g\ngen a order inf\nconj a by q = a\n").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_presentation("group g\nfrobnicate\n"),
            Err(Error::Syntax { line: 2, column: 1, .. })
        ));
        assert!(matches!(
            parse_presentation("gen a order 0\n"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn torsion_prefix_with_infinite_generator_is_rejected() {
        let src = "group bad\nnilpotent true\ntorsion_prefix 1\ngen x order inf\ngen t order 2\n";
        assert!(matches!(parse_presentation(src), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn one_sided_conjugation_is_rejected() {
        let src = "group bad\nnilpotent true\ngen a order inf\ngen b order inf\ngen c order inf\n\
                   conj b by a = b*c^-1\n";
        assert!(matches!(parse_presentation(src), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn inconsistent_conjugation_pair_is_rejected() {
        let src = "group bad\nnilpotent true\ngen a order inf\ngen b order inf\ngen c order inf\n\
                   conj b by a = b*c^-1\nconjinv b by a = b*c^-1\n";
        assert!(matches!(parse_presentation(src), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn render_roundtrips_builtins() {
        for fam in [
            Family::Zn(3),
            Family::Heisenberg,
            Family::KleinBottle,
            Family::ZnCrossCyclic { n: 1, m: 2 },
        ] {
            let p = builtin(fam).unwrap().presentation;
            let again = parse_presentation(&p.to_source()).unwrap();
            assert_eq!(again.to_source(), p.to_source());
        }
    }
}
