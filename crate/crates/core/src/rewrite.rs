//! Rewriting a word of exponent sum ±1 into the special form `a₁t⁻¹b₁t⋯a_m t⁻¹b_m t x t`
//! over the enlarged vertex group `A_{k-1}`.

use crate::amalgam::{
    amalgam_reduce, letters_to_word, path_normal_form, support, word_to_letters, AmalgamElement,
    CopyLetter,
};
use crate::group::{Elem, Hnn};
use crate::word::{
    britton_reduce, cyclic_reduce, exponent_sum, is_identity, CyclicReduction, HnnWord, Sign,
    Syllable,
};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("exponent sum {0} is not ±1")]
    ExponentSumNotUnit(i64),
    #[error("word is conjugate into the vertex group")]
    InVertexGroup,
    #[error("rewriting did not settle after {0} conjugation steps")]
    NoTermination(usize),
    #[error("rewritten word violates {0}")]
    InvariantViolated(String),
}

/// The special form at level `k`: letters live in `A_{k-1}` (copies `0..k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialWord {
    pub k: i64,
    pub a: Vec<AmalgamElement>,
    pub b: Vec<AmalgamElement>,
    pub x: AmalgamElement,
    /// `conjugator · render() · conjugator⁻¹` is the input word (its inverse when `inverted`).
    pub conjugator: HnnWord,
    pub inverted: bool,
    /// Number of leading-V conjugation steps taken after the rotation search.
    pub iterations: usize,
}

/// Result of rewriting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rewrite {
    Special(SpecialWord),
    /// The word is conjugate to `a t` (to `(a t)⁻¹` when `inverted`).
    AtForm {
        a: Elem,
        conjugator: HnnWord,
        inverted: bool,
    },
}

impl SpecialWord {
    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// The special word as an HNN word over the original vertex group.
    pub fn render(&self, hnn: &Hnn) -> HnnWord {
        let t = |e: i64| HnnWord::t_power(hnn, e);
        let mut w = HnnWord::identity(hnn);
        for (a, b) in self.a.iter().zip(&self.b) {
            w = w
                .concat(&a.to_word(hnn), hnn)
                .concat(&t(-1), hnn)
                .concat(&b.to_word(hnn), hnn)
                .concat(&t(1), hnn);
        }
        w = w.concat(&self.x.to_word(hnn), hnn).concat(&t(1), hnn);
        britton_reduce(&w, hnn).as_cyclic()
    }

    /// Letters `(a, b, x)` when the word lives over A itself.
    pub fn level_one_letters(&self) -> Option<(Vec<Elem>, Vec<Elem>, Elem)> {
        if self.k != 1 {
            return None;
        }
        let a = self.a.iter().map(|e| e.as_vertex_element()).collect::<Option<Vec<_>>>()?;
        let b = self.b.iter().map(|e| e.as_vertex_element()).collect::<Option<Vec<_>>>()?;
        Some((a, b, self.x.as_vertex_element()?))
    }

    /// Checks letter membership and the conjugacy to `target`.
    pub fn check(&self, target: &HnnWord, hnn: &Hnn) -> Result<(), RewriteError> {
        let k = self.k;
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(RewriteError::InvariantViolated("m ≥ 1".into()));
        }
        for (i, a) in self.a.iter().enumerate() {
            if a.in_range(1, k - 1, hnn) {
                return Err(RewriteError::InvariantViolated(format!(
                    "a_{} outside the P-image",
                    i + 1
                )));
            }
        }
        for (i, b) in self.b.iter().enumerate() {
            if b.in_range(0, k - 2, hnn) {
                return Err(RewriteError::InvariantViolated(format!(
                    "b_{} outside the N-image",
                    i + 1
                )));
            }
        }
        if !verify_conjugacy(target, &self.render(hnn), &self.conjugator, hnn) {
            return Err(RewriteError::InvariantViolated("conjugacy".into()));
        }
        Ok(())
    }

    pub fn to_json(&self, hnn: &Hnn) -> serde_json::Value {
        let r = |e: &AmalgamElement| e.render(hnn);
        json!({
            "m": self.m(),
            "k": self.k,
            "a": self.a.iter().map(r).collect::<Vec<_>>(),
            "b": self.b.iter().map(r).collect::<Vec<_>>(),
            "x": r(&self.x),
            "conjugator": self.conjugator.render(hnn),
            "inverted": self.inverted,
            "iterations": self.iterations,
        })
    }
}

/// True iff `h·w'·h⁻¹·w⁻¹` reduces to the identity.
pub fn verify_conjugacy(w: &HnnWord, w_prime: &HnnWord, h: &HnnWord, hnn: &Hnn) -> bool {
    let lhs = h
        .concat(&w_prime.clone().as_linear(), hnn)
        .concat(&h.inverse(hnn), hnn)
        .concat(&w.clone().as_linear().inverse(hnn), hnn);
    is_identity(&lhs, hnn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    U,
    V,
}

/// Splits a normal form with support `[0, k]` into alternating U/V blocks, where
/// U = copies `0..k`, V = copies `1..=k`.
fn blocks(letters: &[CopyLetter], k: i64, hnn: &Hnn) -> Vec<(Factor, Vec<CopyLetter>)> {
    let nf = path_normal_form(letters, 0, hnn);
    let mut out: Vec<(Factor, Vec<CopyLetter>)> = Vec::new();
    let mut leading: Vec<CopyLetter> = Vec::new();
    for (c, g) in nf {
        if hnn.a().is_identity(g) {
            continue;
        }
        let forced = if c == 0 {
            Some(Factor::U)
        } else if c == k {
            Some(Factor::V)
        } else {
            None
        };
        match (forced, out.last_mut()) {
            (None, None) => leading.push((c, g)),
            (None, Some(last)) => last.1.push((c, g)),
            (Some(f), Some(last)) if last.0 == f => last.1.push((c, g)),
            (Some(f), _) => {
                let mut v = std::mem::take(&mut leading);
                v.push((c, g));
                out.push((f, v));
            }
        }
    }
    // a block inside W merges into its neighbours
    let in_w = |l: &[CopyLetter]| {
        if k >= 2 {
            crate::amalgam::in_range(l, 1, k - 1, hnn)
        } else {
            crate::amalgam::in_range(l, 1, 0, hnn)
        }
    };
    while out.len() > 1 {
        let Some(i) = out.iter().position(|(_, l)| in_w(l)) else {
            break;
        };
        let (_, l) = out.remove(i);
        if i == 0 {
            let first = &mut out[0].1;
            let mut merged = l;
            merged.append(first);
            *first = merged;
        } else {
            out[i - 1].1.extend(l);
            if i < out.len() && out[i].0 == out[i - 1].0 {
                let (_, next) = out.remove(i);
                out[i - 1].1.extend(next);
            }
        }
    }
    out
}

/// Conjugate candidate: `target = conj · (g t) · conj⁻¹` with `g` given by copy letters.
struct Candidate {
    conj: HnnWord,
    g: Vec<CopyLetter>,
}

impl Candidate {
    /// Shifts copies so the support starts at 0; returns the width, or `None` if `g = id`.
    fn normalize(&mut self, hnn: &Hnn) -> Option<i64> {
        let s = support(&self.g, hnn)?;
        if s.lo != 0 {
            // t^{lo} (g t) t^{-lo} has copies moved down by lo
            self.conj = britton_reduce(&self.conj.concat(&HnnWord::t_power(hnn, -s.lo), hnn), hnn);
            for e in &mut self.g {
                e.0 -= s.lo;
            }
        }
        Some(s.width())
    }
}

fn at_form(c: Candidate, hnn: &Hnn, inverted: bool) -> Rewrite {
    let nf = path_normal_form(&c.g, 0, hnn);
    debug_assert_eq!(nf.len(), 1);
    Rewrite::AtForm {
        a: nf[0].1,
        conjugator: c.conj,
        inverted,
    }
}

/// Rewrites `w` (exponent sum ±1) into special form, or detects the `a t` case.
pub fn klyachko_rewrite(w: &HnnWord, hnn: &Hnn) -> Result<Rewrite, RewriteError> {
    let p = exponent_sum(w);
    if p.abs() != 1 {
        return Err(RewriteError::ExponentSumNotUnit(p));
    }
    let inverted = p == -1;
    let target = if inverted {
        w.clone().as_linear().inverse(hnn)
    } else {
        w.clone().as_linear()
    };
    let (w0, c0) = match cyclic_reduce(&target, hnn) {
        CyclicReduction::Reduced { word, conjugator } => (word.as_linear(), conjugator),
        CyclicReduction::InVertexGroup { .. } => return Err(RewriteError::InVertexGroup),
    };
    let t_inv = HnnWord::t_power(hnn, -1);

    // rotation search: minimize (support width, block count, rotation)
    let mut best: Option<((i64, usize, usize), Candidate)> = None;
    for r in 0..w0.len() {
        let rotated = w0.rotate(r);
        let prefix = HnnWord::from_syllables(w0.syllables[..r].to_vec(), hnn.a().identity());
        let mut cand = Candidate {
            conj: britton_reduce(&c0.concat(&prefix, hnn), hnn),
            g: word_to_letters(&britton_reduce(&rotated.concat(&t_inv, hnn), hnn), hnn),
        };
        let key = match cand.normalize(hnn) {
            None => (0, 0, r),
            Some(0) => (0, 1, r),
            Some(k) => (k, blocks(&cand.g, k, hnn).len(), r),
        };
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, cand));
        }
    }
    let ((mut k, _, _), mut cand) = best.ok_or(RewriteError::InVertexGroup)?;
    if k == 0 {
        return Ok(at_form(cand, hnn, inverted));
    }

    let cap = 4 * w0.len() + 8;
    let mut iterations = 0;
    loop {
        let bl = blocks(&cand.g, k, hnn);
        if bl[0].0 == Factor::U {
            return finish(bl, k, cand.conj, inverted, iterations, &target, hnn);
        }
        if iterations >= cap {
            return Err(RewriteError::NoTermination(iterations));
        }
        iterations += 1;
        // g t = v₀·rest·t is conjugate by v₀ to rest·(t v₀ t⁻¹)·t
        let v0 = &bl[0].1;
        let mut g: Vec<CopyLetter> = bl[1..].iter().flat_map(|(_, l)| l.iter().copied()).collect();
        g.extend(v0.iter().map(|&(c, a)| (c - 1, a)));
        cand.conj = britton_reduce(&cand.conj.concat(&letters_to_word(v0, hnn), hnn), hnn);
        cand.g = g;
        match cand.normalize(hnn) {
            None | Some(0) => return Ok(at_form(cand, hnn, inverted)),
            Some(w) => k = w,
        }
    }
}

fn finish(
    bl: Vec<(Factor, Vec<CopyLetter>)>,
    k: i64,
    conjugator: HnnWord,
    inverted: bool,
    iterations: usize,
    target: &HnnWord,
    hnn: &Hnn,
) -> Result<Rewrite, RewriteError> {
    let level = k - 1;
    // blocks merged across W may carry letters just outside 0..=level; renormalize first
    let elem = |l: &[CopyLetter]| {
        amalgam_reduce(&path_normal_form(l, 0, hnn), hnn, level).map_err(|e| RewriteError::InvariantViolated(e.to_string()))
    };
    let shifted = |l: &[CopyLetter]| -> Vec<CopyLetter> { l.iter().map(|&(c, a)| (c - 1, a)).collect() };
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut x = AmalgamElement::identity(level, hnn);
    let mut it = bl.chunks(2);
    for pair in &mut it {
        match pair {
            [(Factor::U, u), (Factor::V, v)] => {
                a.push(elem(u)?);
                b.push(elem(&shifted(v))?);
            }
            [(Factor::U, u)] => x = elem(u)?,
            _ => return Err(RewriteError::InvariantViolated("block alternation".into())),
        }
    }
    let sw = SpecialWord {
        k,
        a,
        b,
        x,
        conjugator,
        inverted,
        iterations,
    };
    sw.check(target, hnn)?;
    Ok(Rewrite::Special(sw))
}

/// Builds the level-1 special word `a₁t⁻¹b₁t⋯a_m t⁻¹b_m t x t` directly from letters.
pub fn special_word_from_letters(a: &[Elem], b: &[Elem], x: Elem, hnn: &Hnn) -> HnnWord {
    let mut syl = Vec::with_capacity(2 * a.len() + 1);
    for (&ai, &bi) in a.iter().zip(b) {
        syl.push(Syllable::new(ai, Sign::NEG));
        syl.push(Syllable::new(bi, Sign::POS));
    }
    syl.push(Syllable::new(x, Sign::POS));
    HnnWord::from_syllables(syl, hnn.a().identity()).as_cyclic()
}
