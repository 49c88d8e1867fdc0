//! Normal forms in the kernel of t ↦ 1, viewed as a chain of copies of A amalgamated over C.
//!
//! `copy(i, a) = t^{-i} a t^{i}`; neighbouring copies are glued by
//! `copy(i, i_P(c)) = copy(i + 1, i_N(c))`.

use crate::group::{Elem, Hnn, Side};
use crate::word::{britton_reduce, HnnWord, Syllable};
use thiserror::Error;

/// A letter of A placed in a copy.
pub type CopyLetter = (i64, Elem);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AmalgamError {
    #[error("copy index {copy} outside 0..={level}")]
    LevelMismatch { copy: i64, level: i64 },
}

/// Image of the edge from copy `at` towards its neighbour `toward`, as a side of A.
fn edge_side(at: i64, toward: i64) -> Side {
    if toward > at {
        Side::P
    } else {
        Side::N
    }
}

/// Moves an element of the edge image in copy `at` to the neighbouring copy.
fn cross(hnn: &Hnn, at: i64, toward: i64, g: Elem) -> Option<Elem> {
    let s = edge_side(at, toward);
    hnn.e().preimage(s, g).map(|c| hnn.e().embed(s.flip(), c))
}

/// Reduced path normal form based at `base`: consecutive entries lie in adjacent copies,
/// every non-endpoint letter is a transversal representative, and backtracks carry letters
/// outside the edge image.
pub fn path_normal_form(letters: &[CopyLetter], base: i64, hnn: &Hnn) -> Vec<CopyLetter> {
    let a = hnn.a();
    let id = a.identity();
    let mut raw: Vec<CopyLetter> = vec![(base, id)];
    let mut cur = base;
    let walk = |raw: &mut Vec<CopyLetter>, cur: &mut i64, to: i64| {
        while *cur != to {
            *cur += if to > *cur { 1 } else { -1 };
            raw.push((*cur, id));
        }
    };
    for &(c, g) in letters {
        walk(&mut raw, &mut cur, c);
        let last = raw.last_mut().expect("nonempty");
        last.1 = a.mul(last.1, g);
    }
    walk(&mut raw, &mut cur, base);

    let mut stack: Vec<CopyLetter> = Vec::with_capacity(raw.len());
    for (v, g) in raw {
        let n = stack.len();
        if n >= 2 && stack[n - 2].0 == v {
            let (u, top) = stack[n - 1];
            if let Some(moved) = cross(hnn, u, v, top) {
                stack.pop();
                let prev = stack.last_mut().expect("nonempty");
                prev.1 = a.mul(a.mul(prev.1, moved), g);
                continue;
            }
        }
        stack.push((v, g));
    }

    // transversals: least element index of each left coset g·E
    for i in 0..stack.len().saturating_sub(1) {
        let (v, g) = stack[i];
        let w = stack[i + 1].0;
        let side = edge_side(v, w);
        let (rep, carry) = hnn
            .e()
            .c_elements()
            .map(|c| {
                let y = hnn.e().embed(side, c);
                (a.mul(g, y), a.inv(y))
            })
            .min()
            .expect("C nonempty");
        stack[i].1 = rep;
        let moved = cross(hnn, v, w, carry).expect("edge element crosses");
        stack[i + 1].1 = a.mul(moved, stack[i + 1].1);
    }
    stack
}

/// Interval of copies `[lo, hi]`; `hi = lo - 1` denotes the edge group between `hi` and `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Support {
    pub lo: i64,
    pub hi: i64,
}

impl Support {
    pub fn width(&self) -> i64 {
        (self.hi - self.lo).max(0)
    }
}

/// True iff the product of `letters` lies in the subgroup generated by copies `lo..=hi`
/// (for `hi = lo - 1`, the edge group between them).
pub fn in_range(letters: &[CopyLetter], lo: i64, hi: i64, hnn: &Hnn) -> bool {
    let nf = path_normal_form(letters, lo, hnn);
    if hi >= lo {
        nf.iter().all(|&(v, _)| (lo..=hi).contains(&v))
    } else {
        nf.len() == 1 && hnn.e().in_image(Side::N, nf[0].1)
    }
}

/// Tight support of a nontrivial product; `None` for the identity.
pub fn support(letters: &[CopyLetter], hnn: &Hnn) -> Option<Support> {
    let (min, max) = letters
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &(c, _)| (lo.min(c), hi.max(c)));
    if letters.is_empty() {
        return None;
    }
    let mut best: Option<Support> = None;
    for b in min..=max {
        let nf = path_normal_form(letters, b, hnn);
        if nf.len() == 1 && hnn.a().is_identity(nf[0].1) {
            return None;
        }
        let lo = nf.iter().map(|e| e.0).min().expect("nonempty");
        let hi = nf.iter().map(|e| e.0).max().expect("nonempty");
        if best.is_none_or(|s| hi - lo < s.hi - s.lo) {
            best = Some(Support { lo, hi });
        }
    }
    best
}

/// An element of `A_k`, the subgroup generated by copies `0..=k`, in normal form based at copy 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmalgamElement {
    level: i64,
    path: Vec<CopyLetter>,
}

impl AmalgamElement {
    pub fn identity(level: i64, hnn: &Hnn) -> Self {
        AmalgamElement {
            level,
            path: vec![(0, hnn.a().identity())],
        }
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    /// Full normal-form path, including identity pass-through letters.
    pub fn path(&self) -> &[CopyLetter] {
        &self.path
    }

    /// Non-identity entries of the normal form.
    pub fn syllables(&self, hnn: &Hnn) -> Vec<CopyLetter> {
        self.path
            .iter()
            .copied()
            .filter(|&(_, g)| !hnn.a().is_identity(g))
            .collect()
    }

    pub fn is_identity(&self, hnn: &Hnn) -> bool {
        self.path.len() == 1 && hnn.a().is_identity(self.path[0].1)
    }

    /// Single letter of copy 0, if the element lies in A itself.
    pub fn as_vertex_element(&self) -> Option<Elem> {
        match self.path.as_slice() {
            [(0, g)] => Some(*g),
            _ => None,
        }
    }

    pub fn support(&self, hnn: &Hnn) -> Option<Support> {
        support(&self.syllables(hnn), hnn)
    }

    pub fn in_range(&self, lo: i64, hi: i64, hnn: &Hnn) -> bool {
        in_range(&self.syllables(hnn), lo, hi, hnn)
    }

    pub fn mul(&self, other: &AmalgamElement, hnn: &Hnn) -> AmalgamElement {
        let mut l = self.syllables(hnn);
        l.extend(other.syllables(hnn));
        AmalgamElement {
            level: self.level.max(other.level),
            path: path_normal_form(&l, 0, hnn),
        }
    }

    pub fn inverse(&self, hnn: &Hnn) -> AmalgamElement {
        let l: Vec<CopyLetter> = self
            .path
            .iter()
            .rev()
            .map(|&(c, g)| (c, hnn.a().inv(g)))
            .collect();
        AmalgamElement {
            level: self.level,
            path: path_normal_form(&l, 0, hnn),
        }
    }

    /// Conjugation by t^{-d}: copy i moves to copy i + d.
    pub fn shift(&self, d: i64, level: i64, hnn: &Hnn) -> AmalgamElement {
        let l: Vec<CopyLetter> = self.syllables(hnn).iter().map(|&(c, g)| (c + d, g)).collect();
        AmalgamElement {
            level,
            path: path_normal_form(&l, 0, hnn),
        }
    }

    /// The element as an HNN word, Britton-reduced.
    pub fn to_word(&self, hnn: &Hnn) -> HnnWord {
        letters_to_word(&self.syllables(hnn), hnn)
    }

    pub fn render(&self, hnn: &Hnn) -> String {
        self.to_word(hnn).render(hnn)
    }
}

/// Reduces a product of copy letters at level `k`.
pub fn amalgam_reduce(
    letters: &[CopyLetter],
    hnn: &Hnn,
    k: i64,
) -> Result<AmalgamElement, AmalgamError> {
    if let Some(&(copy, _)) = letters.iter().find(|&&(c, _)| c < 0 || c > k) {
        return Err(AmalgamError::LevelMismatch { copy, level: k });
    }
    Ok(AmalgamElement {
        level: k,
        path: path_normal_form(letters, 0, hnn),
    })
}

/// `Π t^{-c} a t^{c}` as a reduced HNN word.
pub fn letters_to_word(letters: &[CopyLetter], hnn: &Hnn) -> HnnWord {
    let mut w = HnnWord::identity(hnn);
    for &(c, g) in letters {
        let piece = HnnWord::t_power(hnn, -c)
            .concat(&HnnWord::from_element(g), hnn)
            .concat(&HnnWord::t_power(hnn, c), hnn);
        w = w.concat(&piece, hnn);
    }
    britton_reduce(&w, hnn)
}

/// Copy letters of a word with exponent sum zero: `a_j` sits in copy `-s_j` where `s_j`
/// is the exponent sum of the prefix before it.
pub fn word_to_letters(w: &HnnWord, hnn: &Hnn) -> Vec<CopyLetter> {
    let mut s = 0i64;
    let mut out = Vec::with_capacity(w.len() + 1);
    for Syllable { letter, exp } in &w.syllables {
        if !hnn.a().is_identity(*letter) {
            out.push((-s, *letter));
        }
        s += exp.value();
    }
    if !hnn.a().is_identity(w.tail) {
        out.push((-s, w.tail));
    }
    out
}
