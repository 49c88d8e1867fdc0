//! Words in the HNN extension A★_C, with Britton and cyclic reduction.

use crate::group::{Elem, Hnn, Side};
use std::fmt::Write as _;
use thiserror::Error;

/// Stable-letter exponent, always ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sign(i8);

impl Sign {
    pub const POS: Sign = Sign(1);
    pub const NEG: Sign = Sign(-1);

    pub fn from_i64(e: i64) -> Option<Sign> {
        match e {
            1 => Some(Sign::POS),
            -1 => Some(Sign::NEG),
            _ => None,
        }
    }

    pub fn value(self) -> i64 {
        self.0 as i64
    }

    pub fn is_pos(self) -> bool {
        self.0 > 0
    }

    pub fn neg(self) -> Sign {
        Sign(-self.0)
    }
}

/// One syllable `a t^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub letter: Elem,
    pub exp: Sign,
}

impl Syllable {
    pub fn new(letter: Elem, exp: Sign) -> Self {
        Syllable { letter, exp }
    }
}

/// The word `a₁t^{e₁}⋯a_k t^{e_k}·tail`.
///
/// For cyclic words the tail is folded into the first letter by [`cyclic_reduce`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HnnWord {
    pub syllables: Vec<Syllable>,
    pub tail: Elem,
    pub cyclic: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown element {name:?} at position {position}")]
    UnknownElement { name: String, position: usize },
    #[error("syntax error at position {position}: {msg}")]
    SyntaxError { position: usize, msg: String },
}

impl HnnWord {
    pub fn identity(hnn: &Hnn) -> Self {
        Self::from_element(hnn.a().identity())
    }

    pub fn from_element(a: Elem) -> Self {
        HnnWord {
            syllables: Vec::new(),
            tail: a,
            cyclic: false,
        }
    }

    pub fn from_syllables(syllables: Vec<Syllable>, tail: Elem) -> Self {
        HnnWord {
            syllables,
            tail,
            cyclic: false,
        }
    }

    /// The word `t^e`.
    pub fn t_power(hnn: &Hnn, e: i64) -> Self {
        let id = hnn.a().identity();
        let s = if e < 0 { Sign::NEG } else { Sign::POS };
        HnnWord::from_syllables(
            (0..e.unsigned_abs()).map(|_| Syllable::new(id, s)).collect(),
            id,
        )
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn is_trivial(&self, hnn: &Hnn) -> bool {
        self.syllables.is_empty() && hnn.a().is_identity(self.tail)
    }

    pub fn as_cyclic(mut self) -> Self {
        self.cyclic = true;
        self
    }

    pub fn as_linear(mut self) -> Self {
        self.cyclic = false;
        self
    }

    /// Concatenation; the tail of `self` merges into the first letter of `other`.
    pub fn concat(&self, other: &HnnWord, hnn: &Hnn) -> HnnWord {
        let a = hnn.a();
        let mut syl = self.syllables.clone();
        let tail = match other.syllables.split_first() {
            None => a.mul(self.tail, other.tail),
            Some((first, rest)) => {
                syl.push(Syllable::new(a.mul(self.tail, first.letter), first.exp));
                syl.extend_from_slice(rest);
                other.tail
            }
        };
        HnnWord::from_syllables(syl, tail)
    }

    pub fn inverse(&self, hnn: &Hnn) -> HnnWord {
        let a = hnn.a();
        let k = self.syllables.len();
        if k == 0 {
            return HnnWord::from_element(a.inv(self.tail));
        }
        let mut syl = Vec::with_capacity(k);
        syl.push(Syllable::new(a.inv(self.tail), self.syllables[k - 1].exp.neg()));
        for i in (1..k).rev() {
            syl.push(Syllable::new(
                a.inv(self.syllables[i].letter),
                self.syllables[i - 1].exp.neg(),
            ));
        }
        HnnWord {
            syllables: syl,
            tail: a.inv(self.syllables[0].letter),
            cyclic: self.cyclic,
        }
    }

    pub fn pow(&self, n: i64, hnn: &Hnn) -> HnnWord {
        let base = if n < 0 { self.inverse(hnn) } else { self.clone() };
        (0..n.unsigned_abs()).fold(HnnWord::identity(hnn), |acc, _| acc.concat(&base, hnn))
    }

    /// Cyclic rotation moving the first `r` syllables to the end (tail must be identity).
    pub fn rotate(&self, r: usize) -> HnnWord {
        let k = self.syllables.len();
        let mut syl = self.syllables.clone();
        if k > 0 {
            syl.rotate_left(r % k);
        }
        HnnWord {
            syllables: syl,
            tail: self.tail,
            cyclic: self.cyclic,
        }
    }

    /// Renders with identity letters omitted, e.g. `a t^-1 b t x t`.
    pub fn render(&self, hnn: &Hnn) -> String {
        let a = hnn.a();
        let mut out = String::new();
        let mut push = |s: &str| {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(s);
        };
        for s in &self.syllables {
            if !a.is_identity(s.letter) {
                push(a.elem_name(s.letter));
            }
            push(if s.exp.is_pos() { "t" } else { "t^-1" });
        }
        if !a.is_identity(self.tail) || self.syllables.is_empty() {
            push(a.elem_name(self.tail));
        }
        out
    }

    /// Compact form with every letter shown, for debugging.
    pub fn debug_string(&self) -> String {
        let mut s = String::new();
        for y in &self.syllables {
            let _ = write!(s, "{}t{} ", y.letter, if y.exp.is_pos() { "" } else { "'" });
        }
        let _ = write!(s, "{}", self.tail);
        s
    }
}

/// Parses `term+` where `term := ident | "t" ("^" "-"? digit+)?`.
pub fn parse_word(text: &str, hnn: &Hnn) -> Result<HnnWord, WordError> {
    let a = hnn.a();
    let mut syl = Vec::new();
    let mut pending = a.identity();
    let mut any = false;
    let mut pos = 0;
    for tok in text.split_whitespace() {
        let start = text[pos..].find(tok).map(|i| i + pos).unwrap_or(pos);
        pos = start + tok.len();
        any = true;
        if tok == "t" || tok.starts_with("t^") {
            let e: i64 = if tok == "t" {
                1
            } else {
                let digits = &tok[2..];
                let ok = {
                    let d = digits.strip_prefix('-').unwrap_or(digits);
                    !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())
                };
                if !ok {
                    return Err(WordError::SyntaxError {
                        position: start + 2,
                        msg: format!("bad exponent {digits:?}"),
                    });
                }
                digits.parse().map_err(|_| WordError::SyntaxError {
                    position: start + 2,
                    msg: "exponent out of range".into(),
                })?
            };
            let s = if e < 0 { Sign::NEG } else { Sign::POS };
            for _ in 0..e.unsigned_abs() {
                syl.push(Syllable::new(pending, s));
                pending = a.identity();
            }
        } else {
            if tok.contains('^') {
                return Err(WordError::SyntaxError {
                    position: start,
                    msg: "only t may carry an exponent".into(),
                });
            }
            let x = a.index_of(tok).ok_or_else(|| WordError::UnknownElement {
                name: tok.to_string(),
                position: start,
            })?;
            pending = a.mul(pending, x);
        }
    }
    if !any {
        return Err(WordError::SyntaxError {
            position: 0,
            msg: "empty word".into(),
        });
    }
    Ok(HnnWord::from_syllables(syl, pending))
}

/// Σ e_i.
pub fn exponent_sum(w: &HnnWord) -> i64 {
    w.syllables.iter().map(|s| s.exp.value()).sum()
}

/// The image that a letter must lie in to pinch between `t^{first}` and `t^{-first}`,
/// and the side it is moved to.
fn pinch_sides(first: Sign) -> (Side, Side) {
    if first.is_pos() {
        (Side::P, Side::N)
    } else {
        (Side::N, Side::P)
    }
}

/// Replaces `t^ε x t^{-ε}` by the conjugated edge element when x lies in the right image.
pub fn pinch(first: Sign, x: Elem, hnn: &Hnn) -> Option<Elem> {
    let (from, to) = pinch_sides(first);
    hnn.e().preimage(from, x).map(|c| hnn.e().embed(to, c))
}

/// Linear Britton reduction; ignores the cyclic flag.
pub fn britton_reduce(w: &HnnWord, hnn: &Hnn) -> HnnWord {
    let a = hnn.a();
    let mut stack: Vec<Syllable> = Vec::with_capacity(w.syllables.len());
    let mut cur = a.identity();
    for s in &w.syllables {
        cur = a.mul(cur, s.letter);
        if let Some(top) = stack.last() {
            if top.exp == s.exp.neg() {
                if let Some(img) = pinch(top.exp, cur, hnn) {
                    let top = stack.pop().expect("nonempty");
                    cur = a.mul(top.letter, img);
                    continue;
                }
            }
        }
        stack.push(Syllable::new(cur, s.exp));
        cur = a.identity();
    }
    HnnWord {
        syllables: stack,
        tail: a.mul(cur, w.tail),
        cyclic: w.cyclic,
    }
}

/// True iff `w` represents the identity (Britton's lemma).
pub fn is_identity(w: &HnnWord, hnn: &Hnn) -> bool {
    britton_reduce(w, hnn).is_trivial(hnn)
}

/// True iff `u` and `v` represent the same element.
pub fn equal_elements(u: &HnnWord, v: &HnnWord, hnn: &Hnn) -> bool {
    is_identity(&u.concat(&v.inverse(hnn), hnn), hnn)
}

/// Outcome of cyclic reduction: `w = conjugator · word · conjugator⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CyclicReduction {
    Reduced { word: HnnWord, conjugator: HnnWord },
    InVertexGroup { element: Elem, conjugator: HnnWord },
}

impl CyclicReduction {
    pub fn conjugator(&self) -> &HnnWord {
        match self {
            CyclicReduction::Reduced { conjugator, .. }
            | CyclicReduction::InVertexGroup { conjugator, .. } => conjugator,
        }
    }
}

/// True if the wraparound `t^{e_k} a₁ t^{e₁}` pinches (tail assumed identity).
fn wrap_pinches(w: &HnnWord, hnn: &Hnn) -> bool {
    let k = w.syllables.len();
    if k < 2 {
        return false;
    }
    let (first, last) = (w.syllables[0], w.syllables[k - 1]);
    last.exp == first.exp.neg() && pinch(last.exp, first.letter, hnn).is_some()
}

/// Cyclic reduction with a tracked conjugator.
pub fn cyclic_reduce(w: &HnnWord, hnn: &Hnn) -> CyclicReduction {
    let a = hnn.a();
    let mut h = HnnWord::identity(hnn);
    let mut cur = britton_reduce(w, hnn);
    loop {
        if cur.syllables.is_empty() {
            return CyclicReduction::InVertexGroup {
                element: cur.tail,
                conjugator: h,
            };
        }
        if !a.is_identity(cur.tail) {
            // w = tail⁻¹ · (tail a₁ t^{e₁} ⋯) · tail
            let t = cur.tail;
            h = britton_reduce(&h.concat(&HnnWord::from_element(a.inv(t)), hnn), hnn);
            cur.syllables[0].letter = a.mul(t, cur.syllables[0].letter);
            cur.tail = a.identity();
        }
        if !wrap_pinches(&cur, hnn) {
            cur.cyclic = true;
            return CyclicReduction::Reduced {
                word: cur,
                conjugator: h,
            };
        }
        // w = g · (rest · g) · g⁻¹ with g = a₁ t^{e₁}
        let g = HnnWord::from_syllables(vec![cur.syllables[0]], a.identity());
        h = britton_reduce(&h.concat(&g, hnn), hnn);
        let rotated = HnnWord::from_syllables(cur.syllables[1..].to_vec(), a.identity()).concat(&g, hnn);
        cur = britton_reduce(&rotated, hnn);
    }
}

/// True iff no pinch occurs, including across the wraparound.
pub fn is_cyclically_reduced(w: &HnnWord, hnn: &Hnn) -> bool {
    let lin = britton_reduce(&w.clone().as_linear(), hnn);
    lin.syllables.len() == w.syllables.len()
        && hnn.a().is_identity(w.tail)
        && !wrap_pinches(w, hnn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cyclic, klein};
    use crate::group::EdgePair;
    use proptest::prelude::*;

    fn z(n: usize) -> Hnn {
        Hnn::with_trivial_edge(cyclic(n))
    }

    fn p(s: &str, h: &Hnn) -> HnnWord {
        parse_word(s, h).unwrap()
    }

    #[test]
    fn parse_examples() {
        let h = Hnn::with_trivial_edge(klein());
        let w = p("x t^-1 y t xy t", &h);
        assert_eq!(w.len(), 3);
        assert_eq!(w.syllables[0], Syllable::new(1, Sign::NEG));
        assert_eq!(w.syllables[1], Syllable::new(2, Sign::POS));
        assert_eq!(w.syllables[2], Syllable::new(3, Sign::POS));
        assert_eq!(exponent_sum(&w), 1);
        let tt = p("t t", &h);
        assert_eq!(tt.syllables, vec![Syllable::new(0, Sign::POS); 2]);
        assert!(matches!(
            parse_word("x q", &h),
            Err(WordError::UnknownElement { position: 2, .. })
        ));
        assert!(matches!(parse_word("t^x", &h), Err(WordError::SyntaxError { .. })));
        assert_eq!(p("t^-2 x", &h).len(), 2);
    }

    #[test]
    fn britton_examples() {
        let g = cyclic(2);
        let full = Hnn::new(g.clone(), EdgePair::new(&g, vec![0, 1], vec![0, 1]).unwrap());
        let r = britton_reduce(&p("t a t^-1", &full), &full);
        assert!(r.is_empty());
        assert_eq!(r.tail, 1);
        let h = z(3);
        assert!(britton_reduce(&p("t t^-1", &h), &h).is_trivial(&h));
        let w = p("a t a t^-1 a", &h);
        assert_eq!(britton_reduce(&w, &h), w);
    }

    #[test]
    fn cyclic_examples() {
        let h = z(3);
        match cyclic_reduce(&p("t a t^-1 t a t^-1", &h), &h) {
            CyclicReduction::InVertexGroup { element, .. } => assert_eq!(element, 2),
            other => panic!("{other:?}"),
        }
        let w = p("a t a t^-1 a", &h);
        match cyclic_reduce(&w, &h) {
            CyclicReduction::Reduced { word, conjugator } => {
                assert_eq!(word.len(), 2);
                let back = conjugator.concat(&word, &h).concat(&conjugator.inverse(&h), &h);
                assert!(equal_elements(&back, &w, &h));
            }
            other => panic!("{other:?}"),
        }
        let sw = p("a t^-1 a t a t", &h);
        match cyclic_reduce(&sw, &h) {
            CyclicReduction::Reduced { word, conjugator } => {
                assert_eq!(word.syllables, sw.syllables);
                assert!(conjugator.is_trivial(&h));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrap_pinch_with_edge() {
        // C = ⟨2⟩ in ℤ/4 on both sides: t⁻¹ 2 t collapses
        let g = cyclic(4);
        let h = Hnn::new(g.clone(), EdgePair::new(&g, vec![0, 2], vec![0, 2]).unwrap());
        let w = p("a2 t a t^-1", &h);
        assert!(!is_cyclically_reduced(&britton_reduce(&w, &h), &h));
        match cyclic_reduce(&w, &h) {
            CyclicReduction::InVertexGroup { element, conjugator } => {
                let back = conjugator
                    .concat(&HnnWord::from_element(element), &h)
                    .concat(&conjugator.inverse(&h), &h);
                assert!(equal_elements(&back, &w, &h));
            }
            other => panic!("{other:?}"),
        }
    }

    fn arb_word(n: usize, max_len: usize) -> impl Strategy<Value = HnnWord> {
        (
            prop::collection::vec((0..n, prop::bool::ANY), 0..max_len),
            0..n,
        )
            .prop_map(|(v, tail)| {
                HnnWord::from_syllables(
                    v.into_iter()
                        .map(|(a, s)| Syllable::new(a, if s { Sign::POS } else { Sign::NEG }))
                        .collect(),
                    tail,
                )
            })
    }

    fn edge_hnn() -> Hnn {
        let g = klein();
        Hnn::new(g.clone(), EdgePair::new(&g, vec![0, 1], vec![0, 2]).unwrap())
    }

    proptest! {
        #[test]
        fn reduce_idempotent_and_shrinking(w in arb_word(4, 12)) {
            for h in [Hnn::with_trivial_edge(klein()), edge_hnn()] {
                let r = britton_reduce(&w, &h);
                prop_assert!(r.len() <= w.len());
                prop_assert_eq!(britton_reduce(&r, &h), r.clone());
                prop_assert_eq!(exponent_sum(&r), exponent_sum(&w));
            }
        }

        #[test]
        fn free_cancellation(w in arb_word(3, 10)) {
            let h = z(3);
            prop_assert!(is_identity(&w.concat(&w.inverse(&h), &h), &h));
            prop_assert_eq!(exponent_sum(&w.inverse(&h)), -exponent_sum(&w));
        }

        #[test]
        fn cyclic_recombines(w in arb_word(4, 10)) {
            for h in [Hnn::with_trivial_edge(klein()), edge_hnn()] {
                let res = cyclic_reduce(&w, &h);
                let (core, c) = match &res {
                    CyclicReduction::Reduced { word, conjugator } => {
                        prop_assert!(is_cyclically_reduced(word, &h));
                        prop_assert_eq!(exponent_sum(word), exponent_sum(&w));
                        (word.clone().as_linear(), conjugator.clone())
                    }
                    CyclicReduction::InVertexGroup { element, conjugator } => {
                        prop_assert_eq!(exponent_sum(&w), 0);
                        (HnnWord::from_element(*element), conjugator.clone())
                    }
                };
                let back = c.concat(&core, &h).concat(&c.inverse(&h), &h);
                prop_assert!(equal_elements(&back, &w, &h));
            }
        }
    }
}
