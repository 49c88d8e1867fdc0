//! Arcs of the word, admissible turn types, the pairing involution, the turn graph and
//! its winding-labelled lift.

use crate::group::{CElem, Elem, Hnn, Side};
use crate::rational::{fmt_q, Q};
use crate::word::HnnWord;
use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TurnError {
    #[error("word has no stable letters; it lies in the vertex group")]
    InVertexGroup,
    #[error("turn {0} is not admissible")]
    NotAdmissible(String),
    #[error("malformed turn id {0:?}")]
    BadTurnId(String),
}

/// Which side each end of an arc lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SideType {
    pub start: Side,
    pub end: Side,
}

impl fmt::Display for SideType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.start, self.end)
    }
}

/// Dense arc id: `2(i-1)` for γ_i, `2(i-1)+1` for γ_i⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

impl ArcId {
    pub fn from_signed(s: i64, len: usize) -> Option<ArcId> {
        let i = s.unsigned_abs() as usize;
        if i == 0 || i > len {
            return None;
        }
        Some(ArcId(2 * (i - 1) + usize::from(s < 0)))
    }

    /// 1-based index of the underlying segment.
    pub fn index(self) -> usize {
        self.0 / 2 + 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn signed(self) -> i64 {
        let i = self.index() as i64;
        if self.is_inverse() {
            -i
        } else {
            i
        }
    }

    pub fn inverse(self) -> ArcId {
        ArcId(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub id: ArcId,
    /// a_i, or a_i⁻¹ on an inverse arc.
    pub letter: Elem,
    pub side_type: SideType,
}

/// A turn `(from, c, to)` on one side of the edge space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TurnType {
    pub from: ArcId,
    pub to: ArcId,
    pub c: CElem,
    pub side: Side,
}

impl TurnType {
    pub fn id_string(&self) -> String {
        format!("{}:{}:{}", self.from.signed(), self.c, self.to.signed())
    }

    pub fn is_backtrack(&self, c_identity: CElem) -> bool {
        self.to == self.from.inverse() && self.c == c_identity
    }
}

impl fmt::Display for TurnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id_string())
    }
}

/// Splits the cyclic word into signed arcs with side types from the exponent pattern.
pub fn build_arcs(w: &HnnWord, hnn: &Hnn) -> Result<Vec<Arc>, TurnError> {
    let k = w.len();
    if k == 0 {
        return Err(TurnError::InVertexGroup);
    }
    let a = hnn.a();
    let mut arcs = Vec::with_capacity(2 * k);
    for i in 0..k {
        let prev = w.syllables[(i + k - 1) % k].exp;
        let cur = w.syllables[i].exp;
        let st = SideType {
            start: if prev.is_pos() { Side::P } else { Side::N },
            end: if cur.is_pos() { Side::N } else { Side::P },
        };
        let letter = w.syllables[i].letter;
        arcs.push(Arc {
            id: ArcId(2 * i),
            letter,
            side_type: st,
        });
        arcs.push(Arc {
            id: ArcId(2 * i + 1),
            letter: a.inv(letter),
            side_type: SideType {
                start: st.end,
                end: st.start,
            },
        });
    }
    Ok(arcs)
}

/// Arcs, admissible turns 𝒯, the pairing involution and the turn graph Γ.
#[derive(Debug, Clone)]
pub struct TurnSystem {
    pub hnn: Hnn,
    pub word: HnnWord,
    pub arcs: Vec<Arc>,
    pub turns: Vec<TurnType>,
    pub pairing: Vec<usize>,
    /// Turn indices grouped by from-arc.
    pub out: Vec<Vec<usize>>,
    index: HashMap<TurnType, usize>,
}

impl TurnSystem {
    /// Builds the turn system of a cyclically reduced word.
    pub fn new(w: &HnnWord, hnn: &Hnn) -> Result<Self, TurnError> {
        let arcs = build_arcs(w, hnn)?;
        Ok(build_turn_graph(arcs, w.clone(), hnn))
    }

    /// |w|.
    pub fn word_len(&self) -> usize {
        self.arcs.len() / 2
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    /// The arc following `a` along its orientation of the loop.
    pub fn next_arc(&self, a: ArcId) -> ArcId {
        let k = self.word_len();
        let i = a.index() - 1;
        if a.is_inverse() {
            ArcId(2 * ((i + k - 1) % k) + 1)
        } else {
            ArcId(2 * ((i + 1) % k))
        }
    }

    pub fn prev_arc(&self, a: ArcId) -> ArcId {
        self.next_arc(a.inverse()).inverse()
    }

    /// The paired turn type; defined on every side-compatible triple.
    pub fn pair_type(&self, t: &TurnType) -> TurnType {
        TurnType {
            from: self.prev_arc(t.to),
            to: self.next_arc(t.from),
            c: self.hnn.e().c_inv(t.c),
            side: t.side.flip(),
        }
    }

    pub fn pair_turn(&self, t: &TurnType) -> Result<TurnType, TurnError> {
        let i = self
            .turn_index(t)
            .ok_or_else(|| TurnError::NotAdmissible(t.id_string()))?;
        Ok(self.turns[self.pairing[i]])
    }

    pub fn turn_index(&self, t: &TurnType) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Side-compatible turn type from an id string `from:c:to`, admissible or not.
    pub fn parse_turn_id(&self, s: &str) -> Result<TurnType, TurnError> {
        let bad = || TurnError::BadTurnId(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let [f, c, t] = parts.as_slice() else {
            return Err(bad());
        };
        let k = self.word_len();
        let from = ArcId::from_signed(f.parse().map_err(|_| bad())?, k).ok_or_else(bad)?;
        let to = ArcId::from_signed(t.parse().map_err(|_| bad())?, k).ok_or_else(bad)?;
        let c: CElem = c.parse().map_err(|_| bad())?;
        if c >= self.hnn.e().c_size() {
            return Err(bad());
        }
        let side = self.arc(from).side_type.end;
        if self.arc(to).side_type.start != side {
            return Err(bad());
        }
        Ok(TurnType { from, to, c, side })
    }

    /// A-image of the turn's edge element on its side.
    pub fn label(&self, t: &TurnType) -> Elem {
        self.hnn.e().embed(t.side, t.c)
    }

    /// Contribution of a turn to winding: letter of its from-arc, then its label.
    pub fn step(&self, t: &TurnType) -> Elem {
        self.hnn.a().mul(self.arc(t.from).letter, self.label(t))
    }

    pub fn is_backtrack(&self, t: &TurnType) -> bool {
        t.is_backtrack(self.hnn.e().c_identity())
    }

    /// Γ as text, one edge per line: `from to cost winding`.
    pub fn export_gamma(&self, costs: Option<&[Q]>) -> String {
        let mut s = String::new();
        for (i, t) in self.turns.iter().enumerate() {
            let cost = costs.map_or_else(|| "-".to_string(), |c| fmt_q(&c[i]));
            let _ = writeln!(
                s,
                "{} {} {} {}",
                t.from.signed(),
                t.to.signed(),
                cost,
                self.hnn.a().elem_name(self.step(t))
            );
        }
        s
    }
}

/// Enumerates side-compatible, non-backtracking turns and attaches the pairing.
pub fn build_turn_graph(arcs: Vec<Arc>, word: HnnWord, hnn: &Hnn) -> TurnSystem {
    let e = hnn.e();
    let mut turns = Vec::new();
    for from in &arcs {
        for to in &arcs {
            let side = from.side_type.end;
            if to.side_type.start != side {
                continue;
            }
            for c in e.c_elements() {
                let t = TurnType {
                    from: from.id,
                    to: to.id,
                    c,
                    side,
                };
                if !t.is_backtrack(e.c_identity()) {
                    turns.push(t);
                }
            }
        }
    }
    turns.sort();
    let index: HashMap<TurnType, usize> = turns.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut out = vec![Vec::new(); arcs.len()];
    for (i, t) in turns.iter().enumerate() {
        out[t.from.0].push(i);
    }
    let mut ts = TurnSystem {
        hnn: hnn.clone(),
        word,
        arcs,
        turns,
        pairing: Vec::new(),
        out,
        index,
    };
    ts.pairing = ts
        .turns
        .iter()
        .map(|t| ts.index[&ts.pair_type(t)])
        .collect();
    ts
}

/// Γ×A: nodes `(arc, g)`, an edge `(α, g) → (α′, g·letter(α)·label(T))` per turn T.
#[derive(Debug, Clone)]
pub struct ProductGraph {
    pub group_size: usize,
    pub arc_count: usize,
    /// Per node: `(target node, turn index)`.
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl ProductGraph {
    pub fn node(&self, arc: ArcId, g: Elem) -> usize {
        arc.0 * self.group_size + g
    }

    pub fn node_parts(&self, n: usize) -> (ArcId, Elem) {
        (ArcId(n / self.group_size), n % self.group_size)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

pub fn build_product_graph(ts: &TurnSystem) -> ProductGraph {
    let a = ts.hnn.a();
    let n = a.size();
    let mut pg = ProductGraph {
        group_size: n,
        arc_count: ts.arcs.len(),
        adj: vec![Vec::new(); ts.arcs.len() * n],
    };
    for arc in &ts.arcs {
        for g in a.elements() {
            let src = pg.node(arc.id, g);
            for &ti in &ts.out[arc.id.0] {
                let t = &ts.turns[ti];
                let dst = pg.node(t.to, a.mul(g, ts.step(t)));
                pg.adj[src].push((dst, ti));
            }
        }
    }
    pg
}

/// Product of steps around a closed walk of turn indices.
pub fn winding(ts: &TurnSystem, walk: &[usize]) -> Elem {
    ts.hnn.a().product(walk.iter().map(|&i| ts.step(&ts.turns[i])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cyclic, klein};
    use crate::group::EdgePair;
    use crate::rewrite::special_word_from_letters;
    use crate::word::parse_word;

    fn special(n: usize, m: usize) -> TurnSystem {
        let h = Hnn::with_trivial_edge(cyclic(n));
        let w = special_word_from_letters(&vec![1; m], &vec![1; m], 1, &h);
        TurnSystem::new(&w, &h).unwrap()
    }

    #[test]
    fn special_word_side_types() {
        let ts = special(2, 2);
        let types: Vec<String> = ts.arcs.iter().map(|a| a.side_type.to_string()).collect();
        assert_eq!(
            types,
            vec!["PP", "PP", "NN", "NN", "PP", "PP", "NN", "NN", "PN", "NP"]
        );
    }

    #[test]
    fn short_words() {
        let h = Hnn::with_trivial_edge(cyclic(3));
        let at = TurnSystem::new(&parse_word("a t", &h).unwrap(), &h).unwrap();
        assert_eq!(at.arcs[0].side_type.to_string(), "PN");
        assert!(at.turns.is_empty());
        let w2 = TurnSystem::new(&parse_word("a t a t", &h).unwrap(), &h).unwrap();
        assert!(w2.arcs.iter().all(|a| a.side_type.to_string() != "PP"));
        assert_eq!(w2.arcs[0].side_type.to_string(), "PN");
        assert_eq!(w2.arcs[1].side_type.to_string(), "NP");
    }

    #[test]
    fn special_word_turns() {
        let ts = special(2, 1);
        assert_eq!(ts.turns.len(), 12);
        assert_eq!(special(2, 2).turns.len(), 40);
        let kind = |a: ArcId| (a.index() - 1) % 2;
        for t in &ts.turns {
            let (f, to) = (t.from.index(), t.to.index());
            if f < 3 && to < 3 {
                assert_eq!(kind(t.from), kind(t.to), "a-arc to b-arc turn {t}");
            }
        }
        let x = ArcId::from_signed(3, 3).unwrap();
        let bt = TurnType {
            from: x,
            to: x.inverse(),
            c: 0,
            side: Side::N,
        };
        assert!(ts.turn_index(&bt).is_none());
    }

    #[test]
    fn pairing_involution() {
        let g = klein();
        let h = Hnn::new(g.clone(), EdgePair::new(&g, vec![0, 1], vec![0, 2]).unwrap());
        let w = parse_word("x t^-1 y t t", &h).unwrap();
        let ts = TurnSystem::new(&w, &h).unwrap();
        assert!(!ts.turns.is_empty());
        for (i, t) in ts.turns.iter().enumerate() {
            let j = ts.pairing[i];
            assert_eq!(ts.pairing[j], i);
            assert_eq!(ts.turns[j].side, t.side.flip());
            assert_eq!(ts.pair_turn(t).unwrap(), ts.turns[j]);
            assert_eq!(ts.parse_turn_id(&t.id_string()).unwrap(), *t);
        }
        // (γ_i, c, γ_j⁻¹) ↦ (γ_{j+1}⁻¹, c⁻¹, γ_{i+1})
        let t = ts
            .turns
            .iter()
            .find(|t| !t.from.is_inverse() && t.to.is_inverse())
            .unwrap();
        let p = ts.pair_type(t);
        assert_eq!(p.from.signed(), -((t.to.index() % 3) as i64 + 1));
        assert_eq!(p.to.signed(), (t.from.index() % 3) as i64 + 1);
    }

    #[test]
    fn product_graph() {
        let ts = special(2, 1);
        let pg = build_product_graph(&ts);
        assert_eq!(pg.node_count(), 12);
        assert_eq!(pg.edge_count(), 12 * 2);
        // one-turn loops never close with trivial winding for this tight word
        for (i, t) in ts.turns.iter().enumerate() {
            if t.from == t.to {
                assert_ne!(winding(&ts, &[i]), 0);
            }
        }
        let ts3 = special(3, 1);
        let pg3 = build_product_graph(&ts3);
        for n in 0..pg3.node_count() {
            for &(d, ti) in &pg3.adj[n] {
                let (a0, g0) = pg3.node_parts(n);
                let (a1, g1) = pg3.node_parts(d);
                assert_eq!(a0, ts3.turns[ti].from);
                assert_eq!(a1, ts3.turns[ti].to);
                assert_eq!(g1, ts3.hnn.a().mul(g0, ts3.step(&ts3.turns[ti])));
            }
        }
    }

    #[test]
    fn winding_class_independent_of_rotation() {
        let ts = special(3, 1);
        // collect some 2- and 3-cycles in Γ
        for (i, t) in ts.turns.iter().enumerate() {
            for &j in &ts.out[t.to.0] {
                for &k in &ts.out[ts.turns[j].to.0] {
                    if ts.turns[k].to != t.from {
                        continue;
                    }
                    let a = ts.hnn.a();
                    let w0 = winding(&ts, &[i, j, k]);
                    let w1 = winding(&ts, &[j, k, i]);
                    let conj = a.elements().any(|g| a.conj(g, w0) == w1);
                    assert!(conj);
                }
            }
        }
    }
}
