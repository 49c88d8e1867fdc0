//! Exhaustive bounded search for surfaces in simple normal form.
//!
//! Pieces are closed walks in the turn graph; a surface is built by repeatedly taking the
//! first unglued turn occurrence and gluing it either to an existing occurrence of the
//! paired type or to a fresh piece containing that type.

use crate::rational::Q;
use crate::surface::{CombSurface, Occ};
use crate::turns::TurnSystem;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Largest total degree of the w-boundary.
    pub max_degree: usize,
    pub max_piece_turns: usize,
    pub max_pieces: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_degree: 2,
            max_piece_turns: 6,
            max_pieces: 12,
            time_limit: None,
        }
    }
}

#[derive(Debug, Error, Clone)]
pub enum EnumerateError {
    #[error("search budget exhausted after {} surfaces", partial.len())]
    BudgetExhausted { partial: Vec<CombSurface> },
}

/// A closed walk in Γ, stored in its least rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogPiece {
    pub turns: Vec<usize>,
}

/// All closed walks in Γ with at most `max_len` turns, up to rotation.
pub fn piece_catalog(ts: &TurnSystem, max_len: usize) -> Vec<CatalogPiece> {
    let mut out = Vec::new();
    let mut walk = Vec::new();
    for start in 0..ts.turns.len() {
        walk.push(start);
        extend_walks(ts, start, max_len, &mut walk, &mut out);
        walk.pop();
    }
    out
}

fn extend_walks(ts: &TurnSystem, start: usize, max_len: usize, walk: &mut Vec<usize>, out: &mut Vec<CatalogPiece>) {
    let last = &ts.turns[*walk.last().expect("nonempty")];
    if last.to == ts.turns[start].from && is_least_rotation(walk) {
        out.push(CatalogPiece { turns: walk.clone() });
    }
    if walk.len() == max_len {
        return;
    }
    // only walks whose first turn is minimal can be least rotations
    for &t in &ts.out[last.to.0] {
        if t < start {
            continue;
        }
        walk.push(t);
        extend_walks(ts, start, max_len, walk, out);
        walk.pop();
    }
}

fn is_least_rotation(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|r| {
        let rotated = w[r..].iter().chain(&w[..r]);
        w.iter().cmp(rotated) != std::cmp::Ordering::Greater
    })
}

struct Search<'a> {
    ts: &'a TurnSystem,
    catalog: &'a [CatalogPiece],
    /// Per turn type: `(piece, position)` of every catalog occurrence.
    containing: Vec<Vec<(usize, usize)>>,
    max_occ: usize,
    max_pieces: usize,
    deadline: Option<Instant>,
    stop: &'a AtomicBool,
    pieces: Vec<usize>,
    occ_turn: Vec<usize>,
    occ_pos: Vec<Occ>,
    partner: Vec<Option<usize>>,
    found: Vec<CombSurface>,
    seen: HashSet<Vec<usize>>,
    steps: u64,
}

impl Search<'_> {
    fn push_piece(&mut self, id: usize) {
        let p = self.pieces.len();
        self.pieces.push(id);
        for (i, &t) in self.catalog[id].turns.iter().enumerate() {
            self.occ_turn.push(t);
            self.occ_pos.push((p, i));
            self.partner.push(None);
        }
    }

    fn pop_piece(&mut self) {
        let id = self.pieces.pop().expect("piece");
        let k = self.catalog[id].turns.len();
        let n = self.occ_turn.len() - k;
        self.occ_turn.truncate(n);
        self.occ_pos.truncate(n);
        self.partner.truncate(n);
    }

    fn glue(&mut self, a: usize, b: usize) {
        self.partner[a] = Some(b);
        self.partner[b] = Some(a);
    }

    fn unglue(&mut self, a: usize, b: usize) {
        self.partner[a] = None;
        self.partner[b] = None;
    }

    fn out_of_time(&mut self) -> bool {
        self.steps += 1;
        if self.steps.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    self.stop.store(true, Ordering::Relaxed);
                }
            }
        }
        self.stop.load(Ordering::Relaxed)
    }

    fn run(&mut self) {
        if self.out_of_time() {
            return;
        }
        let Some(o) = self.partner.iter().position(Option::is_none) else {
            self.emit();
            return;
        };
        let want = self.ts.pairing[self.occ_turn[o]];
        for o2 in o + 1..self.occ_turn.len() {
            if self.partner[o2].is_none() && self.occ_turn[o2] == want {
                self.glue(o, o2);
                self.run();
                self.unglue(o, o2);
            }
        }
        if self.pieces.len() >= self.max_pieces {
            return;
        }
        let options = self.containing[want].clone();
        for (id, pos) in options {
            let len = self.catalog[id].turns.len();
            if self.occ_turn.len() + len > self.max_occ {
                continue;
            }
            let base = self.occ_turn.len();
            self.push_piece(id);
            self.glue(o, base + pos);
            self.run();
            self.unglue(o, base + pos);
            self.pop_piece();
        }
    }

    fn emit(&mut self) {
        let ts = self.ts;
        let boundaries = self
            .pieces
            .iter()
            .map(|&id| {
                self.catalog[id]
                    .turns
                    .iter()
                    .map(|&t| (ts.turns[t].from, ts.turns[t]))
                    .collect()
            })
            .collect();
        let mut matching = Vec::new();
        for (a, p) in self.partner.iter().enumerate() {
            let b = p.expect("complete");
            if a < b {
                matching.push((self.occ_pos[a], self.occ_pos[b]));
            }
        }
        let s = CombSurface::new(boundaries, matching, ts);
        let (code, canon) = canonical_form(&s, ts);
        if !self.seen.insert(code) {
            return;
        }
        self.found.push(canon);
    }
}

/// Canonical code and relabelled surface: minimal breadth-first encoding over all starts.
pub fn canonical_form(s: &CombSurface, ts: &TurnSystem) -> (Vec<usize>, CombSurface) {
    let mut partner: BTreeMap<Occ, Occ> = BTreeMap::new();
    for &(a, b) in &s.matching {
        partner.insert(a, b);
        partner.insert(b, a);
    }
    let turn_id = |o: Occ| ts.turn_index(s.turn_at(o)).unwrap_or(usize::MAX);
    let mut best: Option<(Vec<usize>, Vec<(usize, usize)>)> = None;
    for p0 in 0..s.pieces.len() {
        for r0 in 0..s.pieces[p0].len() {
            let mut order: Vec<(usize, usize)> = vec![(p0, r0)];
            let mut label = vec![usize::MAX; s.pieces.len()];
            label[p0] = 0;
            let mut code = Vec::new();
            let mut k = 0;
            let mut worse = false;
            while k < order.len() && !worse {
                let (p, r) = order[k];
                let len = s.pieces[p].len();
                code.push(len);
                for i in 0..len {
                    let o = (p, (r + i) % len);
                    code.push(turn_id(o));
                    let (q, j) = partner[&o];
                    if label[q] == usize::MAX {
                        label[q] = order.len();
                        order.push((q, j));
                    }
                    let (_, rq) = order[label[q]];
                    let lq = s.pieces[q].len();
                    code.push(label[q]);
                    code.push((j + lq - rq) % lq);
                }
                if let Some((b, _)) = &best {
                    let n = code.len().min(b.len());
                    if code[..n] > b[..n] {
                        worse = true;
                    }
                }
                k += 1;
            }
            if worse {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| code < *b) {
                best = Some((code, order));
            }
        }
    }
    let Some((code, order)) = best else {
        return (Vec::new(), s.clone());
    };
    let mut label = vec![0; s.pieces.len()];
    for (i, &(p, _)) in order.iter().enumerate() {
        label[p] = i;
    }
    let relabel = |o: Occ| -> Occ {
        let (_, r) = order[label[o.0]];
        let len = s.pieces[o.0].len();
        (label[o.0], (o.1 + len - r) % len)
    };
    let boundaries = order
        .iter()
        .map(|&(p, r)| {
            let b = &s.pieces[p].boundary;
            b[r..].iter().chain(&b[..r]).copied().collect()
        })
        .collect();
    let mut matching: Vec<(Occ, Occ)> = s
        .matching
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (relabel(a), relabel(b));
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    matching.sort();
    (code, CombSurface::new(boundaries, matching, ts))
}

/// Every connected surface in simple normal form within the budget, deduplicated and in
/// canonical order.
pub fn enumerate_surfaces(ts: &TurnSystem, budget: SearchBudget) -> Result<Vec<CombSurface>, EnumerateError> {
    if budget.max_degree == 0 || budget.max_piece_turns == 0 || budget.max_pieces == 0 {
        return Err(EnumerateError::BudgetExhausted { partial: Vec::new() });
    }
    if ts.turns.is_empty() {
        return Ok(Vec::new());
    }
    let max_occ = budget.max_degree * ts.word_len();
    let catalog = piece_catalog(ts, budget.max_piece_turns.min(max_occ));
    let deadline = budget.time_limit.map(|d| Instant::now() + d);
    let stop = AtomicBool::new(false);

    // the first piece carries the least turn type of the surface
    let runs: Vec<(Vec<(Vec<usize>, CombSurface)>, bool)> = (0..catalog.len())
        .into_par_iter()
        .map(|first| {
            let min_turn = *catalog[first].turns.iter().min().expect("nonempty");
            let mut containing = vec![Vec::new(); ts.turns.len()];
            for (id, piece) in catalog.iter().enumerate() {
                if piece.turns.iter().any(|&t| t < min_turn) {
                    continue;
                }
                for (pos, &t) in piece.turns.iter().enumerate() {
                    containing[t].push((id, pos));
                }
            }
            let mut s = Search {
                ts,
                catalog: &catalog,
                containing,
                max_occ,
                max_pieces: budget.max_pieces,
                deadline,
                stop: &stop,
                pieces: Vec::new(),
                occ_turn: Vec::new(),
                occ_pos: Vec::new(),
                partner: Vec::new(),
                found: Vec::new(),
                seen: HashSet::new(),
                steps: 0,
            };
            s.push_piece(first);
            s.run();
            let out = s
                .found
                .into_iter()
                .map(|c| (canonical_form(&c, ts).0, c))
                .collect();
            (out, s.stop.load(Ordering::Relaxed))
        })
        .collect();

    let mut merged: BTreeMap<Vec<usize>, CombSurface> = BTreeMap::new();
    let mut exhausted = false;
    for (found, stopped) in runs {
        exhausted |= stopped;
        for (code, s) in found {
            merged.entry(code).or_insert(s);
        }
    }
    let surfaces: Vec<CombSurface> = merged.into_values().collect();
    if exhausted {
        Err(EnumerateError::BudgetExhausted { partial: surfaces })
    } else {
        Ok(surfaces)
    }
}

/// Least −χ/deg over the surfaces.
pub fn min_ratio(surfaces: &[CombSurface], ts: &TurnSystem) -> Option<Q> {
    surfaces
        .iter()
        .map(|s| {
            let inv = s.invariants(ts);
            Q::new(inv.neg_chi().into(), (inv.deg as i64).into())
        })
        .min()
}
