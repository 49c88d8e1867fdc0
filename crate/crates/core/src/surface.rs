//! Combinatorial admissible surfaces in simple normal form.
//!
//! A surface is stored as pieces (cyclic sequences of arcs joined by turns) plus a perfect
//! matching of turn occurrences. Internally it can be viewed as a chord diagram: the
//! w-boundaries are cyclic arc lists and each gap between consecutive arcs is joined to
//! another gap by a labelled chord.

use crate::group::{CElem, Elem, Side};
use crate::turns::{ArcId, TurnSystem, TurnType};
use crate::word::{britton_reduce, exponent_sum, pinch, HnnWord, Sign};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("equation witness does not hold: {0}")]
    WitnessInvalid(String),
    #[error("occurrence cannot be compressed: {0}")]
    NotCompressible(String),
    #[error("malformed surface: {0}")]
    Malformed(String),
}

/// Position of a turn occurrence: `(piece, index in its boundary)`.
pub type Occ = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    Disk,
    Annulus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    /// Each entry is an arc followed by the turn leaving it.
    pub boundary: Vec<(ArcId, TurnType)>,
    pub winding: Elem,
    pub kind: PieceKind,
}

impl Piece {
    pub fn new(boundary: Vec<(ArcId, TurnType)>, ts: &TurnSystem) -> Self {
        let a = ts.hnn.a();
        let winding = a.product(boundary.iter().map(|(_, t)| ts.step(t)));
        let kind = if a.is_identity(winding) {
            PieceKind::Disk
        } else {
            PieceKind::Annulus
        };
        Piece {
            boundary,
            winding,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombSurface {
    pub pieces: Vec<Piece>,
    pub matching: Vec<(Occ, Occ)>,
}

/// A failed surface invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyPiece(usize),
    ArcTurnMismatch(Occ),
    SideMismatch(Occ),
    ForbiddenTurn(Occ),
    OccurrenceOutOfRange(Occ),
    Unmatched(Occ),
    MatchedTwice(Occ),
    SelfMatched(Occ),
    PairMismatch(Occ, Occ),
    ArcCount { arc: i64, count: usize, expected: usize },
    DegreeImbalance { pos: usize, neg: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyPiece(p) => write!(f, "piece {p} is empty"),
            Violation::ArcTurnMismatch(o) => write!(f, "turn at {o:?} does not join its arcs"),
            Violation::SideMismatch(o) => write!(f, "turn at {o:?} is on the wrong side"),
            Violation::ForbiddenTurn(o) => write!(f, "turn at {o:?} goes to the next arc"),
            Violation::OccurrenceOutOfRange(o) => write!(f, "matching names missing occurrence {o:?}"),
            Violation::Unmatched(o) => write!(f, "matching not perfect: {o:?} unmatched"),
            Violation::MatchedTwice(o) => write!(f, "matching not perfect: {o:?} matched twice"),
            Violation::SelfMatched(o) => write!(f, "occurrence {o:?} matched to itself"),
            Violation::PairMismatch(a, b) => write!(f, "occurrences {a:?} and {b:?} do not have paired types"),
            Violation::ArcCount { arc, count, expected } => {
                write!(f, "arc {arc} occurs {count} times, expected {expected}")
            }
            Violation::DegreeImbalance { pos, neg } => {
                write!(f, "positive degree {pos} differs from negative degree {neg}")
            }
        }
    }
}

/// Counts derived from a surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceInvariants {
    pub deg: usize,
    pub deg_pos: usize,
    pub deg_neg: usize,
    pub chi: i64,
    pub v_d: usize,
    /// Occurrence count of every turn type present.
    pub t: BTreeMap<TurnType, usize>,
}

impl SurfaceInvariants {
    pub fn neg_chi(&self) -> i64 {
        -self.chi
    }
}

impl CombSurface {
    pub fn new(boundaries: Vec<Vec<(ArcId, TurnType)>>, matching: Vec<(Occ, Occ)>, ts: &TurnSystem) -> Self {
        CombSurface {
            pieces: boundaries.into_iter().map(|b| Piece::new(b, ts)).collect(),
            matching,
        }
    }

    pub fn occurrence_count(&self) -> usize {
        self.pieces.iter().map(Piece::len).sum()
    }

    pub fn turn_at(&self, o: Occ) -> &TurnType {
        &self.pieces[o.0].boundary[o.1].1
    }

    pub fn occurrences(&self) -> impl Iterator<Item = Occ> + '_ {
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(p, pc)| (0..pc.len()).map(move |i| (p, i)))
    }

    fn partner_map(&self) -> HashMap<Occ, Occ> {
        let mut m = HashMap::with_capacity(2 * self.matching.len());
        for &(a, b) in &self.matching {
            m.insert(a, b);
            m.insert(b, a);
        }
        m
    }

    /// Occurrences whose turn is an identity backtrack.
    pub fn find_backtracks(&self, ts: &TurnSystem) -> Vec<Occ> {
        self.occurrences()
            .filter(|&o| ts.is_backtrack(self.turn_at(o)))
            .collect()
    }

    pub fn disk_count(&self) -> usize {
        self.pieces.iter().filter(|p| p.kind == PieceKind::Disk).count()
    }

    /// Winding classes of annulus pieces, i.e. the A-boundary.
    pub fn a_boundary_classes(&self) -> Vec<Elem> {
        self.pieces
            .iter()
            .filter(|p| p.kind == PieceKind::Annulus)
            .map(|p| p.winding)
            .collect()
    }

    /// Exponents n_i of the w-boundary components, traced around the matching.
    pub fn w_boundary_exponents(&self, ts: &TurnSystem) -> Result<Vec<i64>, SurfaceError> {
        let cm = ChordModel::from_surface(self)?;
        let l = ts.word_len() as i64;
        Ok(cm
            .cycles()
            .into_iter()
            .map(|c| {
                let n = c.len() as i64 / l;
                if cm.arcs[c[0]].is_inverse() {
                    -n
                } else {
                    n
                }
            })
            .collect())
    }

    /// Genus of the connected surface; boundary circles are the w-boundaries plus one
    /// per annulus piece.
    pub fn genus(&self, ts: &TurnSystem) -> Result<i64, SurfaceError> {
        let b = (self.w_boundary_exponents(ts)?.len() + self.a_boundary_classes().len()) as i64;
        let chi = self.invariants(ts).chi;
        Ok((2 - chi - b) / 2)
    }

    pub fn invariants(&self, ts: &TurnSystem) -> SurfaceInvariants {
        surface_invariants(self, ts)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "pieces": self.pieces.iter().map(|p| {
                p.boundary.iter().map(|(a, t)| json!([a.signed(), t.id_string()])).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "matching": self.matching.iter().map(|(a, b)| json!([[a.0, a.1], [b.0, b.1]])).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value, ts: &TurnSystem) -> Result<Self, SurfaceError> {
        let bad = |m: &str| SurfaceError::Malformed(m.to_string());
        let pieces = v["pieces"].as_array().ok_or_else(|| bad("pieces"))?;
        let mut boundaries = Vec::with_capacity(pieces.len());
        for p in pieces {
            let mut b = Vec::new();
            for e in p.as_array().ok_or_else(|| bad("piece"))? {
                let arc = e[0].as_i64().ok_or_else(|| bad("arc"))?;
                let arc = ArcId::from_signed(arc, ts.word_len()).ok_or_else(|| bad("arc index"))?;
                let t = ts
                    .parse_turn_id(e[1].as_str().ok_or_else(|| bad("turn"))?)
                    .map_err(|e| SurfaceError::Malformed(e.to_string()))?;
                b.push((arc, t));
            }
            boundaries.push(b);
        }
        let occ = |x: &Value| -> Result<Occ, SurfaceError> {
            Ok((
                x[0].as_u64().ok_or_else(|| bad("occurrence"))? as usize,
                x[1].as_u64().ok_or_else(|| bad("occurrence"))? as usize,
            ))
        };
        let matching = v["matching"]
            .as_array()
            .ok_or_else(|| bad("matching"))?
            .iter()
            .map(|m| Ok((occ(&m[0])?, occ(&m[1])?)))
            .collect::<Result<Vec<_>, SurfaceError>>()?;
        Ok(CombSurface::new(boundaries, matching, ts))
    }
}

/// Degree, Euler characteristic, disk count and turn counts.
pub fn surface_invariants(s: &CombSurface, ts: &TurnSystem) -> SurfaceInvariants {
    let l = ts.word_len();
    let arcs = s.occurrence_count();
    let pos = s
        .pieces
        .iter()
        .flat_map(|p| &p.boundary)
        .filter(|(a, _)| !a.is_inverse())
        .count();
    let v_d = s.disk_count();
    let mut t = BTreeMap::new();
    for o in s.occurrences() {
        *t.entry(*s.turn_at(o)).or_insert(0) += 1;
    }
    SurfaceInvariants {
        deg: arcs / l,
        deg_pos: pos / l,
        deg_neg: (arcs - pos) / l,
        chi: v_d as i64 - (arcs / 2) as i64,
        v_d,
        t,
    }
}

/// χ from an explicit cell structure: corners identified along glued turns.
pub fn euler_characteristic_cells(s: &CombSurface) -> i64 {
    let offsets: Vec<usize> = s
        .pieces
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.len();
            Some(o)
        })
        .collect();
    let id = |o: Occ| offsets[o.0] + o.1;
    let n = s.occurrence_count();
    // corner 2k: start of turn k; corner 2k+1: end of turn k
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for &(a, b) in &s.matching {
        let (ia, ib) = (id(a), id(b));
        let (x, y) = (find(&mut parent, 2 * ia), find(&mut parent, 2 * ib + 1));
        parent[x] = y;
        let (x, y) = (find(&mut parent, 2 * ia + 1), find(&mut parent, 2 * ib));
        parent[x] = y;
    }
    let v = (0..2 * n).filter(|&x| find(&mut parent, x) == x).count() as i64;
    let e = (n + s.matching.len()) as i64;
    let annuli = s.pieces.iter().filter(|p| p.kind == PieceKind::Annulus).count() as i64;
    let f = s.pieces.len() as i64;
    // each annulus adds an inner vertex, an inner loop and a radial edge
    v + annuli - (e + 2 * annuli) + f
}

/// All violated invariants; empty iff the surface is valid.
pub fn validate_surface(s: &CombSurface, ts: &TurnSystem) -> Vec<Violation> {
    let mut out = Vec::new();
    for (p, piece) in s.pieces.iter().enumerate() {
        if piece.is_empty() {
            out.push(Violation::EmptyPiece(p));
        }
        let k = piece.len();
        for (i, (arc, t)) in piece.boundary.iter().enumerate() {
            let next_arc = piece.boundary[(i + 1) % k].0;
            if t.from != *arc || t.to != next_arc {
                out.push(Violation::ArcTurnMismatch((p, i)));
            }
            if ts.arc(t.from).side_type.end != t.side || ts.arc(t.to).side_type.start != t.side {
                out.push(Violation::SideMismatch((p, i)));
            }
            if t.to == ts.next_arc(t.from) {
                out.push(Violation::ForbiddenTurn((p, i)));
            }
        }
    }
    let mut seen: HashMap<Occ, usize> = HashMap::new();
    for &(a, b) in &s.matching {
        for o in [a, b] {
            if o.0 >= s.pieces.len() || o.1 >= s.pieces[o.0].len() {
                out.push(Violation::OccurrenceOutOfRange(o));
                continue;
            }
            *seen.entry(o).or_insert(0) += 1;
        }
        if a == b {
            out.push(Violation::SelfMatched(a));
            continue;
        }
        let in_range = |o: Occ| o.0 < s.pieces.len() && o.1 < s.pieces[o.0].len();
        if in_range(a) && in_range(b) && ts.pair_type(s.turn_at(a)) != *s.turn_at(b) {
            out.push(Violation::PairMismatch(a, b));
        }
    }
    for o in s.occurrences() {
        match seen.get(&o).copied().unwrap_or(0) {
            0 => out.push(Violation::Unmatched(o)),
            1 => {}
            _ => out.push(Violation::MatchedTwice(o)),
        }
    }
    let inv = surface_invariants(s, ts);
    let mut counts = vec![0usize; ts.arcs.len()];
    for (a, _) in s.pieces.iter().flat_map(|p| &p.boundary) {
        counts[a.0] += 1;
    }
    for arc in &ts.arcs {
        let expected = if arc.id.is_inverse() { inv.deg_neg } else { inv.deg_pos };
        if counts[arc.id.0] != expected {
            out.push(Violation::ArcCount {
                arc: arc.id.signed(),
                count: counts[arc.id.0],
                expected,
            });
        }
    }
    if exponent_sum(&ts.word) != 0 && inv.deg_pos != inv.deg_neg {
        out.push(Violation::DegreeImbalance {
            pos: inv.deg_pos,
            neg: inv.deg_neg,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gap {
    Junction,
    /// Chord to the gap after occurrence `to`, with the edge label read in this direction.
    Crossing { to: usize, label: CElem },
}

/// Boundary-first view: arc occurrences on cyclic w-boundaries, with gaps joined by chords.
/// The gap after occurrence `x` has id `x`.
#[derive(Debug, Clone)]
struct ChordModel {
    arcs: Vec<ArcId>,
    next: Vec<usize>,
    prev: Vec<usize>,
    alive: Vec<bool>,
    gap: Vec<Gap>,
}

impl ChordModel {
    fn from_surface(s: &CombSurface) -> Result<Self, SurfaceError> {
        let mut offsets = Vec::with_capacity(s.pieces.len());
        let mut n = 0;
        for p in &s.pieces {
            offsets.push(n);
            n += p.len();
        }
        let id = |o: Occ| offsets[o.0] + o.1;
        let partner = s.partner_map();
        let mut cm = ChordModel {
            arcs: vec![ArcId(0); n],
            next: vec![0; n],
            prev: vec![0; n],
            alive: vec![true; n],
            gap: vec![Gap::Junction; n],
        };
        for o in s.occurrences() {
            let (arc, t) = s.pieces[o.0].boundary[o.1];
            let q = *partner
                .get(&o)
                .ok_or_else(|| SurfaceError::Malformed(format!("{o:?} unmatched")))?;
            let after = (q.0, (q.1 + 1) % s.pieces[q.0].len());
            let x = id(o);
            cm.arcs[x] = arc;
            cm.next[x] = id(after);
            cm.prev[id(after)] = x;
            cm.gap[x] = Gap::Crossing {
                to: id(q),
                label: t.c,
            };
        }
        Ok(cm)
    }

    /// The w-boundary cycles of live occurrences.
    fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.arcs.len()];
        let mut out = Vec::new();
        for s in 0..self.arcs.len() {
            if !self.alive[s] || seen[s] {
                continue;
            }
            let mut c = Vec::new();
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                c.push(x);
                x = self.next[x];
            }
            out.push(c);
        }
        out
    }

    fn to_surface(&self, ts: &TurnSystem) -> Result<CombSurface, SurfaceError> {
        let n = self.arcs.len();
        let sigma = |x: usize| -> Result<(usize, CElem), SurfaceError> {
            match self.gap[x] {
                Gap::Crossing { to, label } => Ok((self.next[to], label)),
                Gap::Junction => Err(SurfaceError::Malformed(format!(
                    "gap after occurrence {x} does not cross the edge space"
                ))),
            }
        };
        let mut pos: Vec<Option<Occ>> = vec![None; n];
        let mut boundaries: Vec<Vec<(ArcId, TurnType)>> = Vec::new();
        for s in 0..n {
            if !self.alive[s] || pos[s].is_some() {
                continue;
            }
            let p = boundaries.len();
            let mut b = Vec::new();
            let mut x = s;
            while pos[x].is_none() {
                let (y, c) = sigma(x)?;
                let side = ts.arc(self.arcs[x]).side_type.end;
                if ts.arc(self.arcs[y]).side_type.start != side {
                    return Err(SurfaceError::Malformed(format!(
                        "chord at occurrence {x} joins incompatible sides"
                    )));
                }
                pos[x] = Some((p, b.len()));
                b.push((
                    self.arcs[x],
                    TurnType {
                        from: self.arcs[x],
                        to: self.arcs[y],
                        c,
                        side,
                    },
                ));
                x = y;
            }
            if x != s {
                return Err(SurfaceError::Malformed("piece cycle does not close".into()));
            }
            boundaries.push(b);
        }
        let mut matching = Vec::new();
        for x in 0..n {
            if !self.alive[x] {
                continue;
            }
            if let Gap::Crossing { to, .. } = self.gap[x] {
                if x < to {
                    matching.push((pos[x].expect("placed"), pos[to].expect("placed")));
                }
            }
        }
        Ok(CombSurface::new(boundaries, matching, ts))
    }

    fn set_chord(&mut self, a: usize, b: usize, label_ab: CElem, ts: &TurnSystem) {
        self.gap[a] = Gap::Crossing { to: b, label: label_ab };
        self.gap[b] = Gap::Crossing {
            to: a,
            label: ts.hnn.e().c_inv(label_ab),
        };
    }

    /// Cancels the inverse arc pair across the junction after `p`; returns the merged gap.
    fn zip(&mut self, p: usize, ts: &TurnSystem) -> Result<Option<usize>, SurfaceError> {
        let q = self.next[p];
        let (pp, qq) = (self.prev[p], self.next[q]);
        self.alive[p] = false;
        self.alive[q] = false;
        if pp == q {
            // the boundary closes up and is capped
            if let Gap::Crossing { to, .. } = self.gap[q] {
                if self.alive[to] {
                    return Err(SurfaceError::Malformed("dangling chord at cap".into()));
                }
            }
            return Ok(None);
        }
        self.next[pp] = qq;
        self.prev[qq] = pp;
        let e = ts.hnn.e();
        match (self.gap[pp], self.gap[q]) {
            (Gap::Crossing { to: f1, label: l1 }, Gap::Crossing { to: f2, label: l2 }) => {
                if f1 == q {
                    self.gap[pp] = Gap::Junction;
                } else {
                    self.gap[pp] = Gap::Junction;
                    self.set_chord(f1, f2, e.c_mul(e.c_inv(l1), l2), ts);
                }
            }
            (Gap::Crossing { .. }, Gap::Junction) => {}
            (Gap::Junction, Gap::Crossing { to: f2, label: l2 }) => {
                self.set_chord(pp, f2, l2, ts);
            }
            (Gap::Junction, Gap::Junction) => {}
        }
        Ok(Some(pp))
    }

    /// Zips every junction flanked by an arc and its inverse.
    fn zip_all(&mut self, start: Vec<usize>, ts: &TurnSystem) -> Result<(), SurfaceError> {
        let mut work = start;
        while let Some(p) = work.pop() {
            if !self.alive[p] || self.gap[p] != Gap::Junction {
                continue;
            }
            let q = self.next[p];
            if q == p || self.arcs[q] != self.arcs[p].inverse() {
                continue;
            }
            if let Some(m) = self.zip(p, ts)? {
                work.push(m);
            }
        }
        Ok(())
    }
}

/// Removes the backtrack at `occ` and zips the joined boundary, capping it if it cancels.
pub fn compress(s: &CombSurface, occ: Occ, ts: &TurnSystem) -> Result<CombSurface, SurfaceError> {
    let bad = |m: &str| SurfaceError::NotCompressible(m.to_string());
    if occ.0 >= s.pieces.len() || occ.1 >= s.pieces[occ.0].len() {
        return Err(bad("occurrence out of range"));
    }
    if !ts.is_backtrack(s.turn_at(occ)) {
        return Err(bad("turn is not an identity backtrack"));
    }
    let mut cm = ChordModel::from_surface(s)?;
    let offset: usize = s.pieces[..occ.0].iter().map(Piece::len).sum();
    let x = offset + occ.1;
    let Gap::Crossing { to: y, .. } = cm.gap[x] else {
        return Err(bad("occurrence is not glued"));
    };
    if cm.arcs[x].is_inverse() == cm.arcs[y].is_inverse() {
        return Err(bad("boundaries have the same sign"));
    }
    cm.gap[x] = Gap::Junction;
    cm.gap[y] = Gap::Junction;
    let (nx, ny) = (cm.next[x], cm.next[y]);
    cm.next[x] = ny;
    cm.prev[ny] = x;
    cm.next[y] = nx;
    cm.prev[nx] = y;
    cm.zip_all(vec![x, y], ts)?;
    if (0..cm.arcs.len()).any(|i| cm.alive[i] && cm.gap[i] == Gap::Junction) {
        return Err(bad("zipping left an uncancelled junction"));
    }
    cm.to_surface(ts)
}

/// `a = Π h_i w^{n_i} h_i⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationWitness {
    pub target: Elem,
    pub factors: Vec<(HnnWord, i64)>,
}

impl EquationWitness {
    pub fn product(&self, w: &HnnWord, ts: &TurnSystem) -> HnnWord {
        let h = &ts.hnn;
        let lin = w.clone().as_linear();
        self.factors.iter().fold(HnnWord::identity(h), |acc, (c, n)| {
            acc.concat(c, h)
                .concat(&lin.pow(*n, h), h)
                .concat(&c.inverse(h), h)
        })
    }

    pub fn verify(&self, ts: &TurnSystem) -> bool {
        let h = &ts.hnn;
        let p = self.product(&ts.word, ts);
        let r = britton_reduce(&p.concat(&HnnWord::from_element(h.a().inv(self.target)), h), h);
        r.is_trivial(h)
    }
}

/// Surface read off from an equation, plus the genus count of the planar surface it came from.
#[derive(Debug, Clone)]
pub struct EquationSurface {
    pub surface: CombSurface,
    /// −χ of the sphere with k+1 holes.
    pub planar_neg_chi: i64,
    pub degree: usize,
    /// k = 1: the witness only shows w is conjugate into A-classes.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
enum Tok {
    A(Elem),
    T(Sign, usize),
}

#[derive(Debug, Clone, Copy)]
enum TOrigin {
    /// Crossing at the gap after this arc occurrence.
    Gap(usize),
    /// Stable letter in a conjugator, identified with its mirror copy in the inverse.
    Spoke,
}

/// Builds the simple normal form of the planar surface given by the equation.
pub fn surface_from_equation(wit: &EquationWitness, ts: &TurnSystem) -> Result<EquationSurface, SurfaceError> {
    if wit.factors.is_empty() || wit.factors.iter().any(|(_, n)| *n == 0) {
        return Err(SurfaceError::WitnessInvalid("need k ≥ 1 factors with n_i ≠ 0".into()));
    }
    let h = &ts.hnn;
    let a = h.a();
    let e = h.e();
    let l = ts.word_len();
    let w = &ts.word;

    let mut toks: Vec<Tok> = Vec::new();
    let mut origin: Vec<TOrigin> = Vec::new();
    let mut mirror: Vec<usize> = Vec::new();
    let mut arcs: Vec<ArcId> = Vec::new();
    let mut next: Vec<usize> = Vec::new();
    let push_t = |toks: &mut Vec<Tok>, origin: &mut Vec<TOrigin>, mirror: &mut Vec<usize>, s: Sign, o: TOrigin| {
        let id = origin.len();
        toks.push(Tok::T(s, id));
        origin.push(o);
        mirror.push(usize::MAX);
        id
    };

    for (conj, n) in &wit.factors {
        let mut spoke_ids = Vec::new();
        for syl in &conj.syllables {
            toks.push(Tok::A(syl.letter));
            spoke_ids.push(push_t(&mut toks, &mut origin, &mut mirror, syl.exp, TOrigin::Spoke));
        }
        toks.push(Tok::A(conj.tail));

        let count = l * n.unsigned_abs() as usize;
        let base = arcs.len();
        for k in 0..count {
            let j = k % l;
            let arc = if *n > 0 { ArcId(2 * j) } else { ArcId(2 * (l - 1 - j) + 1) };
            arcs.push(arc);
            next.push(base + (k + 1) % count);
        }
        for k in 0..count {
            let occ = base + k;
            let i = arcs[occ].index() - 1;
            if *n > 0 {
                toks.push(Tok::A(w.syllables[i].letter));
                push_t(&mut toks, &mut origin, &mut mirror, w.syllables[i].exp, TOrigin::Gap(occ));
            } else {
                let before = base + (k + count - 1) % count;
                push_t(&mut toks, &mut origin, &mut mirror, w.syllables[i].exp.neg(), TOrigin::Gap(before));
                toks.push(Tok::A(a.inv(w.syllables[i].letter)));
            }
        }

        toks.push(Tok::A(a.inv(conj.tail)));
        for (p, syl) in conj.syllables.iter().enumerate().rev() {
            let m = push_t(&mut toks, &mut origin, &mut mirror, syl.exp.neg(), TOrigin::Spoke);
            mirror[m] = spoke_ids[p];
            mirror[spoke_ids[p]] = m;
            toks.push(Tok::A(a.inv(syl.letter)));
        }
    }
    toks.push(Tok::A(a.inv(wit.target)));

    // Britton reduction recording which stable letters cancel
    let n_t = origin.len();
    let mut partner = vec![usize::MAX; n_t];
    // label read from this letter towards its partner
    let mut label = vec![0; n_t];
    let mut stack: Vec<(usize, Sign, Elem)> = Vec::new();
    let mut cur = a.identity();
    for tok in &toks {
        match *tok {
            Tok::A(x) => cur = a.mul(cur, x),
            Tok::T(s, id) => {
                if let Some(&(pid, ps, before)) = stack.last() {
                    if ps == s.neg() {
                        if let Some(img) = pinch(ps, cur, h) {
                            let inner = if ps.is_pos() { Side::P } else { Side::N };
                            let c = e.preimage(inner, cur).expect("pinch implies image");
                            partner[pid] = id;
                            partner[id] = pid;
                            label[pid] = c;
                            label[id] = e.c_inv(c);
                            cur = a.mul(before, img);
                            stack.pop();
                            continue;
                        }
                    }
                }
                stack.push((id, s, cur));
                cur = a.identity();
            }
        }
    }
    if !stack.is_empty() || !a.is_identity(cur) {
        return Err(SurfaceError::WitnessInvalid(
            "product does not reduce to the target".into(),
        ));
    }

    let n_occ = arcs.len();
    let mut gap = vec![Gap::Junction; n_occ];
    for (tid, o) in origin.iter().enumerate() {
        let TOrigin::Gap(start) = *o else { continue };
        let mut lab = label[tid];
        let mut u = partner[tid];
        let mut hops = 0;
        while let TOrigin::Spoke = origin[u] {
            let m = mirror[u];
            lab = e.c_mul(lab, label[m]);
            u = partner[m];
            hops += 1;
            if hops > n_t {
                return Err(SurfaceError::WitnessInvalid("corridor does not terminate".into()));
            }
        }
        let TOrigin::Gap(end) = origin[u] else { unreachable!() };
        gap[start] = Gap::Crossing { to: end, label: lab };
    }
    let cm = ChordModel {
        prev: {
            let mut p = vec![0; n_occ];
            for (x, &y) in next.iter().enumerate() {
                p[y] = x;
            }
            p
        },
        arcs,
        next,
        alive: vec![true; n_occ],
        gap,
    };
    let surface = cm.to_surface(ts)?;
    let k = wit.factors.len() as i64;
    Ok(EquationSurface {
        surface,
        planar_neg_chi: k - 1,
        degree: wit.factors.iter().map(|(_, n)| n.unsigned_abs() as usize).sum(),
        degenerate: k == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cyclic, klein};
    use crate::group::{EdgePair, Hnn};
    use crate::word::parse_word;

    fn klein_t() -> TurnSystem {
        let g = klein();
        let h = Hnn::new(g.clone(), EdgePair::new(&g, vec![0, 1], vec![0, 2]).unwrap());
        let w = parse_word("t", &h).unwrap().as_cyclic();
        TurnSystem::new(&w, &h).unwrap()
    }

    fn check_valid(s: &CombSurface, ts: &TurnSystem) {
        let v = validate_surface(s, ts);
        assert!(v.is_empty(), "{:?}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        let inv = surface_invariants(s, ts);
        assert_eq!(euler_characteristic_cells(s), inv.chi);
        assert_eq!(2 * inv.neg_chi(), (inv.deg * ts.word_len()) as i64 - 2 * inv.v_d as i64);
    }

    #[test]
    fn equation_surface_with_edge() {
        // x t x⁻¹ t⁻¹ = x·y
        let ts = klein_t();
        let h = &ts.hnn;
        let x = HnnWord::from_element(1);
        let wit = EquationWitness {
            target: 3,
            factors: vec![(x, 1), (HnnWord::identity(h), -1)],
        };
        assert!(wit.verify(&ts));
        let es = surface_from_equation(&wit, &ts).unwrap();
        check_valid(&es.surface, &ts);
        let inv = es.surface.invariants(&ts);
        assert_eq!(inv.deg, 2);
        assert_eq!(inv.neg_chi(), 1);
        assert_eq!(es.planar_neg_chi, 1);
        assert!(es.surface.find_backtracks(&ts).is_empty());
        let mut ex = es.surface.w_boundary_exponents(&ts).unwrap();
        ex.sort();
        assert_eq!(ex, vec![-1, 1]);
        assert_eq!(es.surface.a_boundary_classes(), vec![3]);
        assert_eq!(es.surface.genus(&ts).unwrap(), 0);
    }

    #[test]
    fn witness_must_hold() {
        let ts = klein_t();
        let wit = EquationWitness {
            target: 2,
            factors: vec![(HnnWord::from_element(1), 1), (HnnWord::identity(&ts.hnn), -1)],
        };
        assert!(!wit.verify(&ts));
        assert!(matches!(
            surface_from_equation(&wit, &ts),
            Err(SurfaceError::WitnessInvalid(_))
        ));
        let single = EquationWitness {
            target: 0,
            factors: vec![(HnnWord::identity(&ts.hnn), 1)],
        };
        assert!(surface_from_equation(&single, &ts).is_err());
    }

    fn z3_special() -> TurnSystem {
        let h = Hnn::with_trivial_edge(cyclic(3));
        let w = parse_word("a t^-1 a t a t", &h).unwrap().as_cyclic();
        TurnSystem::new(&w, &h).unwrap()
    }

    #[test]
    fn cancelling_pair_compresses_to_nothing() {
        let ts = z3_special();
        let h = &ts.hnn;
        let wit = EquationWitness {
            target: 0,
            factors: vec![(HnnWord::identity(h), 1), (HnnWord::identity(h), -1)],
        };
        let es = surface_from_equation(&wit, &ts).unwrap();
        check_valid(&es.surface, &ts);
        let bt = es.surface.find_backtracks(&ts);
        assert!(!bt.is_empty());
        let c = compress(&es.surface, bt[0], &ts).unwrap();
        assert!(c.pieces.is_empty());
    }

    #[test]
    fn unequal_exponents_leave_a_boundary() {
        let ts = z3_special();
        let h = &ts.hnn;
        let w = ts.word.clone().as_linear();
        // w² · w⁻¹ · w⁻¹ = 1 using a spoke through w
        let wit = EquationWitness {
            target: 0,
            factors: vec![(HnnWord::identity(h), 2), (w.clone(), -1), (HnnWord::identity(h), -1)],
        };
        assert!(wit.verify(&ts));
        let es = surface_from_equation(&wit, &ts).unwrap();
        check_valid(&es.surface, &ts);
        let before = es.surface.invariants(&ts);
        assert_eq!(before.deg, 4);
        let mut s = es.surface.clone();
        let mut steps = 0;
        while let Some(&o) = s.find_backtracks(&ts).first() {
            let inv0 = s.invariants(&ts);
            let next = compress(&s, o, &ts).unwrap();
            check_valid(&next, &ts);
            let inv1 = next.invariants(&ts);
            assert!(inv1.deg + 2 <= inv0.deg);
            assert!(inv1.neg_chi() < inv0.neg_chi() || next.pieces.is_empty());
            s = next;
            steps += 1;
        }
        assert!(steps >= 1);
    }

    #[test]
    fn validation_reports_problems() {
        let ts = klein_t();
        let h = &ts.hnn;
        let wit = EquationWitness {
            target: 3,
            factors: vec![(HnnWord::from_element(1), 1), (HnnWord::identity(h), -1)],
        };
        let s = surface_from_equation(&wit, &ts).unwrap().surface;
        let mut broken = s.clone();
        broken.matching.pop();
        let v = validate_surface(&broken, &ts);
        assert!(v.iter().any(|x| matches!(x, Violation::Unmatched(_))));
        assert!(v.iter().any(|x| x.to_string().contains("matching not perfect")));
        let mut swapped = s.clone();
        if let Some(m) = swapped.matching.first_mut() {
            m.1 = m.0;
        }
        assert!(!validate_surface(&swapped, &ts).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let ts = z3_special();
        let h = &ts.hnn;
        let wit = EquationWitness {
            target: 0,
            factors: vec![(HnnWord::identity(h), 1), (HnnWord::identity(h), -1)],
        };
        let s = surface_from_equation(&wit, &ts).unwrap().surface;
        let back = CombSurface::from_json(&s.to_json(), &ts).unwrap();
        assert_eq!(back, s);
    }
}
