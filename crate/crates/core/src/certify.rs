//! Cost functions on turn types and their exact certification.

use crate::group::{Elem, Side};
use crate::linalg::Rref;
use crate::lp::{lp_solve, Lp, LpError, RowKind};
use crate::rational::{fmt_q, parse_q, q, qi, Q};
use crate::rf::{Length, RfError, RfQuery, Subgroup};
use crate::surface::Piece;
use crate::turns::{ProductGraph, TurnSystem, TurnType};
use crate::word::Sign;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error("word is not of the form a1 t^-1 b1 t ... am t^-1 bm t x t")]
    NotSpecial,
    #[error("n must be at least 2, got {0}")]
    InvalidN(u64),
    #[error("turn type {0} has no cost")]
    TurnNotInDomain(String),
    #[error("the turn system has no admissible turns")]
    NoAdmissibleTurns,
    #[error("cost is not a multiple of degree modulo the surface relations")]
    NotProportional,
    #[error("no certificate found within {iterations} cutting-plane rounds")]
    NoCertificate { iterations: usize },
    #[error("certificate check failed: {0}")]
    Violation(String),
    #[error("malformed cost function: {0}")]
    Malformed(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Rf(#[from] RfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Paper,
    Searched,
    UserSupplied,
}

/// Rational cost per admissible turn, indexed like `TurnSystem::turns`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub values: Vec<Q>,
    pub provenance: Provenance,
}

impl CostFunction {
    pub fn constant(ts: &TurnSystem, v: Q) -> Self {
        CostFunction {
            values: vec![v; ts.turns.len()],
            provenance: Provenance::UserSupplied,
        }
    }

    pub fn get(&self, ts: &TurnSystem, t: &TurnType) -> Option<&Q> {
        ts.turn_index(t).map(|i| &self.values[i])
    }

    pub fn to_json(&self, ts: &TurnSystem) -> Value {
        let mut m = Map::new();
        for (t, v) in ts.turns.iter().zip(&self.values) {
            m.insert(t.id_string(), Value::String(fmt_q(v)));
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value, ts: &TurnSystem) -> Result<Self, CertifyError> {
        let obj = v
            .as_object()
            .ok_or_else(|| CertifyError::Malformed("expected an object".into()))?;
        let mut values = vec![None; ts.turns.len()];
        for (k, val) in obj {
            let t = ts
                .parse_turn_id(k)
                .map_err(|e| CertifyError::Malformed(e.to_string()))?;
            let i = ts.turn_index(&t).ok_or_else(|| CertifyError::TurnNotInDomain(k.clone()))?;
            let s = val
                .as_str()
                .ok_or_else(|| CertifyError::Malformed(format!("{k}: expected a string")))?;
            values[i] = Some(parse_q(s).map_err(|e| CertifyError::Malformed(e.to_string()))?);
        }
        let values = values
            .into_iter()
            .zip(&ts.turns)
            .map(|(v, t)| v.ok_or_else(|| CertifyError::Malformed(format!("missing {}", t.id_string()))))
            .collect::<Result<_, _>>()?;
        Ok(CostFunction {
            values,
            provenance: Provenance::UserSupplied,
        })
    }
}

/// Letters `(a, b, x)` of a word in the form `a₁t⁻¹b₁t⋯a_m t⁻¹b_m t x t`.
pub fn special_letters(ts: &TurnSystem) -> Result<(Vec<Elem>, Vec<Elem>, Elem), CertifyError> {
    let s = &ts.word.syllables;
    let l = s.len();
    if l < 3 || l.is_multiple_of(2) || !ts.hnn.a().is_identity(ts.word.tail) {
        return Err(CertifyError::NotSpecial);
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for pair in s[..l - 1].chunks(2) {
        if pair[0].exp != Sign::NEG || pair[1].exp != Sign::POS {
            return Err(CertifyError::NotSpecial);
        }
        a.push(pair[0].letter);
        b.push(pair[1].letter);
    }
    if s[l - 1].exp != Sign::POS {
        return Err(CertifyError::NotSpecial);
    }
    Ok((a, b, s[l - 1].letter))
}

/// The table cost for a special word; depends only on the ordered arc pair.
pub fn paper_cost(ts: &TurnSystem, n: u64) -> Result<CostFunction, CertifyError> {
    if n < 2 {
        return Err(CertifyError::InvalidN(n));
    }
    special_letters(ts)?;
    let top = ts.word_len() as i64;
    let n = n as i64;
    let small = q(1, n);
    let big = q(n - 1, n);
    let cost = |i: i64, j: i64| -> Q {
        match (i > 0, j > 0) {
            (true, true) => {
                if i == top {
                    Q::zero()
                } else if i < j {
                    big.clone()
                } else {
                    small.clone()
                }
            }
            (true, false) => {
                let j = -j;
                if i == top || j == top || (i == top - 1 && j == top - 1) {
                    Q::zero()
                } else {
                    big.clone()
                }
            }
            (false, true) => {
                let i = -i;
                if i == top && j == top {
                    Q::one()
                } else if i == 1 && j == 1 {
                    q(2 - n, n)
                } else {
                    small.clone()
                }
            }
            (false, false) => {
                let (i, j) = (-i, -j);
                if j == top {
                    Q::zero()
                } else if i > j {
                    big.clone()
                } else {
                    small.clone()
                }
            }
        }
    };
    Ok(CostFunction {
        values: ts
            .turns
            .iter()
            .map(|t| cost(t.from.signed(), t.to.signed()))
            .collect(),
        provenance: Provenance::Paper,
    })
}

/// Sum of costs over the turns of a piece.
pub fn piece_cost(c: &CostFunction, p: &Piece, ts: &TurnSystem) -> Result<Q, CertifyError> {
    p.boundary.iter().try_fold(Q::zero(), |acc, (_, t)| {
        c.get(ts, t)
            .map(|v| acc + v)
            .ok_or_else(|| CertifyError::TurnNotInDomain(t.id_string()))
    })
}

/// A closed walk of turn indices that breaks a certificate condition.
#[derive(Debug, Clone, PartialEq)]
pub enum CertViolation {
    NegativeCycle { walk: Vec<usize>, cost: Q },
    CheapDisk { walk: Vec<usize>, cost: Q },
}

impl CertViolation {
    pub fn walk(&self) -> &[usize] {
        match self {
            CertViolation::NegativeCycle { walk, .. } | CertViolation::CheapDisk { walk, .. } => walk,
        }
    }

    /// Lower bound the walk must meet.
    pub fn required(&self) -> Q {
        match self {
            CertViolation::NegativeCycle { .. } => Q::zero(),
            CertViolation::CheapDisk { .. } => Q::one(),
        }
    }

    pub fn describe(&self, ts: &TurnSystem) -> String {
        let ids: Vec<String> = self.walk().iter().map(|&i| ts.turns[i].id_string()).collect();
        match self {
            CertViolation::NegativeCycle { cost, .. } => {
                format!("cycle [{}] has cost {} < 0", ids.join(" "), fmt_q(cost))
            }
            CertViolation::CheapDisk { cost, .. } => {
                format!("trivial-winding walk [{}] has cost {} < 1", ids.join(" "), fmt_q(cost))
            }
        }
    }
}

/// Minimum costs found by the two graph checks; `None` means no such closed walk exists.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphChecks {
    pub min_cycle: Option<Q>,
    pub min_disk_walk: Option<Q>,
}

type Edge = (usize, usize, usize);

enum BfOutcome {
    Dist(Vec<Option<Q>>, Vec<Option<usize>>),
    Negative(Vec<usize>),
}

/// Single-source shortest paths; a negative cycle is returned as edge indices.
fn bellman_ford(n: usize, edges: &[Edge], cost: &[Q], source: Option<usize>) -> BfOutcome {
    let mut dist: Vec<Option<Q>> = match source {
        Some(s) => {
            let mut d = vec![None; n];
            d[s] = Some(Q::zero());
            d
        }
        None => vec![Some(Q::zero()); n],
    };
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for (ei, &(u, v, t)) in edges.iter().enumerate() {
            let Some(du) = &dist[u] else { continue };
            let cand = du + &cost[t];
            if dist[v].as_ref().is_none_or(|dv| cand < *dv) {
                dist[v] = Some(cand);
                pred[v] = Some(ei);
                last = Some(v);
            }
        }
        if last.is_none() {
            return BfOutcome::Dist(dist, pred);
        }
    }
    let mut v = last.expect("relaxed in the final round");
    for _ in 0..n {
        v = edges[pred[v].expect("reached")].0;
    }
    let start = v;
    let mut cyc = Vec::new();
    loop {
        let e = pred[v].expect("on cycle");
        cyc.push(e);
        v = edges[e].0;
        if v == start {
            break;
        }
    }
    cyc.reverse();
    BfOutcome::Negative(cyc)
}

/// Cheapest closed walk through `source` given distances from it.
fn cheapest_return(
    source: usize,
    edges: &[Edge],
    cost: &[Q],
    dist: &[Option<Q>],
    pred: &[Option<usize>],
) -> Option<(Q, Vec<usize>)> {
    let mut best: Option<(Q, usize)> = None;
    for (ei, &(u, v, t)) in edges.iter().enumerate() {
        if v != source {
            continue;
        }
        let Some(du) = &dist[u] else { continue };
        let c = du + &cost[t];
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, ei));
        }
    }
    let (c, last) = best?;
    let mut walk = vec![edges[last].2];
    let mut x = edges[last].0;
    while x != source {
        let e = pred[x].expect("reachable");
        walk.push(edges[e].2);
        x = edges[e].0;
    }
    walk.reverse();
    Some((c, walk))
}

fn gamma_edges(ts: &TurnSystem) -> Vec<Edge> {
    ts.turns
        .iter()
        .enumerate()
        .map(|(i, t)| (t.from.0, t.to.0, i))
        .collect()
}

fn product_edges(pg: &ProductGraph) -> Vec<Edge> {
    pg.adj
        .iter()
        .enumerate()
        .flat_map(|(u, out)| out.iter().map(move |&(v, t)| (u, v, t)))
        .collect()
}

fn walk_cost(walk: &[usize], cost: &[Q]) -> Q {
    walk.iter().fold(Q::zero(), |acc, &t| acc + &cost[t])
}

/// Every violation found from some source, at most one per source.
pub fn find_violations(c: &CostFunction, pg: &ProductGraph, ts: &TurnSystem) -> (Vec<CertViolation>, GraphChecks) {
    let cost = &c.values;
    let ge = gamma_edges(ts);
    let n = ts.arcs.len();
    let per_arc: Vec<Result<Option<(Q, Vec<usize>)>, Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|s| match bellman_ford(n, &ge, cost, Some(s)) {
            BfOutcome::Negative(cyc) => Err(cyc.into_iter().map(|e| ge[e].2).collect()),
            BfOutcome::Dist(d, p) => Ok(cheapest_return(s, &ge, cost, &d, &p)),
        })
        .collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut min_cycle: Option<Q> = None;
    for r in &per_arc {
        match r {
            Err(walk) => {
                if seen.insert(walk.clone()) {
                    out.push(CertViolation::NegativeCycle {
                        cost: walk_cost(walk, cost),
                        walk: walk.clone(),
                    });
                }
            }
            Ok(Some((v, walk))) => {
                if min_cycle.as_ref().is_none_or(|m| v < m) {
                    min_cycle = Some(v.clone());
                }
                if v.is_negative() && seen.insert(walk.clone()) {
                    out.push(CertViolation::NegativeCycle {
                        cost: v.clone(),
                        walk: walk.clone(),
                    });
                }
            }
            Ok(None) => {}
        }
    }
    if !out.is_empty() {
        return (
            out,
            GraphChecks {
                min_cycle,
                min_disk_walk: None,
            },
        );
    }
    let pe = product_edges(pg);
    let id = ts.hnn.a().identity();
    let per_node: Vec<Option<(Q, Vec<usize>)>> = ts
        .arcs
        .par_iter()
        .map(|arc| {
            let s = pg.node(arc.id, id);
            match bellman_ford(pg.node_count(), &pe, cost, Some(s)) {
                BfOutcome::Dist(d, p) => cheapest_return(s, &pe, cost, &d, &p),
                BfOutcome::Negative(_) => unreachable!("no negative cycle in the base graph"),
            }
        })
        .collect();
    let mut min_disk: Option<Q> = None;
    for (v, walk) in per_node.into_iter().flatten() {
        if min_disk.as_ref().is_none_or(|m| v < *m) {
            min_disk = Some(v.clone());
        }
        if v < Q::one() && seen.insert(walk.clone()) {
            out.push(CertViolation::CheapDisk { cost: v, walk });
        }
    }
    (
        out,
        GraphChecks {
            min_cycle,
            min_disk_walk: min_disk,
        },
    )
}

/// Checks that every cycle of Γ costs ≥ 0 and every trivial-winding closed walk costs ≥ 1.
pub fn verify_certificate(c: &CostFunction, pg: &ProductGraph, ts: &TurnSystem) -> Result<GraphChecks, CertViolation> {
    let (mut v, checks) = find_violations(c, pg, ts);
    if v.is_empty() {
        Ok(checks)
    } else {
        Err(v.swap_remove(0))
    }
}

/// Homogeneous linear relations satisfied by the turn counts of every surface.
pub fn relation_rows(ts: &TurnSystem) -> Vec<Vec<Q>> {
    let n = ts.turns.len();
    let l = ts.word_len() as i64;
    let mut rows = Vec::new();
    for (i, &j) in ts.pairing.iter().enumerate() {
        if i < j {
            let mut r = vec![Q::zero(); n];
            r[i] = Q::one();
            r[j] = -Q::one();
            rows.push(r);
        }
    }
    // each arc is left and entered by deg/2 turns, deg = Σt/|w|
    let half = q(1, 2 * l);
    for arc in &ts.arcs {
        for outgoing in [true, false] {
            let mut r = vec![-half.clone(); n];
            for (i, t) in ts.turns.iter().enumerate() {
                let end = if outgoing { t.from } else { t.to };
                if end == arc.id {
                    r[i] += Q::one();
                }
            }
            rows.push(r);
        }
    }
    rows
}

fn degree_functional(ts: &TurnSystem) -> Vec<Q> {
    vec![q(1, ts.word_len() as i64); ts.turns.len()]
}

/// The λ with `Σ c(T)t_T = λ·deg` on every count vector satisfying the relations.
pub fn check_sum_identity(c: &CostFunction, ts: &TurnSystem) -> Result<Q, CertifyError> {
    if ts.turns.is_empty() {
        return Err(CertifyError::NoAdmissibleTurns);
    }
    let rr = Rref::new(relation_rows(ts), ts.turns.len());
    let cr = rr.reduce(&c.values);
    let dr = rr.reduce(&degree_functional(ts));
    let Some(k) = dr.iter().position(|x| !x.is_zero()) else {
        return Err(CertifyError::NotProportional);
    };
    let lambda = cr[k].clone() / &dr[k];
    if cr.iter().zip(&dr).all(|(x, y)| *x == lambda.clone() * y) {
        Ok(lambda)
    } else {
        Err(CertifyError::NotProportional)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub cost: CostFunction,
    pub lambda: Q,
    /// |w|/2 − λ.
    pub bound: Q,
    pub n: Option<u64>,
    pub checks: GraphChecks,
    pub rounds: usize,
}

impl Certificate {
    pub fn to_json(&self, ts: &TurnSystem) -> Value {
        let opt = |x: &Option<Q>| x.as_ref().map_or_else(|| "inf".to_string(), fmt_q);
        json!({
            "lambda": fmt_q(&self.lambda),
            "bound": fmt_q(&self.bound),
            "n": self.n,
            "costs": self.cost.to_json(ts),
            "checks": {
                "min_cycle": opt(&self.checks.min_cycle),
                "min_disk_walk": opt(&self.checks.min_disk_walk),
            },
        })
    }
}

/// Runs both checks on a given cost function.
pub fn certify_cost(c: CostFunction, n: Option<u64>, pg: &ProductGraph, ts: &TurnSystem) -> Result<Certificate, CertifyError> {
    let checks = verify_certificate(&c, pg, ts).map_err(|v| CertifyError::Violation(v.describe(ts)))?;
    let lambda = check_sum_identity(&c, ts)?;
    let bound = q(ts.word_len() as i64, 2) - &lambda;
    Ok(Certificate {
        cost: c,
        lambda,
        bound,
        n,
        checks,
        rounds: 0,
    })
}

/// The largest n for which the hypotheses on the special word's letters hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NChoice {
    pub n: u64,
    /// `(condition, largest n for which it holds)`.
    pub witnesses: Vec<(String, u64)>,
}

pub fn auto_n(ts: &TurnSystem) -> Result<NChoice, CertifyError> {
    let (a, b, _) = special_letters(ts)?;
    let g = ts.hnn.a();
    let e = ts.hnn.e();
    let cp = Subgroup::from_mask(g, e.image_mask(Side::P))?;
    let cn = Subgroup::from_mask(g, e.image_mask(Side::N))?;
    let name = |x: Elem| g.elem_name(x).to_string();
    let mut w = Vec::new();
    let first = RfQuery::new(g, &cp, a[0])?;
    w.push((format!("{} RF rel P-image", name(a[0])), first.max_rf() as u64));
    let last = *b.last().expect("m ≥ 1");
    let lastq = RfQuery::new(g, &cn, last)?;
    w.push((format!("{} RF rel N-image", name(last)), lastq.max_rf() as u64));
    for &x in &a {
        w.push((format!("{} RTF rel P-image", name(x)), RfQuery::new(g, &cp, x)?.max_rtf() as u64));
    }
    for &x in &b {
        w.push((format!("{} RTF rel N-image", name(x)), RfQuery::new(g, &cn, x)?.max_rtf() as u64));
    }
    let n = w.iter().map(|(_, k)| *k).min().expect("nonempty");
    Ok(NChoice { n, witnesses: w })
}

/// True iff every letter hypothesis holds at `n`.
pub fn hypotheses_hold(ts: &TurnSystem, n: u64) -> Result<bool, CertifyError> {
    let (a, b, _) = special_letters(ts)?;
    let g = ts.hnn.a();
    let e = ts.hnn.e();
    let cp = Subgroup::from_mask(g, e.image_mask(Side::P))?;
    let cn = Subgroup::from_mask(g, e.image_mask(Side::N))?;
    let len = Length::Finite(n as usize);
    let last = *b.last().expect("m ≥ 1");
    let mut ok = RfQuery::new(g, &cp, a[0])?.is_n_rf(len)? && RfQuery::new(g, &cn, last)?.is_n_rf(len)?;
    for &x in &a {
        ok &= RfQuery::new(g, &cp, x)?.is_n_rtf(len)?;
    }
    for &x in &b {
        ok &= RfQuery::new(g, &cn, x)?.is_n_rtf(len)?;
    }
    Ok(ok)
}

/// Certificate from the table cost at the given n.
pub fn paper_certificate(ts: &TurnSystem, pg: &ProductGraph, n: u64) -> Result<Certificate, CertifyError> {
    certify_cost(paper_cost(ts, n)?, Some(n), pg, ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualBudget {
    pub max_rounds: usize,
}

impl Default for DualBudget {
    fn default() -> Self {
        DualBudget { max_rounds: 400 }
    }
}

/// Minimizes λ by cutting planes: costs range over `λ·deg + span(relations)`, and each
/// violated closed walk found by the checks becomes a new constraint.
pub fn dual_search(ts: &TurnSystem, pg: &ProductGraph, budget: DualBudget) -> Result<Certificate, CertifyError> {
    dual_search_seeded(ts, pg, budget, None)
}

/// As `dual_search`, with the initial cuts taken from the violations of `seed`.
pub fn dual_search_seeded(
    ts: &TurnSystem,
    pg: &ProductGraph,
    budget: DualBudget,
    seed: Option<&CostFunction>,
) -> Result<Certificate, CertifyError> {
    if ts.turns.is_empty() {
        return Err(CertifyError::NoAdmissibleTurns);
    }
    let nt = ts.turns.len();
    let rr = Rref::new(relation_rows(ts), nt);
    let d = degree_functional(ts);
    let nv = 1 + rr.rank();
    // variable 0 is λ, the rest are multipliers of the reduced relation rows
    let coef_of_walk = |walk: &[usize]| -> Vec<Q> {
        let mut v = vec![Q::zero(); nv];
        for &t in walk {
            v[0] += &d[t];
            for (r, row) in rr.rows.iter().enumerate() {
                if !row[t].is_zero() {
                    v[1 + r] += &row[t];
                }
            }
        }
        v
    };
    let cost_of = |x: &[Q]| -> CostFunction {
        let values = (0..nt)
            .map(|t| {
                let mut c = x[0].clone() * &d[t];
                for (r, row) in rr.rows.iter().enumerate() {
                    if !row[t].is_zero() {
                        c += x[1 + r].clone() * &row[t];
                    }
                }
                c
            })
            .collect();
        CostFunction {
            values,
            provenance: Provenance::Searched,
        }
    };
    let mut objective = vec![Q::zero(); nv];
    objective[0] = -Q::one();
    let mut lp = Lp::new(objective);
    for f in lp.free.iter_mut().skip(1) {
        *f = true;
    }
    let mut cuts: BTreeSet<(Vec<usize>, bool)> = BTreeSet::new();
    let mut add_cuts = |lp: &mut Lp, vs: &[CertViolation]| -> usize {
        let mut added = 0;
        for v in vs {
            let mut key = v.walk().to_vec();
            key.sort_unstable();
            let disk = matches!(v, CertViolation::CheapDisk { .. });
            if cuts.insert((key, disk)) {
                lp.add(coef_of_walk(v.walk()), RowKind::Ge, v.required());
                added += 1;
            }
        }
        added
    };
    if let Some(s) = seed {
        let (vs, _) = find_violations(s, pg, ts);
        add_cuts(&mut lp, &vs);
    }
    for round in 1..=budget.max_rounds {
        let sol = lp_solve(&lp)?;
        let c = cost_of(&sol.x);
        let (vs, checks) = find_violations(&c, pg, ts);
        if vs.is_empty() {
            let lambda = sol.x[0].clone();
            log::debug!("dual search converged after {round} rounds, λ = {}", fmt_q(&lambda));
            return Ok(Certificate {
                bound: q(ts.word_len() as i64, 2) - &lambda,
                lambda,
                cost: c,
                n: None,
                checks,
                rounds: round,
            });
        }
        if add_cuts(&mut lp, &vs) == 0 {
            return Err(CertifyError::Violation("separation repeated a cut".into()));
        }
    }
    Err(CertifyError::NoCertificate {
        iterations: budget.max_rounds,
    })
}

/// Uniform cost `v` on every turn.
pub fn uniform_cost(ts: &TurnSystem, v: i64) -> CostFunction {
    CostFunction::constant(ts, qi(v))
}
