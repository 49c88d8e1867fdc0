//! Exact two-phase simplex with Bland's rule.

use crate::rational::Q;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("row has {got} coefficients, expected {expected}")]
    Shape { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coef: Vec<Q>,
    pub kind: RowKind,
    pub rhs: Q,
}

/// Maximize `objective · x` subject to the rows; variables are nonnegative unless marked free.
#[derive(Debug, Clone)]
pub struct Lp {
    pub objective: Vec<Q>,
    pub free: Vec<bool>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Q>,
    pub value: Q,
    pub pivots: usize,
}

impl Lp {
    pub fn new(objective: Vec<Q>) -> Self {
        let n = objective.len();
        Lp {
            objective,
            free: vec![false; n],
            rows: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coef: Vec<Q>, kind: RowKind, rhs: Q) {
        self.rows.push(Row { coef, kind, rhs });
    }
}

struct Tableau {
    a: Vec<Vec<Q>>,
    b: Vec<Q>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Q::one() / self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            if !x.is_zero() {
                *x *= inv.clone();
            }
        }
        self.b[r] *= inv;
        let prow = self.a[r].clone();
        let pb = self.b[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for &j in &nz {
                let d = f.clone() * &prow[j];
                self.a[i][j] -= d;
            }
            self.b[i] -= f * &pb;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Maximizes `cost · x` over the allowed columns.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> Result<(), LpError> {
        let ncols = cost.len();
        loop {
            let mut entering = None;
            for j in 0..ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (i, &bj) in self.basis.iter().enumerate() {
                    if !self.a[i][j].is_zero() && !cost[bj].is_zero() {
                        rc -= cost[bj].clone() * &self.a[i][j];
                    }
                }
                if rc.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.a.len() {
                if !self.a[i][c].is_positive() {
                    continue;
                }
                let ratio = self.b[i].clone() / &self.a[i][c];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// Exact optimum of `lp`.
pub fn lp_solve(lp: &Lp) -> Result<LpSolution, LpError> {
    let n = lp.vars();
    for row in &lp.rows {
        if row.coef.len() != n {
            return Err(LpError::Shape {
                got: row.coef.len(),
                expected: n,
            });
        }
    }
    // structural columns, with free variables split into a positive and negative part
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for j in 0..n {
        if lp.free[j] {
            col_of.push((ncols, Some(ncols + 1)));
            ncols += 2;
        } else {
            col_of.push((ncols, None));
            ncols += 1;
        }
    }
    let structural = ncols;
    let slack_start = ncols;
    let n_slack = lp.rows.iter().filter(|r| r.kind != RowKind::Eq).count();
    ncols += n_slack;
    let art_start = ncols;
    let m = lp.rows.len();
    ncols += m;

    let mut a = vec![vec![Q::zero(); ncols]; m];
    let mut b = vec![Q::zero(); m];
    let mut s = slack_start;
    for (i, row) in lp.rows.iter().enumerate() {
        for (j, v) in row.coef.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let (p, neg) = col_of[j];
            a[i][p] = v.clone();
            if let Some(q) = neg {
                a[i][q] = -v.clone();
            }
        }
        match row.kind {
            RowKind::Le => {
                a[i][s] = Q::one();
                s += 1;
            }
            RowKind::Ge => {
                a[i][s] = -Q::one();
                s += 1;
            }
            RowKind::Eq => {}
        }
        b[i] = row.rhs.clone();
        if b[i].is_negative() {
            for x in a[i].iter_mut() {
                *x = -x.clone();
            }
            b[i] = -b[i].clone();
        }
        a[i][art_start + i] = Q::one();
    }
    let mut t = Tableau {
        a,
        b,
        basis: (art_start..art_start + m).collect(),
        pivots: 0,
    };

    let mut cost1 = vec![Q::zero(); ncols];
    for c in cost1.iter_mut().skip(art_start) {
        *c = -Q::one();
    }
    t.optimize(&cost1, &vec![true; ncols])?;
    if t
        .basis
        .iter()
        .zip(&t.b)
        .any(|(&bj, v)| bj >= art_start && !v.is_zero())
    {
        return Err(LpError::Infeasible);
    }
    // drive zero-level artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.a.len() {
        if t.basis[i] >= art_start {
            if let Some(c) = (0..art_start).find(|&j| !t.a[i][j].is_zero()) {
                t.pivot(i, c);
            } else {
                t.a.remove(i);
                t.b.remove(i);
                t.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    let mut cost2 = vec![Q::zero(); ncols];
    for (j, v) in lp.objective.iter().enumerate() {
        let (p, neg) = col_of[j];
        cost2[p] = v.clone();
        if let Some(q) = neg {
            cost2[q] = -v.clone();
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
    t.optimize(&cost2, &allowed)?;

    let mut col_val = vec![Q::zero(); structural];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < structural {
            col_val[bj] = t.b[i].clone();
        }
    }
    let x: Vec<Q> = col_of
        .iter()
        .map(|&(p, neg)| match neg {
            Some(q) => col_val[p].clone() - &col_val[q],
            None => col_val[p].clone(),
        })
        .collect();
    let value = x
        .iter()
        .zip(&lp.objective)
        .fold(Q::zero(), |acc, (x, c)| acc + x * c);
    Ok(LpSolution {
        x,
        value,
        pivots: t.pivots,
    })
}
