//! Exact row reduction over the rationals.

use crate::rational::Q;
use num_traits::{One, Zero};

/// Reduced row echelon form of a row set.
#[derive(Debug, Clone)]
pub struct Rref {
    /// Nonzero rows; row `k` has a leading one in column `pivots[k]`.
    pub rows: Vec<Vec<Q>>,
    pub pivots: Vec<usize>,
    pub width: usize,
}

impl Rref {
    pub fn new(mut rows: Vec<Vec<Q>>, width: usize) -> Self {
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..width {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            let inv = Q::one() / rows[r][col].clone();
            for x in rows[r].iter_mut() {
                if !x.is_zero() {
                    *x *= inv.clone();
                }
            }
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i == r || row[col].is_zero() {
                    continue;
                }
                let f = row[col].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= f.clone() * y;
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        rows.truncate(r);
        Rref {
            rows,
            pivots,
            width,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// `v` minus its component along the row space, normalized to vanish on pivot columns.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut out = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if out[p].is_zero() {
                continue;
            }
            let f = out[p].clone();
            for (x, y) in out.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= f.clone() * y;
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }
}
