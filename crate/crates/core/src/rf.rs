//! Relative freeness and relative torsion-freeness of an element with respect to a subgroup.

use crate::group::{element_order, Elem, GroupTable};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RfError {
    #[error("element {0} lies in the subgroup")]
    ElementInSubgroup(Elem),
    #[error("subgroup mask is not a subgroup")]
    NotSubgroup,
    #[error("length parameter must be at least 2, got {0}")]
    InvalidLength(usize),
    #[error("unbounded length is never satisfied over a finite group; max_rf = {max_rf}")]
    ForcedFinite { max_rf: usize },
}

/// Length parameter: a finite n ≥ 2 or unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Length {
    Finite(usize),
    Unbounded,
}

/// A subgroup of a finite group given as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    mask: Vec<bool>,
    members: Vec<Elem>,
}

impl Subgroup {
    pub fn new(group: &GroupTable, members: &[Elem]) -> Result<Self, RfError> {
        let mut mask = vec![false; group.size()];
        for &m in members {
            *mask.get_mut(m).ok_or(RfError::NotSubgroup)? = true;
        }
        Self::from_mask(group, mask)
    }

    pub fn from_mask(group: &GroupTable, mask: Vec<bool>) -> Result<Self, RfError> {
        if mask.len() != group.size() || !group.is_subgroup(&mask) {
            return Err(RfError::NotSubgroup);
        }
        let members = group.elements().filter(|&x| mask[x]).collect();
        Ok(Subgroup { mask, members })
    }

    pub fn trivial(group: &GroupTable) -> Self {
        Self::new(group, &[group.identity()]).expect("trivial subgroup")
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.mask[x]
    }

    pub fn members(&self) -> &[Elem] {
        &self.members
    }
}

/// An element together with the subgroup it is tested against.
#[derive(Debug, Clone, Copy)]
pub struct RfQuery<'a> {
    pub group: &'a GroupTable,
    pub subgroup: &'a Subgroup,
    pub element: Elem,
}

impl<'a> RfQuery<'a> {
    pub fn new(group: &'a GroupTable, subgroup: &'a Subgroup, element: Elem) -> Result<Self, RfError> {
        if subgroup.contains(element) {
            return Err(RfError::ElementInSubgroup(element));
        }
        Ok(RfQuery {
            group,
            subgroup,
            element,
        })
    }

    fn finite(&self, n: Length) -> Result<usize, RfError> {
        match n {
            Length::Finite(k) if k >= 2 => Ok(k),
            Length::Finite(k) => Err(RfError::InvalidLength(k)),
            Length::Unbounded => Err(RfError::ForcedFinite {
                max_rf: self.max_rf(),
            }),
        }
    }

    /// Least k with a·c₁⋯a·c_k = id for some c_i.
    pub fn first_positive_relation(&self) -> usize {
        let g = self.group;
        let mut layer: HashSet<Elem> = [g.identity()].into();
        for k in 1.. {
            layer = layer
                .iter()
                .flat_map(|&x| {
                    let y = g.mul(x, self.element);
                    self.subgroup.members().iter().map(move |&c| g.mul(y, c))
                })
                .collect();
            if layer.contains(&g.identity()) {
                return k;
            }
        }
        unreachable!()
    }

    pub fn is_n_rtf(&self, n: Length) -> Result<bool, RfError> {
        let n = self.finite(n)?;
        Ok(self.first_positive_relation() >= n)
    }

    /// Largest n for which the element is n-RTF.
    pub fn max_rtf(&self) -> usize {
        self.first_positive_relation()
    }

    pub fn is_n_rf(&self, n: Length) -> Result<bool, RfError> {
        let n = self.finite(n)?;
        Ok(!self.has_rf_relation(n))
    }

    /// Searches for a relation a^{e₁}c₁⋯a^{e_k}c_k = id with fewer than `n` exponents of
    /// each sign and c_i ≠ id wherever e_i = −e_{i+1} cyclically.
    fn has_rf_relation(&self, n: usize) -> bool {
        let g = self.group;
        let size = g.size();
        let a = self.element;
        let a_inv = g.inv(a);
        let letter = |pos: bool| if pos { a } else { a_inv };
        let cs = self.subgroup.members();
        let id = g.identity();
        // state index: ((elem · n + pos) · n + neg) · 2 + last_is_pos
        let idx = |x: Elem, p: usize, q: usize, last: bool| ((x * n + p) * n + q) * 2 + last as usize;
        for first in [true, false] {
            let mut seen = vec![false; size * n * n * 2];
            let (p0, q0) = if first { (1, 0) } else { (0, 1) };
            let start = (letter(first), p0, q0, first);
            seen[idx(start.0, p0, q0, first)] = true;
            let mut stack = vec![start];
            while let Some((x, p, q, last)) = stack.pop() {
                // close: x · c_k = id
                let ck = g.inv(x);
                if self.subgroup.contains(ck) && (last == first || ck != id) {
                    return true;
                }
                for next in [true, false] {
                    let (np, nq) = if next { (p + 1, q) } else { (p, q + 1) };
                    if np >= n || nq >= n {
                        continue;
                    }
                    for &c in cs {
                        if next != last && c == id {
                            continue;
                        }
                        let y = g.mul(g.mul(x, c), letter(next));
                        let s = idx(y, np, nq, next);
                        if !seen[s] {
                            seen[s] = true;
                            stack.push((y, np, nq, next));
                        }
                    }
                }
            }
        }
        false
    }

    /// Largest n with the element n-RF; 1 when it is not even 2-RF.
    pub fn max_rf(&self) -> usize {
        let bound = element_order(self.element, self.group);
        (2..=bound)
            .take_while(|&n| !self.has_rf_relation(n))
            .last()
            .unwrap_or(1)
    }
}

/// gCg⁻¹ ∩ C = {id} for every g ∉ C.
pub fn is_malnormal(subgroup: &Subgroup, group: &GroupTable) -> bool {
    group.elements().filter(|&g| !subgroup.contains(g)).all(|g| {
        subgroup
            .members()
            .iter()
            .all(|&c| c == group.identity() || !subgroup.contains(group.conj(g, c)))
    })
}

/// Exhaustive reference deciders, used to cross-check the search-based ones.
pub mod oracle {
    use super::*;

    /// Enumerates every constrained word with at most 2(n−1) letters.
    pub fn brute_rf(q: &RfQuery, n: usize) -> bool {
        let cs = q.subgroup.members();
        let max_len = 2 * (n - 1);
        let mut signs = Vec::new();
        let mut cvals = Vec::new();
        fn rec(
            q: &RfQuery,
            cs: &[Elem],
            n: usize,
            max_len: usize,
            signs: &mut Vec<bool>,
            cvals: &mut Vec<Elem>,
        ) -> bool {
            let g = q.group;
            let k = signs.len();
            if k > 0 {
                let ok_constraints = (0..k).all(|i| {
                    let j = (i + 1) % k;
                    signs[i] == signs[j] || cvals[i] != g.identity()
                });
                if ok_constraints {
                    let prod = (0..k).fold(g.identity(), |acc, i| {
                        let l = if signs[i] { q.element } else { g.inv(q.element) };
                        g.mul(g.mul(acc, l), cvals[i])
                    });
                    if prod == g.identity() {
                        return true;
                    }
                }
            }
            if k == max_len {
                return false;
            }
            for s in [true, false] {
                let cnt = signs.iter().filter(|&&x| x == s).count();
                if cnt + 1 >= n {
                    continue;
                }
                for &c in cs {
                    signs.push(s);
                    cvals.push(c);
                    let hit = rec(q, cs, n, max_len, signs, cvals);
                    signs.pop();
                    cvals.pop();
                    if hit {
                        return true;
                    }
                }
            }
            false
        }
        !rec(q, cs, n, max_len, &mut signs, &mut cvals)
    }

    /// Tuple enumeration of positive words.
    pub fn brute_rtf(q: &RfQuery, n: usize) -> bool {
        let g = q.group;
        let cs = q.subgroup.members();
        let mut prods = vec![g.identity()];
        for _k in 1..n {
            let mut next = Vec::new();
            for &x in &prods {
                for &c in cs {
                    next.push(g.mul(g.mul(x, q.element), c));
                }
            }
            if next.contains(&g.identity()) {
                return false;
            }
            prods = next;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::catalog::{cyclic, dihedral, klein};
    use Length::Finite;

    #[test]
    fn rtf_examples() {
        let z4 = cyclic(4);
        let c = Subgroup::new(&z4, &[0, 2]).unwrap();
        let q = RfQuery::new(&z4, &c, 1).unwrap();
        assert!(q.is_n_rtf(Finite(2)).unwrap());
        assert!(!q.is_n_rtf(Finite(3)).unwrap());
        let z3 = cyclic(3);
        let t = Subgroup::trivial(&z3);
        let q = RfQuery::new(&z3, &t, 1).unwrap();
        assert!(q.is_n_rtf(Finite(3)).unwrap());
        assert!(!q.is_n_rtf(Finite(4)).unwrap());
        assert_eq!(
            RfQuery::new(&z4, &c, 2).unwrap_err(),
            RfError::ElementInSubgroup(2)
        );
    }

    #[test]
    fn rf_examples() {
        let z3 = cyclic(3);
        let t = Subgroup::trivial(&z3);
        let q = RfQuery::new(&z3, &t, 1).unwrap();
        assert!(q.is_n_rf(Finite(3)).unwrap());
        assert!(!q.is_n_rf(Finite(4)).unwrap());
        assert_eq!(q.max_rf(), 3);
        assert_eq!(
            q.is_n_rf(Length::Unbounded),
            Err(RfError::ForcedFinite { max_rf: 3 })
        );
        let z4 = cyclic(4);
        let c = Subgroup::new(&z4, &[0, 2]).unwrap();
        let q = RfQuery::new(&z4, &c, 1).unwrap();
        assert!(!q.is_n_rf(Finite(2)).unwrap());
        assert_eq!(q.max_rf(), 1);
        let z5 = cyclic(5);
        let t5 = Subgroup::trivial(&z5);
        assert_eq!(RfQuery::new(&z5, &t5, 1).unwrap().max_rf(), 5);
        let z2 = cyclic(2);
        let t2 = Subgroup::trivial(&z2);
        assert_eq!(RfQuery::new(&z2, &t2, 1).unwrap().max_rf(), 2);
    }

    #[test]
    fn malnormality() {
        let z4 = cyclic(4);
        assert!(is_malnormal(&Subgroup::trivial(&z4), &z4));
        assert!(!is_malnormal(&Subgroup::new(&z4, &[0, 2]).unwrap(), &z4));
        let s3 = dihedral(3);
        assert!(!is_malnormal(&Subgroup::new(&s3, &[0, 1, 2]).unwrap(), &s3));
        // a reflection subgroup of S3 is malnormal
        assert!(is_malnormal(&Subgroup::new(&s3, &[0, 3]).unwrap(), &s3));
    }

    #[test]
    fn two_rf_is_malnormal_condition() {
        for g in [dihedral(3), dihedral(4), klein(), cyclic(6)] {
            for members in g.subgroups() {
                let c = Subgroup::new(&g, &members).unwrap();
                for a in g.elements().filter(|&a| !c.contains(a)) {
                    let q = RfQuery::new(&g, &c, a).unwrap();
                    let direct = members.iter().all(|&x| {
                        x == g.identity() || !c.contains(g.conj(a, x))
                    });
                    assert_eq!(q.is_n_rf(Finite(2)).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn dp_matches_brute_force_small() {
        for g in [cyclic(4), dihedral(3), klein()] {
            for members in g.subgroups() {
                let c = Subgroup::new(&g, &members).unwrap();
                for a in g.elements().filter(|&a| !c.contains(a)) {
                    let q = RfQuery::new(&g, &c, a).unwrap();
                    for n in 2..=4 {
                        assert_eq!(q.is_n_rf(Finite(n)).unwrap(), brute_rf(&q, n));
                        assert_eq!(q.is_n_rtf(Finite(n)).unwrap(), brute_rtf(&q, n));
                    }
                    let m = q.max_rf();
                    // double coset invariance
                    for &c1 in c.members() {
                        for &c2 in c.members() {
                            let b = g.mul(g.mul(c1, a), c2);
                            assert_eq!(RfQuery::new(&g, &c, b).unwrap().max_rf(), m);
                        }
                    }
                }
            }
        }
    }
}
