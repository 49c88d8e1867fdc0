//! Finite groups given by multiplication tables, and the edge-group pair of an HNN extension.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Index of an element in a [`GroupTable`].
pub type Elem = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("malformed group document: {0}")]
    Malformed(String),
    #[error("duplicate element name {name:?} at indices {first} and {second}")]
    DuplicateName {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("no two-sided identity element")]
    MissingIdentity,
    #[error("multiplication not associative on ({0}, {1}, {2})")]
    NonAssociative(Elem, Elem, Elem),
    #[error("element {0} has no two-sided inverse")]
    MissingInverse(Elem),
    #[error("edge map {map} is not injective: {c1} and {c2} have the same image")]
    NotInjective { map: Side, c1: usize, c2: usize },
    #[error("image of i_P is not closed under multiplication at ({c1}, {c2})")]
    ImageNotSubgroup { c1: usize, c2: usize },
    #[error("edge map {map} is not a homomorphism at ({c1}, {c2})")]
    NotHomomorphism { map: Side, c1: usize, c2: usize },
}

/// Finite group as a Cayley table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    name: String,
    elem_names: Vec<String>,
    mult: Vec<Vec<Elem>>,
    identity: Elem,
    inverse: Vec<Elem>,
}

impl GroupTable {
    /// Validates the table and derives identity and inverses.
    pub fn new(
        name: impl Into<String>,
        elem_names: Vec<String>,
        mult: Vec<Vec<Elem>>,
    ) -> Result<Self, GroupError> {
        let n = elem_names.len();
        if n == 0 {
            return Err(GroupError::Malformed("empty element list".into()));
        }
        if mult.len() != n || mult.iter().any(|r| r.len() != n) {
            return Err(GroupError::Malformed(format!("table must be {n}x{n}")));
        }
        if let Some(bad) = mult.iter().flatten().find(|&&x| x >= n) {
            return Err(GroupError::Malformed(format!("entry {bad} out of range")));
        }
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (i, s) in elem_names.iter().enumerate() {
            if let Some(&first) = seen.get(s.as_str()) {
                return Err(GroupError::DuplicateName {
                    name: s.clone(),
                    first,
                    second: i,
                });
            }
            seen.insert(s, i);
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mult[e][x] == x && mult[x][e] == x))
            .ok_or(GroupError::MissingIdentity)?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mult[mult[a][b]][c] != mult[a][mult[b][c]] {
                        return Err(GroupError::NonAssociative(a, b, c));
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(n);
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| mult[a][b] == identity && mult[b][a] == identity)
                .ok_or(GroupError::MissingInverse(a))?;
            inverse.push(inv);
        }
        Ok(GroupTable {
            name: name.into(),
            elem_names,
            mult,
            identity,
            inverse,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.elem_names.len()
    }

    pub fn identity(&self) -> Elem {
        self.identity
    }

    pub fn is_identity(&self, a: Elem) -> bool {
        a == self.identity
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mult[a][b]
    }

    pub fn inv(&self, a: Elem) -> Elem {
        self.inverse[a]
    }

    /// Product of a sequence, left to right.
    pub fn product<I: IntoIterator<Item = Elem>>(&self, it: I) -> Elem {
        it.into_iter().fold(self.identity, |acc, x| self.mul(acc, x))
    }

    pub fn pow(&self, a: Elem, k: i64) -> Elem {
        let base = if k < 0 { self.inv(a) } else { a };
        (0..k.unsigned_abs()).fold(self.identity, |acc, _| self.mul(acc, base))
    }

    pub fn conj(&self, g: Elem, a: Elem) -> Elem {
        self.mul(self.mul(g, a), self.inv(g))
    }

    pub fn elem_name(&self, a: Elem) -> &str {
        &self.elem_names[a]
    }

    pub fn elem_names(&self) -> &[String] {
        &self.elem_names
    }

    pub fn index_of(&self, name: &str) -> Option<Elem> {
        self.elem_names.iter().position(|s| s == name)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.size()
    }

    pub fn table(&self) -> &[Vec<Elem>] {
        &self.mult
    }

    /// True if `set` (as a membership mask) is a subgroup.
    pub fn is_subgroup(&self, mask: &[bool]) -> bool {
        if !mask[self.identity] {
            return false;
        }
        let members: Vec<Elem> = self.elements().filter(|&x| mask[x]).collect();
        members
            .iter()
            .all(|&a| members.iter().all(|&b| mask[self.mul(a, self.inv(b))]))
    }

    /// Subgroup generated by `gens`, as a membership mask.
    pub fn generated(&self, gens: &[Elem]) -> Vec<bool> {
        let mut mask = vec![false; self.size()];
        mask[self.identity] = true;
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !mask[y] {
                    mask[y] = true;
                    stack.push(y);
                }
            }
        }
        mask
    }

    /// All subgroups as sorted element lists, found by closing over generating sets.
    pub fn subgroups(&self) -> Vec<Vec<Elem>> {
        let mut found: Vec<Vec<bool>> = vec![self.generated(&[])];
        let mut frontier = found.clone();
        while let Some(h) = frontier.pop() {
            for g in self.elements().filter(|&g| !h[g]) {
                let mut gens: Vec<Elem> = self.elements().filter(|&x| h[x]).collect();
                gens.push(g);
                let k = self.generated(&gens);
                if !found.contains(&k) {
                    found.push(k.clone());
                    frontier.push(k);
                }
            }
        }
        let mut out: Vec<Vec<Elem>> = found
            .into_iter()
            .map(|m| self.elements().filter(|&x| m[x]).collect())
            .collect();
        out.sort_by(|a: &Vec<Elem>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out
    }
}

impl fmt::Display for GroupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.name, self.size())
    }
}

/// Least k ≥ 1 with g^k = id.
pub fn element_order(g: Elem, group: &GroupTable) -> usize {
    let mut x = g;
    let mut k = 1;
    while x != group.identity() {
        x = group.mul(x, g);
        k += 1;
    }
    k
}

/// Side of the edge space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    P,
    N,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::P => Side::N,
            Side::N => Side::P,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::P => "P",
            Side::N => "N",
        })
    }
}

/// Index of an element of the edge group C.
pub type CElem = usize;

/// The edge group C with its two injections into A.
///
/// C carries no table of its own: its multiplication is pulled back along `i_P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePair {
    ip: Vec<Elem>,
    in_: Vec<Elem>,
    c_mult: Vec<Vec<CElem>>,
    c_inv: Vec<CElem>,
    c_identity: CElem,
    p_pre: Vec<Option<CElem>>,
    n_pre: Vec<Option<CElem>>,
}

impl EdgePair {
    pub fn new(group: &GroupTable, ip: Vec<Elem>, in_: Vec<Elem>) -> Result<Self, GroupError> {
        let k = ip.len();
        if k == 0 || in_.len() != k {
            return Err(GroupError::Malformed(
                "iP and iN must be nonempty and of equal length".into(),
            ));
        }
        let n = group.size();
        if ip.iter().chain(&in_).any(|&x| x >= n) {
            return Err(GroupError::Malformed("edge image out of range".into()));
        }
        let mut p_pre = vec![None; n];
        let mut n_pre = vec![None; n];
        for (side, map, pre) in [(Side::P, &ip, &mut p_pre), (Side::N, &in_, &mut n_pre)] {
            for (c, &a) in map.iter().enumerate() {
                if let Some(c1) = pre[a] {
                    return Err(GroupError::NotInjective { map: side, c1, c2: c });
                }
                pre[a] = Some(c);
            }
        }
        let mut c_mult = vec![vec![0; k]; k];
        for c1 in 0..k {
            for c2 in 0..k {
                c_mult[c1][c2] = p_pre[group.mul(ip[c1], ip[c2])]
                    .ok_or(GroupError::ImageNotSubgroup { c1, c2 })?;
            }
        }
        for c1 in 0..k {
            for c2 in 0..k {
                if in_[c_mult[c1][c2]] != group.mul(in_[c1], in_[c2]) {
                    return Err(GroupError::NotHomomorphism {
                        map: Side::N,
                        c1,
                        c2,
                    });
                }
            }
        }
        // a finite nonempty subset closed under products is a subgroup
        let c_identity = p_pre[group.identity()].ok_or(GroupError::ImageNotSubgroup { c1: 0, c2: 0 })?;
        let c_inv = (0..k)
            .map(|c| p_pre[group.inv(ip[c])].expect("image closed under inverse"))
            .collect();
        Ok(EdgePair {
            ip,
            in_,
            c_mult,
            c_inv,
            c_identity,
            p_pre,
            n_pre,
        })
    }

    /// Trivial C.
    pub fn trivial(group: &GroupTable) -> Self {
        Self::new(group, vec![group.identity()], vec![group.identity()]).expect("trivial edge")
    }

    pub fn c_size(&self) -> usize {
        self.ip.len()
    }

    pub fn c_identity(&self) -> CElem {
        self.c_identity
    }

    pub fn c_mul(&self, a: CElem, b: CElem) -> CElem {
        self.c_mult[a][b]
    }

    pub fn c_inv(&self, c: CElem) -> CElem {
        self.c_inv[c]
    }

    pub fn c_elements(&self) -> impl Iterator<Item = CElem> {
        0..self.c_size()
    }

    pub fn embed(&self, side: Side, c: CElem) -> Elem {
        match side {
            Side::P => self.ip[c],
            Side::N => self.in_[c],
        }
    }

    pub fn preimage(&self, side: Side, a: Elem) -> Option<CElem> {
        match side {
            Side::P => self.p_pre[a],
            Side::N => self.n_pre[a],
        }
    }

    pub fn in_image(&self, side: Side, a: Elem) -> bool {
        self.preimage(side, a).is_some()
    }

    /// Membership mask of the image on `side`.
    pub fn image_mask(&self, side: Side) -> Vec<bool> {
        let pre = match side {
            Side::P => &self.p_pre,
            Side::N => &self.n_pre,
        };
        pre.iter().map(Option::is_some).collect()
    }

    pub fn image(&self, side: Side) -> Vec<Elem> {
        let mut v: Vec<Elem> = self.c_elements().map(|c| self.embed(side, c)).collect();
        v.sort_unstable();
        v
    }
}

/// Vertex group together with its edge pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hnn {
    pub vertex: GroupTable,
    pub edge: EdgePair,
}

impl Hnn {
    pub fn new(vertex: GroupTable, edge: EdgePair) -> Self {
        Hnn { vertex, edge }
    }

    pub fn with_trivial_edge(vertex: GroupTable) -> Self {
        let edge = EdgePair::trivial(&vertex);
        Hnn { vertex, edge }
    }

    pub fn a(&self) -> &GroupTable {
        &self.vertex
    }

    pub fn e(&self) -> &EdgePair {
        &self.edge
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupDoc {
    name: String,
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    #[serde(default)]
    edge: Option<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeDoc {
    domain_size: usize,
    #[serde(rename = "iP")]
    ip: Vec<usize>,
    #[serde(rename = "iN")]
    in_: Vec<usize>,
}

fn parse_doc(document: &str) -> Result<GroupDoc, GroupError> {
    serde_json::from_str(document).map_err(|e| GroupError::Malformed(e.to_string()))
}

/// Parses and validates the group JSON document, ignoring any edge data.
pub fn load_group(document: &str) -> Result<GroupTable, GroupError> {
    let doc = parse_doc(document)?;
    GroupTable::new(doc.name, doc.elements, doc.table)
}

/// Parses the group JSON document including the edge pair; a missing edge means C is trivial.
pub fn load_hnn(document: &str) -> Result<Hnn, GroupError> {
    let doc = parse_doc(document)?;
    let group = GroupTable::new(doc.name, doc.elements, doc.table)?;
    let edge = match doc.edge {
        None => EdgePair::trivial(&group),
        Some(e) => {
            if e.ip.len() != e.domain_size || e.in_.len() != e.domain_size {
                return Err(GroupError::Malformed(
                    "iP and iN must have domain_size entries".into(),
                ));
            }
            EdgePair::new(&group, e.ip, e.in_)?
        }
    };
    Ok(Hnn::new(group, edge))
}

/// Serializes back to the group JSON document.
pub fn to_document(hnn: &Hnn) -> String {
    let g = &hnn.vertex;
    let doc = GroupDoc {
        name: g.name().to_string(),
        elements: g.elem_names().to_vec(),
        table: g.table().to_vec(),
        edge: Some(EdgeDoc {
            domain_size: hnn.edge.c_size(),
            ip: hnn.edge.ip.clone(),
            in_: hnn.edge.in_.clone(),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}
