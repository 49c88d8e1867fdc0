//! Small groups built programmatically.

use crate::group::GroupTable;

fn from_fn(name: String, names: Vec<String>, f: impl Fn(usize, usize) -> usize) -> GroupTable {
    let n = names.len();
    let mult = (0..n).map(|a| (0..n).map(|b| f(a, b)).collect()).collect();
    GroupTable::new(name, names, mult).expect("catalog group is valid")
}

/// ℤ/n with elements `e, a, a2, ..`.
pub fn cyclic(n: usize) -> GroupTable {
    assert!(n >= 1);
    let names = (0..n)
        .map(|i| match i {
            0 => "e".to_string(),
            1 => "a".to_string(),
            _ => format!("a{i}"),
        })
        .collect();
    from_fn(format!("Z{n}"), names, |a, b| (a + b) % n)
}

/// Direct product; element (g, h) has index g·|H| + h.
pub fn product(g: &GroupTable, h: &GroupTable) -> GroupTable {
    let m = h.size();
    let names = g
        .elements()
        .flat_map(|a| h.elements().map(move |b| (a, b)))
        .map(|(a, b)| format!("({},{})", g.elem_name(a), h.elem_name(b)))
        .collect();
    from_fn(format!("{}x{}", g.name(), h.name()), names, |x, y| {
        g.mul(x / m, y / m) * m + h.mul(x % m, y % m)
    })
}

/// ℤ/2 × ℤ/2 with elements `e, x, y, xy`; index bit 0 is `x`, bit 1 is `y`.
pub fn klein() -> GroupTable {
    let names = ["e", "x", "y", "xy"].map(String::from).to_vec();
    from_fn("V4".into(), names, |a, b| a ^ b)
}

/// Dihedral group of order 2n: index r^i s^j ↦ i + n·j.
pub fn dihedral(n: usize) -> GroupTable {
    let names = (0..2 * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            match (i, j) {
                (0, 0) => "e".to_string(),
                (0, 1) => "s".to_string(),
                (_, 0) => format!("r{i}"),
                _ => format!("r{i}s"),
            }
        })
        .collect();
    from_fn(format!("D{}", 2 * n), names, |x, y| {
        let (i1, j1, i2, j2) = (x % n, x / n, y % n, y / n);
        // r^i1 s^j1 r^i2 s^j2 = r^(i1 ± i2) s^(j1+j2)
        let i = if j1 == 0 { (i1 + i2) % n } else { (i1 + n - i2) % n };
        i + n * ((j1 + j2) % 2)
    })
}

/// Quaternion group: ±1, ±i, ±j, ±k.
pub fn quaternion() -> GroupTable {
    // unit u ∈ {1,i,j,k} encoded 0..4, sign bit 4
    let unit_mul = |u: usize, v: usize| -> (usize, bool) {
        match (u, v) {
            (0, v) => (v, false),
            (u, 0) => (u, false),
            (u, v) if u == v => (0, true),
            (1, 2) => (3, false),
            (2, 3) => (1, false),
            (3, 1) => (2, false),
            (2, 1) => (3, true),
            (3, 2) => (1, true),
            (1, 3) => (2, true),
            _ => unreachable!(),
        }
    };
    let names = ["1", "i", "j", "k", "-1", "-i", "-j", "-k"]
        .map(String::from)
        .to_vec();
    from_fn("Q8".into(), names, |x, y| {
        let (u, v) = (x % 4, y % 4);
        let neg = (x >= 4) ^ (y >= 4);
        let (w, s) = unit_mul(u, v);
        w + if neg ^ s { 4 } else { 0 }
    })
}

/// Every group of order at most 8 up to isomorphism.
pub fn groups_up_to_8() -> Vec<GroupTable> {
    let mut v: Vec<GroupTable> = (1..=8).map(cyclic).collect();
    v.push(klein());
    v.push(dihedral(3));
    v.push(product(&cyclic(2), &cyclic(4)));
    v.push(product(&product(&cyclic(2), &cyclic(2)), &cyclic(2)));
    v.push(dihedral(4));
    v.push(quaternion());
    v
}
