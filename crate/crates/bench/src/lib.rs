//! Fixtures shared by the benchmarks.

use hnn_cert::catalog::cyclic;
use hnn_cert::rewrite::special_word_from_letters;
use hnn_cert::turns::TurnSystem;
use hnn_cert::Hnn;

/// Turn system of `(a t⁻¹ a t)^m · t` over ℤ/n with trivial edge group, `a` a generator.
pub fn cyclic_special(n: usize, m: usize) -> TurnSystem {
    let hnn = Hnn::with_trivial_edge(cyclic(n));
    let w = special_word_from_letters(&vec![1; m], &vec![1; m], 0, &hnn);
    TurnSystem::new(&w, &hnn).expect("special word has a turn system")
}
