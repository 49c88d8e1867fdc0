//! Certified lower bounds on the complexity of admissible surfaces for words in HNN
//! extensions of finite groups.

pub mod amalgam;
pub mod catalog;
pub mod enumerate;
pub mod certify;
pub mod group;
pub mod linalg;
pub mod lp;
pub mod rational;
pub mod rewrite;
pub mod rf;
pub mod surface;
pub mod turns;
pub mod word;

pub use group::{element_order, load_group, load_hnn, EdgePair, Elem, GroupError, GroupTable, Hnn, Side};
pub use rational::Q;
pub use word::{
    britton_reduce, cyclic_reduce, exponent_sum, parse_word, CyclicReduction, HnnWord, Sign,
    Syllable, WordError,
};
