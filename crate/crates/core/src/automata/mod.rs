//! Automata over label traces and their product with an abstraction.

pub mod dfa;
pub mod product;

pub use dfa::{bounded_safety_spec, bundled, Dfa, DfaSpec, EdgeLabel, EdgeSpec};
pub use product::ProductUmdp;
