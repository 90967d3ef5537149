//! Explanation proofs for certain answers to conjunctive queries over
//! DL-Lite_R knowledge bases and their metric temporal extension.

pub mod canon;
pub mod deriver_cq;
pub mod deriver_sk;
pub mod export;
pub mod fixtures;
pub mod graph;
pub mod logic;
pub mod search;
pub mod syntax;
pub mod temporal;
pub mod translate;

pub use canon::{canonicalize_cq, cq_equiv, match_atom, match_atoms, match_atoms_from};
pub use logic::*;
