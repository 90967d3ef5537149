//! Shared helpers for the benchmarks.

use cqproof::deriver_sk::ChaseConfig;
use cqproof::search::{Deriver, Measure, SearchGoal};
use cqproof::syntax::{parse_kb, parse_query};

/// Path query of length `n` over a dense three-constant ABox plus an
/// existential role chain.
pub fn path_goal(n: usize) -> SearchGoal {
    let consts = ["a", "b", "c"];
    let abox: String = consts.iter().flat_map(|x| consts.map(|y| format!("R({x},{y}).\n"))).collect();
    let kb = parse_kb(&format!("A sub exists R.\nexists R- sub A.\nA(a).\n{abox}")).expect("valid KB");
    let atoms: Vec<String> = (0..n).map(|i| format!("R(x{i},x{})", i + 1)).collect();
    let (q, ans) = parse_query(&format!("q(x0) :- {}.\nanswers a.", atoms.join(", "))).expect("valid query");
    let g = SearchGoal::new(kb, q, ans, Deriver::Sk, Measure::TreeSize);
    let cfg = ChaseConfig { depth_bound: n + 1, ..g.chase_config() };
    g.with_chase(cfg)
}

/// The shipped example instance.
pub fn example1_goal() -> SearchGoal {
    let kb = parse_kb(include_str!("../../core/tests/data/example1.kb")).expect("valid KB");
    let (q, ans) = parse_query(include_str!("../../core/tests/data/example1.q")).expect("valid query");
    SearchGoal::new(kb, q, ans, Deriver::Sk, Measure::TreeSize)
}
