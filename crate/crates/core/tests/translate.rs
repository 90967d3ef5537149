use cqproof::deriver_cq::cq_schema_checker;
use cqproof::deriver_sk::sk_schema_checker;
use cqproof::graph::{size, validate_proof, Sentence};
use cqproof::search::*;
use cqproof::syntax::{parse_kb, parse_query};
use cqproof::translate::*;

fn example1() -> SearchGoal {
    let kb = parse_kb(include_str!("data/example1.kb")).unwrap();
    let (q, ans) = parse_query(include_str!("data/example1.q")).unwrap();
    SearchGoal::new(kb, q, ans, Deriver::Sk, Measure::TreeSize)
}

#[test]
fn example1_round_trip() {
    let g = example1();
    let goal = g.query.instantiate(&g.answer).unwrap();
    let sk = min_tree_size(&g).unwrap();
    let cq = sk_to_cq(&g.kb, &sk, &goal).unwrap();
    let r = validate_proof(&cq, &g.kb, &cq_schema_checker(&g.kb));
    assert!(r.is_valid(), "{:?}\n{:#?}", r.failures, cq.graph.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>());
    assert!(cq.is_tree());
    assert!(cq.proves(&Sentence::Cq(goal.clone())));
    assert!(size(&cq) <= sk_to_cq_bound(&g.kb, &sk));
    let back = cq_to_sk(&g.kb, &cq, &goal).unwrap();
    let r = validate_proof(&back, &g.kb, &sk_schema_checker(&g.kb, false).unwrap());
    assert!(r.is_valid(), "{:?}", r.failures);
    assert!(back.proves(&Sentence::Cq(goal)));
    assert!(size(&back) <= cq_to_sk_bound(&g.kb, &cq));
}
