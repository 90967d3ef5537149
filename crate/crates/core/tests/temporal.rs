use cqproof::graph::{tree_size, validate_proof, Proof, Sentence};
use cqproof::syntax::parse_document;
use cqproof::temporal::*;
use cqproof::{Atom, Cq, KnowledgeBase, Term};

struct Instance {
    kb: KnowledgeBase,
    tabox: TemporalAbox,
    mtcq: Mtcq,
    answers: Vec<String>,
}

fn instance(text: &str) -> Instance {
    let doc = parse_document(text).unwrap();
    Instance {
        kb: doc.kb(),
        tabox: doc.tabox(),
        mtcq: doc.query.clone().unwrap(),
        answers: doc.answers.clone().unwrap_or_default(),
    }
}

fn iv(a: i64, b: i64) -> Interval {
    Interval::finite(a, b).unwrap()
}

fn r(a: i64, b: i64) -> OpRange {
    OpRange::new(a, b).unwrap()
}

fn atom(p: &str, c: &str) -> Formula {
    Formula::Cq(Cq::boolean(vec![Atom::unary(p, Term::constant(c))]))
}

fn eval(i: &Instance, window: Interval) -> Vec<Interval> {
    eval_mtcq(&i.kb, &i.tabox, &i.mtcq, &i.answers, &window).unwrap()
}

fn prove(i: &Instance, target: Interval) -> Proof {
    let p = temporal_min_proof(&i.kb, &i.tabox, &i.mtcq, &i.answers, &target).unwrap();
    let theory = TemporalTheory { kb: &i.kb, tabox: &i.tabox };
    let report = validate_proof(&p, &theory, &TemporalChecker::new(&i.kb).unwrap());
    assert!(report.is_valid(), "{:?}", report.failures);
    let goal = AnnotatedFormula::new(i.mtcq.instantiate(&i.answers).unwrap(), target);
    assert!(p.proves(&Sentence::Annotated(goal)));
    let f = i.mtcq.instantiate(&i.answers).unwrap();
    let (n, t) = tree_size_bound_parameters(&i.kb, &i.tabox, &f, &target).unwrap();
    assert!(tree_size(&p).unwrap() <= tree_size_bound(&f, n, t));
    p
}

fn rules_used(p: &Proof) -> Vec<String> {
    p.graph
        .topo_order()
        .unwrap()
        .into_iter()
        .flat_map(|v| p.graph.incoming(v).into_iter().map(|e| e.rule.clone()))
        .collect()
}

#[test]
fn rulers_split_at_fact_endpoints() {
    let i = instance("A(a)@[0,5].\nq(x) :- A(x).\nanswers a.");
    assert_eq!(compute_rulers(&i.tabox, &iv(-2, 8)), vec![iv(-2, -1), iv(0, 5), iv(6, 8)]);
    assert_eq!(compute_rulers(&TemporalAbox::default(), &iv(-2, 8)), vec![iv(-2, 8)]);
    for t in -2..=8 {
        let rulers = compute_rulers(&i.tabox, &iv(-2, 8));
        let own = rulers.iter().find(|x| x.contains(t)).unwrap();
        for u in -2..=8 {
            assert_eq!(
                own.contains(u),
                i.tabox.snapshot(t) == i.tabox.snapshot(u) && rulers.iter().find(|x| x.contains(u)) == Some(own)
            );
        }
    }
}

#[test]
fn evaluation_examples() {
    let i = instance("A(a)@[0,5].\nq(x) :- BOXP[1,2] {A(x)}.\nanswers a.");
    assert_eq!(eval(&i, iv(-5, 10)), vec![iv(-1, 3)]);
    let i = instance("A(a)@[0,5].\nq(x) :- TOP.\nanswers a.");
    assert_eq!(eval(&i, iv(-5, 10)), vec![iv(-5, 10)]);
    let i = instance("A(a)@[0,5]. B(a)@[3,3].\nq(x) :- ({A(x)} UNTIL[1,2] {B(x)}).\nanswers a.");
    assert_eq!(eval(&i, iv(-5, 10)), vec![iv(1, 2)]);
    assert!(eval_mtcq(&i.kb, &i.tabox, &i.mtcq, &i.answers, &Interval::all()).is_err());
}

#[test]
fn inference_examples() {
    let a = AnnotatedFormula::new(atom("A", "a"), iv(0, 5));
    let out = infer_temporal(&TemporalRule::BoxPlus(r(1, 2)), std::slice::from_ref(&a)).unwrap();
    assert_eq!(out, AnnotatedFormula::new(Formula::box_plus(r(1, 2), atom("A", "a")), iv(-1, 3)));
    let c = infer_temporal(
        &TemporalRule::Coal,
        &[AnnotatedFormula::new(atom("A", "a"), iv(0, 3)), AnnotatedFormula::new(atom("A", "a"), iv(2, 5))],
    )
    .unwrap();
    assert_eq!(c.interval, iv(0, 5));
    let b = AnnotatedFormula::new(atom("B", "a"), iv(3, 3));
    let u = infer_temporal(&TemporalRule::Until(r(1, 2)), &[a.clone(), b.clone()]).unwrap();
    assert_eq!(u.interval, iv(1, 2));
    assert!(infer_temporal(&TemporalRule::Until(r(0, 2)), &[a.clone(), b]).is_err());
    assert!(infer_temporal(
        &TemporalRule::Coal,
        &[AnnotatedFormula::new(atom("A", "a"), iv(0, 1)), AnnotatedFormula::new(atom("A", "a"), iv(3, 4))]
    )
    .is_err());
    assert!(infer_temporal(&TemporalRule::Sep(iv(4, 6)), std::slice::from_ref(&a)).is_err());
    assert!(infer_temporal(&TemporalRule::BoxPlus(r(0, 9)), &[a]).is_err());
}

#[test]
fn lifted_rule_then_separation() {
    let i = instance("A sub B.\nA(a)@[0,5].\nq(x) :- B(x).\nanswers a.");
    let p = prove(&i, iv(1, 2));
    assert_eq!(rules_used(&p), vec!["TMP", "SEP"]);
}

#[test]
fn top_needs_no_proof() {
    let i = instance("A(a)@[0,5].\nq(x) :- TOP.\nanswers a.");
    let e = temporal_min_proof(&i.kb, &i.tabox, &i.mtcq, &i.answers, &iv(0, 1)).unwrap_err();
    assert_eq!(e, TemporalError::Trivial);
}

#[test]
fn coalescing_across_rulers() {
    let kb = include_str!("data/example1.kb").replace("B(b).", "B(b)@[0,3]. B(b)@[4,7].");
    let i = instance(&format!("{kb}\n{}", include_str!("data/example1.q").replace("cqproof/1", "")));
    assert_eq!(eval(&i, iv(-3, 10)), vec![iv(0, 7)]);
    let p = prove(&i, iv(0, 7));
    assert!(rules_used(&p).contains(&"COAL".to_string()));
}

#[test]
fn operators_resolved_per_interval() {
    let i = instance("A(a)@[0,5]. B(a)@[3,3]. B(a)@[6,6].\nq(x) :- ({A(x)} UNTIL[0,3] {B(x)}).\nanswers a.");
    assert_eq!(eval(&i, iv(-5, 12)), vec![iv(0, 6)]);
    let p = prove(&i, iv(0, 6));
    assert!(rules_used(&p).contains(&"COAL".to_string()));
    for t in 0..=6 {
        prove(&i, iv(t, t));
    }
    assert!(temporal_min_proof(&i.kb, &i.tabox, &i.mtcq, &i.answers, &iv(7, 7)).is_err());
}

#[test]
fn unbounded_targets_use_all_rulers() {
    let i = instance("A sub B.\nA(a)@[-inf,5]. B(a)@[6,inf].\nq(x) :- B(x).\nanswers a.");
    prove(&i, Interval::all());
    prove(&i, Interval::new(None, Some(2)).unwrap());
    let i = instance("A(a)@[-inf,5].\nq(x) :- BOXP[1,2] {A(x)}.\nanswers a.");
    prove(&i, Interval::new(None, Some(3)).unwrap());
}
