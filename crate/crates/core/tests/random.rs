use cqproof::deriver_cq::cq_schema_checker;
use cqproof::deriver_sk::sk_schema_checker;
use cqproof::fixtures::{random_instance, Fixture, RandomParams};
use cqproof::graph::{size, tree_size, validate_proof, Proof, Sentence};
use cqproof::search::*;
use cqproof::translate::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const CAP: usize = 200_000;

fn instances(seed: u64, count: usize) -> Vec<Fixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, &RandomParams::default())).collect()
}

fn valid_sk(f: &Fixture, p: &Proof, prime: bool) {
    let r = validate_proof(p, &f.kb, &sk_schema_checker(&f.kb, prime).unwrap());
    assert!(r.is_valid(), "{:?}", r.failures);
}

#[test]
fn translations_round_trip() {
    for f in instances(7, 100) {
        let g = f.goal(Deriver::Sk, Measure::TreeSize);
        let goal = f.query.instantiate(&f.answer).unwrap();
        let sk = min_tree_size(&g).unwrap();
        valid_sk(&f, &sk, false);
        let cq = sk_to_cq(&f.kb, &sk, &goal).unwrap();
        let r = validate_proof(&cq, &f.kb, &cq_schema_checker(&f.kb));
        assert!(r.is_valid(), "{}\n{:?}", f.query, r.failures);
        if sk.is_tree() {
            assert!(cq.is_tree());
        }
        assert!(cq.proves(&Sentence::Cq(goal.clone())));
        assert!(size(&cq) <= sk_to_cq_bound(&f.kb, &sk));
        let back = cq_to_sk(&f.kb, &cq, &goal).unwrap();
        valid_sk(&f, &back, false);
        assert!(back.proves(&Sentence::Cq(goal)));
        assert!(size(&back) <= cq_to_sk_bound(&f.kb, &cq));
        if cq.is_tree() {
            assert!(back.is_tree());
        }
    }
}

#[test]
fn searches_agree_with_brute_force() {
    for f in instances(11, 100) {
        for d in [Deriver::Sk, Deriver::SkPrime] {
            let g = f.goal(d, Measure::TreeSize);
            let p = min_tree_size(&g).unwrap();
            valid_sk(&f, &p, d == Deriver::SkPrime);
            let bf = brute_force_min(&g, CAP).unwrap();
            assert_eq!(tree_size(&p).unwrap(), bf, "{} {:?}", f.query, d);
            if d == Deriver::Sk && is_tree_shaped(&f.query.instantiate(&f.answer).unwrap()) {
                let t = tree_shaped_min(&g).unwrap();
                valid_sk(&f, &t, false);
                assert_eq!(tree_size(&t).unwrap(), bf, "{}", f.query);
            }
            let g = f.goal(d, Measure::Size);
            let p = min_size(&g).unwrap();
            valid_sk(&f, &p, d == Deriver::SkPrime);
            assert_eq!(size(&p) as u128, brute_force_min(&g, CAP).unwrap(), "{} {:?}", f.query, d);
        }
    }
}
