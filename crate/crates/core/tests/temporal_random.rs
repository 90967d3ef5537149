use std::collections::HashMap;

use cqproof::fixtures::{random_temporal, TemporalFixture, TemporalParams};
use cqproof::graph::{tree_size, validate_proof, Sentence};
use cqproof::temporal::rules::{boxminus_interval, boxplus_interval, since_interval, until_interval};
use cqproof::temporal::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const SPAN: i64 = 8;

fn fixtures(seed: u64) -> Vec<TemporalFixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..200).map(|_| random_temporal(&mut rng, &TemporalParams::default())).collect()
}

/// Evaluates formulas on a window wide enough to be exact on `inner`.
struct Oracle<'a> {
    fx: &'a TemporalFixture,
    inner: Interval,
    cache: HashMap<Formula, Vec<Interval>>,
}

impl<'a> Oracle<'a> {
    fn new(fx: &'a TemporalFixture) -> Self {
        let r = fx.formula.temporal_reach();
        Oracle { fx, inner: Interval::finite(-SPAN - r - 1, SPAN + r + 1).unwrap(), cache: HashMap::new() }
    }

    fn truth(&mut self, f: &Formula) -> Vec<Interval> {
        if let Some(v) = self.cache.get(f) {
            return v.clone();
        }
        let pad = f.temporal_reach() + 1;
        let w = Interval::finite(self.inner.lo().unwrap() - pad, self.inner.hi().unwrap() + pad).unwrap();
        let v: Vec<Interval> = eval_formula(&self.fx.kb, &self.fx.tabox, f, &w)
            .unwrap()
            .iter()
            .filter_map(|iv| iv.intersect(&self.inner))
            .collect();
        self.cache.insert(f.clone(), v.clone());
        v
    }

    /// Every point of `af` inside the inner window is a certain answer.
    fn sound(&mut self, af: &AnnotatedFormula) -> bool {
        let truth = self.truth(&af.formula);
        af.interval.points_in(&self.inner).into_iter().all(|t| truth.iter().any(|iv| iv.contains(t)))
    }
}

#[test]
fn proofs_exist_for_every_certain_point_and_are_sound() {
    let mut proved = 0;
    let mut refuted = 0;
    for fx in fixtures(21) {
        let mut oracle = Oracle::new(&fx);
        let theory = TemporalTheory { kb: &fx.kb, tabox: &fx.tabox };
        let checker = TemporalChecker::new(&fx.kb).unwrap();
        let truth = oracle.truth(&fx.formula);
        for t in oracle.inner.points_in(&Interval::all()) {
            let target = Interval::point(t);
            let holds = truth.iter().any(|iv| iv.contains(t));
            let res = prove_formula(&fx.kb, &fx.tabox, &fx.formula, &target);
            if !holds {
                assert!(res.is_err(), "{} proved at {t} but not entailed", fx.formula);
                refuted += 1;
                continue;
            }
            proved += 1;
            let p = res.unwrap_or_else(|e| panic!("{} at {t}: {e}", fx.formula));
            let report = validate_proof(&p, &theory, &checker);
            assert!(report.is_valid(), "{} at {t}: {:?}", fx.formula, report.failures);
            assert!(p.proves(&Sentence::Annotated(AnnotatedFormula::new(fx.formula.clone(), target))));
            let (n, m) = tree_size_bound_parameters(&fx.kb, &fx.tabox, &fx.formula, &target).unwrap();
            assert!(tree_size(&p).unwrap() <= tree_size_bound(&fx.formula, n, m));
            for v in p.graph.vertices() {
                if let Sentence::Annotated(af) = p.graph.label(v) {
                    assert!(oracle.sound(af), "{af} is not entailed ({})", fx.formula);
                }
            }
        }
    }
    println!("{proved} points proved, {refuted} refuted");
    assert!(proved > 500 && refuted > 500);
}

fn random_range(rng: &mut StdRng) -> OpRange {
    let lo = rng.gen_range(0..=2);
    OpRange::new(lo, rng.gen_range(lo..=3)).unwrap()
}

#[test]
fn random_inferences_are_sound() {
    let mut rng = StdRng::seed_from_u64(5);
    for fx in fixtures(22) {
        let mut oracle = Oracle::new(&fx);
        let mut pool: Vec<AnnotatedFormula> =
            fx.tabox.facts.iter().map(|f| AnnotatedFormula::ground(vec![f.atom.clone()], f.interval)).collect();
        if let Ok(p) = prove_formula(&fx.kb, &fx.tabox, &fx.formula, &Interval::point(0)) {
            for v in p.graph.vertices() {
                if let Sentence::Annotated(af) = p.graph.label(v) {
                    pool.push(af.clone());
                }
            }
        }
        for _ in 0..60 {
            let a = pool.choose(&mut rng).unwrap().clone();
            let b = pool.choose(&mut rng).unwrap().clone();
            let r = random_range(&mut rng);
            let (rule, premises) = match rng.gen_range(0..12) {
                0 => (TemporalRule::Conj, vec![a, b]),
                1 => (TemporalRule::DisjLeft(b.formula), vec![a]),
                2 => (TemporalRule::DisjRight(b.formula), vec![a]),
                3 => {
                    let same: Vec<AnnotatedFormula> = pool.iter().filter(|x| x.formula == a.formula).cloned().collect();
                    (TemporalRule::Coal, same)
                }
                4 => {
                    let lo = a.interval.lo().unwrap_or(-20) + rng.gen_range(0..3);
                    let hi = a.interval.hi().unwrap_or(20) - rng.gen_range(0..3);
                    match Interval::finite(lo, hi) {
                        Ok(iv) => (TemporalRule::Sep(iv), vec![a]),
                        Err(_) => continue,
                    }
                }
                5 => (TemporalRule::BoxPlus(r), vec![a]),
                6 => (TemporalRule::BoxMinus(r), vec![a]),
                7 => (TemporalRule::Next, vec![a]),
                8 => (TemporalRule::Prev, vec![a]),
                9 => (TemporalRule::Until(r), vec![a, b]),
                10 => (TemporalRule::Since(r), vec![a, b]),
                _ => (TemporalRule::UntilNow(b.formula, r.hi_i64()), vec![a]),
            };
            if let Ok(out) = infer_temporal(&rule, &premises) {
                if out.formula.depth() > 4 {
                    continue;
                }
                assert!(oracle.sound(&out), "{} from {premises:?} is unsound", rule.name());
                pool.push(out);
            }
        }
    }
}

fn all_intervals() -> Vec<Interval> {
    let ends: Vec<Option<i64>> = std::iter::once(None).chain((-SPAN..=SPAN).map(Some)).collect();
    let mut out = Vec::new();
    for lo in &ends {
        for hi in &ends {
            if let Ok(iv) = Interval::new(*lo, *hi) {
                out.push(iv);
            }
        }
    }
    out
}

fn probe() -> std::ops::RangeInclusive<i64> {
    -15..=15
}

fn points(iv: Option<Interval>) -> Vec<i64> {
    probe().filter(|t| iv.is_some_and(|i| i.contains(*t))).collect()
}

fn expect(f: impl Fn(i64) -> bool) -> Vec<i64> {
    probe().filter(|t| f(*t)).collect()
}

#[test]
fn interval_arithmetic_matches_point_sets() {
    let ivs = all_intervals();
    let ranges: Vec<OpRange> = (0..=3).flat_map(|a| (a..=3).map(move |b| OpRange::new(a, b).unwrap())).collect();
    for a in &ivs {
        let at = |t: i64, iv: &Interval| iv.contains(t);
        assert_eq!(points(Some(a.shift(1))), expect(|t| at(t - 1, a)));
        assert_eq!(points(Some(a.shift(-1))), expect(|t| at(t + 1, a)));
        for r in &ranges {
            let ks = r.lo_i64()..=r.hi_i64();
            assert_eq!(points(Some(a.minus(*r))), expect(|t| ks.clone().any(|k| at(t + k, a))));
            assert_eq!(points(Some(a.plus(*r))), expect(|t| ks.clone().any(|k| at(t - k, a))));
            assert_eq!(points(boxplus_interval(a, *r)), expect(|t| ks.clone().all(|k| at(t + k, a))));
            assert_eq!(points(boxminus_interval(a, *r)), expect(|t| ks.clone().all(|k| at(t - k, a))));
        }
        for b in &ivs {
            assert_eq!(points(a.intersect(b)), expect(|t| a.contains(t) && b.contains(t)));
            assert_eq!(a.is_subset_of(b), probe().all(|t| !a.contains(t) || b.contains(t)));
            let union = expect(|t| a.contains(t) || b.contains(t));
            let contiguous = union.windows(2).all(|w| w[1] == w[0] + 1);
            match a.union_if_contiguous(b) {
                Some(u) => {
                    assert!(contiguous);
                    assert_eq!(points(Some(u)), union);
                }
                None => assert!(!contiguous),
            }
            for r in ranges.iter().filter(|r| r.lo > 0) {
                let ks = r.lo_i64()..=r.hi_i64();
                let until = expect(|t| {
                    a.contains(t) && ks.clone().any(|k| b.contains(t + k) && (0..k).all(|j| a.contains(t + j)))
                });
                let since = expect(|t| {
                    a.contains(t) && ks.clone().any(|k| b.contains(t - k) && (0..k).all(|j| a.contains(t - j)))
                });
                assert_eq!(points(until_interval(a, b, *r)), until, "{a} U{r} {b}");
                assert_eq!(points(since_interval(a, b, *r)), since, "{a} S{r} {b}");
            }
        }
    }
}

#[test]
fn next_form_preserves_answers() {
    for fx in fixtures(23) {
        let mut oracle = Oracle::new(&fx);
        let g = expand_next_form(&fx.formula);
        assert!(g.is_next_form());
        assert_eq!(oracle.truth(&fx.formula), oracle.truth(&g), "{}", fx.formula);
    }
}
