use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cqproof::deriver_cq::cq_schema_checker;
use cqproof::deriver_sk::sk_schema_checker;
use cqproof::fixtures::*;
use cqproof::graph::{depth, size, tree_size, unravel, validate_proof, Proof, Sentence};
use cqproof::search::*;
use cqproof::syntax::{parse_kb, parse_query};
use cqproof::temporal::rules::{boxminus_interval, boxplus_interval, since_interval, until_interval};
use cqproof::temporal::*;
use cqproof::translate::*;
use cqproof::KnowledgeBase;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:.2?}, limit {limit:.0?}");
    Ok(took)
}

fn instances(seed: u64, count: usize) -> Vec<Fixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, &RandomParams::default())).collect()
}

fn sk_valid(kb: &KnowledgeBase, p: &Proof, prime: bool) -> Result<(), String> {
    let r = validate_proof(p, kb, &sk_schema_checker(kb, prime).map_err(|e| e.to_string())?);
    ensure!(r.is_valid(), "invalid proof: {:?}", r.failures);
    Ok(())
}

/// Replaces every Skolem function name `fn_<i>_<v>` by the name `names` assigns to it.
fn rename_skolems(s: &str, names: &HashMap<String, char>) -> String {
    let mut out = s.to_string();
    let mut keys: Vec<&String> = names.keys().collect();
    keys.sort_by_key(|k| std::cmp::Reverse(k.len()));
    for k in keys {
        out = out.replace(k.as_str(), &names[k].to_string());
    }
    out
}

fn skolem_names(atoms: &BTreeSet<String>) -> Vec<String> {
    let mut names = BTreeSet::new();
    for a in atoms {
        for (i, _) in a.match_indices("fn_") {
            let end = a[i..].find('(').map_or(a.len(), |j| i + j);
            names.insert(a[i..end].to_string());
        }
    }
    names.into_iter().collect()
}

fn example1_atoms_match(derived: &BTreeSet<String>) -> bool {
    let expected: BTreeSet<String> =
        ["P(b,f(b))", "S(f(b),g(f(b)))", "R(f(b),b)", "T(b,h(b))"].iter().map(|s| s.to_string()).collect();
    let names = skolem_names(derived);
    if names.len() != 3 {
        return false;
    }
    let mut targets = vec!['f', 'g', 'h'];
    permute(&mut targets, 0, &mut |perm| {
        let map: HashMap<String, char> = names.iter().cloned().zip(perm.iter().copied()).collect();
        derived.iter().map(|a| rename_skolems(a, &map)).collect::<BTreeSet<_>>() == expected
    })
}

fn permute(xs: &mut Vec<char>, k: usize, f: &mut dyn FnMut(&[char]) -> bool) -> bool {
    if k == xs.len() {
        return f(xs);
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        if permute(xs, k + 1, f) {
            return true;
        }
        xs.swap(k, i);
    }
    false
}

fn example1_goal() -> SearchGoal {
    let kb = parse_kb(include_str!("data/example1.kb")).unwrap();
    let (q, ans) = parse_query(include_str!("data/example1.q")).unwrap();
    SearchGoal::new(kb, q, ans, Deriver::Sk, Measure::TreeSize)
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let g = example1_goal();
    let p = min_proof(&g).map_err(|e| e.to_string())?;
    let took = within(start, Duration::from_secs(1))?;
    sk_valid(&g.kb, &p, false)?;
    let goal = Sentence::Cq(g.query.instantiate(&g.answer).unwrap());
    ensure!(p.proves(&goal), "proof does not conclude the query");
    let derived: BTreeSet<String> = p
        .graph
        .vertices()
        .filter(|v| !p.graph.incoming(*v).is_empty())
        .filter_map(|v| p.graph.label(v).as_ground_atom().map(|a| a.to_string()))
        .collect();
    ensure!(example1_atoms_match(&derived), "derived atoms {derived:?}");
    let (s, t) = (size(&p), tree_size(&p).unwrap());
    ensure!((s, t) == (11, 39), "size {s}, tree size {t}");
    let bf = brute_force_min(&g, 100_000).map_err(|e| e.to_string())?;
    ensure!(bf == 39, "brute force minimum {bf}");
    Ok(format!("size 11, tree size 39, search {took:.2?}"))
}

fn criterion2() -> Outcome {
    let start = Instant::now();
    let mut trees = 0;
    for f in instances(7, 100) {
        let goal = f.query.instantiate(&f.answer).unwrap();
        let target = Sentence::Cq(goal.clone());
        let sk = min_tree_size(&f.goal(Deriver::Sk, Measure::TreeSize)).map_err(|e| e.to_string())?;
        sk_valid(&f.kb, &sk, false)?;
        let cq = sk_to_cq(&f.kb, &sk, &goal).map_err(|e| e.to_string())?;
        let r = validate_proof(&cq, &f.kb, &cq_schema_checker(&f.kb));
        ensure!(r.is_valid(), "sk_to_cq invalid for {}: {:?}", f.query, r.failures);
        ensure!(cq.proves(&target), "sk_to_cq changed the conclusion for {}", f.query);
        ensure!(size(&cq) <= sk_to_cq_bound(&f.kb, &sk), "sk_to_cq exceeds its size bound");
        if sk.is_tree() {
            ensure!(cq.is_tree(), "sk_to_cq lost tree shape for {}", f.query);
            trees += 1;
        }
        let back = cq_to_sk(&f.kb, &cq, &goal).map_err(|e| e.to_string())?;
        sk_valid(&f.kb, &back, false)?;
        ensure!(back.proves(&target), "cq_to_sk changed the conclusion for {}", f.query);
        ensure!(size(&back) <= cq_to_sk_bound(&f.kb, &cq), "cq_to_sk exceeds its size bound");
        if cq.is_tree() {
            ensure!(back.is_tree(), "cq_to_sk lost tree shape for {}", f.query);
        }
    }
    let took = within(start, Duration::from_secs(30))?;
    Ok(format!("100 instances ({trees} tree proofs), {took:.2?}"))
}

fn criterion3() -> Outcome {
    const CAP: usize = 200_000;
    let mut corpus = instances(11, 100);
    let e1 = example1_goal();
    corpus.push(Fixture {
        kind: FixtureKind::Random,
        chase: e1.chase,
        kb: e1.kb.clone(),
        query: e1.query.clone(),
        answer: e1.answer.clone(),
        bound: None,
        expected: None,
    });
    let mut tree_shaped = 0;
    let mut compared = 0;
    for f in corpus.iter().filter(|f| f.query.atoms.len() <= 6) {
        compared += 1;
        for d in [Deriver::Sk, Deriver::SkPrime] {
            let g = f.goal(d, Measure::TreeSize);
            let p = min_tree_size(&g).map_err(|e| e.to_string())?;
            sk_valid(&f.kb, &p, d == Deriver::SkPrime)?;
            let bf = brute_force_min(&g, CAP).map_err(|e| e.to_string())?;
            ensure!(tree_size(&p).unwrap() == bf, "min_tree_size {} vs {bf} on {}", tree_size(&p).unwrap(), f.query);
            if d == Deriver::Sk && is_tree_shaped(&f.query.instantiate(&f.answer).unwrap()) {
                tree_shaped += 1;
                let t = tree_shaped_min(&g).map_err(|e| e.to_string())?;
                sk_valid(&f.kb, &t, false)?;
                ensure!(tree_size(&t).unwrap() == bf, "tree_shaped_min disagrees on {}", f.query);
            }
            let g = f.goal(d, Measure::Size);
            let p = min_size(&g).map_err(|e| e.to_string())?;
            sk_valid(&f.kb, &p, d == Deriver::SkPrime)?;
            let bf = brute_force_min(&g, CAP).map_err(|e| e.to_string())?;
            ensure!(size(&p) as u128 == bf, "min_size {} vs {bf} on {}", size(&p), f.query);
        }
    }
    Ok(format!("{compared} instances, {tree_shaped} tree-shaped"))
}

fn criterion4() -> Outcome {
    let (q, ans) = parse_query("q(x) :- A(x).\nanswers a.").unwrap();
    let base = KnowledgeBase::new(vec![], vec![]).unwrap();
    for n in 1..=6 {
        let f = gen_chain(&base, &q, &ans, n).map_err(|e| e.to_string())?;
        for m in [Measure::Size, Measure::TreeSize] {
            let g = f.goal(Deriver::Sk, m);
            ensure!(!decide_op(&g).map_err(|e| e.to_string())?, "n={n}: decide at the gadget bound is true");
            let best = brute_force_min(&g, 100_000).map_err(|e| e.to_string())?;
            ensure!(decide_op(&g.clone().with_bound(best)).unwrap(), "n={n}: decide at the minimum is false");
            let d = depth(&min_proof(&g).unwrap()).unwrap();
            ensure!(d == n + 1, "n={n}: depth {d}");
        }
    }
    Ok("n = 1..6".into())
}

fn criterion5() -> Outcome {
    let start = Instant::now();
    let cnfs = all_cnfs(3, 4, true);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = cnfs.len().div_ceil(workers);
    let failures: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = cnfs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut bad = Vec::new();
                    for (n, cnf) in part {
                        let sat = satisfiable(*n, cnf);
                        let f = gen_sat(*n, cnf).unwrap();
                        for (d, m) in [(Deriver::SkPrime, Measure::TreeSize), (Deriver::Sk, Measure::Size)] {
                            if decide_op(&f.goal(d, m)).ok() != Some(sat) {
                                bad.push(format!("{cnf:?} under {d:?}/{m:?}"));
                            }
                        }
                    }
                    bad
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    ensure!(failures.is_empty(), "{} mismatches, first {}", failures.len(), failures[0]);
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!("{} formulas up to symmetry, {took:.2?}", cnfs.len()))
}

fn temporal_fixtures(seed: u64) -> Vec<TemporalFixture> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..200).map(|_| random_temporal(&mut rng, &TemporalParams::default())).collect()
}

const SPAN: i64 = 8;

struct PointTruth<'a> {
    fx: &'a TemporalFixture,
    inner: Interval,
    cache: HashMap<Formula, Vec<Interval>>,
}

impl<'a> PointTruth<'a> {
    fn new(fx: &'a TemporalFixture) -> Self {
        let r = fx.formula.temporal_reach();
        PointTruth { fx, inner: Interval::finite(-SPAN - r - 1, SPAN + r + 1).unwrap(), cache: HashMap::new() }
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

    fn sound(&mut self, af: &AnnotatedFormula) -> bool {
        let truth = self.truth(&af.formula);
        af.interval.points_in(&self.inner).into_iter().all(|t| truth.iter().any(|iv| iv.contains(t)))
    }
}

fn temporal_proofs() -> Result<(usize, usize), String> {
    let (mut proved, mut refuted) = (0, 0);
    for fx in temporal_fixtures(21) {
        let mut oracle = PointTruth::new(&fx);
        let theory = TemporalTheory { kb: &fx.kb, tabox: &fx.tabox };
        let checker = TemporalChecker::new(&fx.kb).map_err(|e| e.to_string())?;
        let truth = oracle.truth(&fx.formula);
        for t in oracle.inner.points_in(&Interval::all()) {
            let target = Interval::point(t);
            let holds = truth.iter().any(|iv| iv.contains(t));
            let res = prove_formula(&fx.kb, &fx.tabox, &fx.formula, &target);
            if !holds {
                ensure!(res.is_err(), "{} proved at {t} but not entailed", fx.formula);
                refuted += 1;
                continue;
            }
            let p = res.map_err(|e| format!("{} at {t}: {e}", fx.formula))?;
            let report = validate_proof(&p, &theory, &checker);
            ensure!(report.is_valid(), "{} at {t}: {:?}", fx.formula, report.failures);
            ensure!(
                p.proves(&Sentence::Annotated(AnnotatedFormula::new(fx.formula.clone(), target))),
                "wrong conclusion"
            );
            for v in p.graph.vertices() {
                if let Sentence::Annotated(af) = p.graph.label(v) {
                    ensure!(oracle.sound(af), "{af} is not entailed ({})", fx.formula);
                }
            }
            proved += 1;
        }
    }
    Ok((proved, refuted))
}

fn random_inferences() -> Result<usize, String> {
    let mut rng = StdRng::seed_from_u64(5);
    let mut checked = 0;
    for fx in temporal_fixtures(22) {
        let mut oracle = PointTruth::new(&fx);
        let mut pool: Vec<AnnotatedFormula> =
            fx.tabox.facts.iter().map(|f| AnnotatedFormula::ground(vec![f.atom.clone()], f.interval)).collect();
        if let Ok(p) = prove_formula(&fx.kb, &fx.tabox, &fx.formula, &Interval::point(0)) {
            pool.extend(p.graph.vertices().filter_map(|v| match p.graph.label(v) {
                Sentence::Annotated(af) => Some(af.clone()),
                _ => None,
            }));
        }
        for _ in 0..60 {
            let a = pool.choose(&mut rng).unwrap().clone();
            let b = pool.choose(&mut rng).unwrap().clone();
            let lo = rng.gen_range(0..=2);
            let r = OpRange::new(lo, rng.gen_range(lo..=3)).unwrap();
            let (rule, premises) = match rng.gen_range(0..11) {
                0 => (TemporalRule::Conj, vec![a, b]),
                1 => (TemporalRule::DisjLeft(b.formula), vec![a]),
                2 => (TemporalRule::DisjRight(b.formula), vec![a]),
                3 => {
                    let same = pool.iter().filter(|x| x.formula == a.formula).cloned().collect();
                    (TemporalRule::Coal, same)
                }
                4 => (TemporalRule::BoxPlus(r), vec![a]),
                5 => (TemporalRule::BoxMinus(r), vec![a]),
                6 => (TemporalRule::Next, vec![a]),
                7 => (TemporalRule::Prev, vec![a]),
                8 => (TemporalRule::Until(r), vec![a, b]),
                9 => (TemporalRule::Since(r), vec![a, b]),
                _ => (TemporalRule::UntilNow(b.formula, r.hi_i64()), vec![a]),
            };
            if let Ok(out) = infer_temporal(&rule, &premises) {
                if out.formula.depth() > 4 {
                    continue;
                }
                ensure!(oracle.sound(&out), "{} from {premises:?} is unsound", rule.name());
                checked += 1;
                pool.push(out);
            }
        }
    }
    Ok(checked)
}

fn interval_arithmetic() -> Result<usize, String> {
    let ends: Vec<Option<i64>> = std::iter::once(None).chain((-SPAN..=SPAN).map(Some)).collect();
    let ivs: Vec<Interval> =
        ends.iter().flat_map(|lo| ends.iter().filter_map(move |hi| Interval::new(*lo, *hi).ok())).collect();
    let ranges: Vec<OpRange> = (0..=3).flat_map(|a| (a..=3).map(move |b| OpRange::new(a, b).unwrap())).collect();
    let probe = || -15i64..=15;
    let points =
        |iv: Option<Interval>| -> Vec<i64> { probe().filter(|t| iv.is_some_and(|i| i.contains(*t))).collect() };
    let expect = |f: &dyn Fn(i64) -> bool| -> Vec<i64> { probe().filter(|t| f(*t)).collect() };
    let mut checks = 0;
    for a in &ivs {
        for r in &ranges {
            let ks = r.lo_i64()..=r.hi_i64();
            ensure!(
                points(boxplus_interval(a, *r)) == expect(&|t| ks.clone().all(|k| a.contains(t + k))),
                "BOXP {a} {r}"
            );
            ensure!(
                points(boxminus_interval(a, *r)) == expect(&|t| ks.clone().all(|k| a.contains(t - k))),
                "BOXM {a} {r}"
            );
            checks += 2;
        }
        for b in &ivs {
            ensure!(points(a.intersect(b)) == expect(&|t| a.contains(t) && b.contains(t)), "{a} meet {b}");
            checks += 1;
            for r in ranges.iter().filter(|r| r.lo > 0) {
                let ks = r.lo_i64()..=r.hi_i64();
                let until = expect(&|t| {
                    a.contains(t) && ks.clone().any(|k| b.contains(t + k) && (0..k).all(|j| a.contains(t + j)))
                });
                let since = expect(&|t| {
                    a.contains(t) && ks.clone().any(|k| b.contains(t - k) && (0..k).all(|j| a.contains(t - j)))
                });
                ensure!(points(until_interval(a, b, *r)) == until, "{a} U{r} {b}");
                ensure!(points(since_interval(a, b, *r)) == since, "{a} S{r} {b}");
                checks += 2;
            }
        }
    }
    Ok(checks)
}

fn criterion6() -> Outcome {
    let (proved, refuted) = temporal_proofs()?;
    ensure!(proved > 0 && refuted > 0, "degenerate corpus: {proved} proved, {refuted} refuted");
    let inferences = random_inferences()?;
    let checks = interval_arithmetic()?;
    Ok(format!("{proved} points proved, {refuted} refuted, {inferences} inferences sound, {checks} interval checks"))
}

fn criterion7() -> Outcome {
    let mut n = 0;
    for fx in temporal_fixtures(23) {
        let mut oracle = PointTruth::new(&fx);
        let g = expand_next_form(&fx.formula);
        ensure!(g.is_next_form(), "{g} is not in next form");
        ensure!(oracle.truth(&fx.formula) == oracle.truth(&g), "{} changes meaning", fx.formula);
        n += 1;
    }
    Ok(format!("{n} formulas"))
}

fn criterion8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut proofs = 0;
    for case in 0..500 {
        let f = random_instance(&mut rng, &RandomParams::default());
        let d = if case % 2 == 0 { Deriver::Sk } else { Deriver::SkPrime };
        let mut ps = vec![
            min_tree_size(&f.goal(d, Measure::TreeSize)).map_err(|e| e.to_string())?,
            min_size(&f.goal(d, Measure::Size)).map_err(|e| e.to_string())?,
        ];
        ps.push(sk_to_cq(&f.kb, &ps[0], &f.query.instantiate(&f.answer).unwrap()).map_err(|e| e.to_string())?);
        for p in &ps {
            let mt = tree_size(p).unwrap();
            ensure!(mt >= size(p) as u128, "tree size below size");
            let (tree, _) = unravel(&p.graph, p.sink).unwrap();
            ensure!(mt == size(&tree) as u128, "tree size {mt} vs unravelling {}", size(&tree));
            proofs += 1;
        }
        let m = if rng.gen_bool(0.5) { Measure::TreeSize } else { Measure::Size };
        let g = f.goal(d, m);
        let best = measure_of(m, &min_proof(&g).unwrap());
        let n = best.saturating_sub(2) + rng.gen_range(0..4);
        let at = decide_op(&g.clone().with_bound(n)).unwrap();
        let above = decide_op(&g.clone().with_bound(n + 1)).unwrap();
        ensure!(!at || above, "decide not monotone at {n}");
        ensure!(at == (n >= best), "decide({n}) = {at} with minimum {best}");
    }
    Ok(format!("500 cases, {proofs} proofs"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("shipped example golden proof", criterion1),
        ("deriver translations", criterion2),
        ("minimizer oracle equivalence", criterion3),
        ("chain gadget depth", criterion4),
        ("SAT reductions", criterion5),
        ("temporal soundness and completeness", criterion6),
        ("next-form expansion", criterion7),
        ("measure laws", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match res {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
