//! Instance generators: the chain and SAT gadgets and random DL-Lite_R KBs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::deriver_sk::{chase_kb, ChaseConfig};
use crate::logic::{freeze_cq, Atom, Concept, Cq, DlAxiom, KnowledgeBase, LogicError, Role, TboxEntry, Term};
use crate::search::{Deriver, Measure, SearchGoal};
use crate::temporal::{Formula, Interval, OpRange, TemporalAbox, TemporalFact};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("literal 0 in clause {0}")]
    ZeroLiteral(usize),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FixtureKind {
    Chain,
    SatSk,
    SatCq,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub kb: KnowledgeBase,
    pub query: Cq,
    pub answer: Vec<String>,
    pub bound: Option<u128>,
    pub expected: Option<bool>,
    pub chase: Option<ChaseConfig>,
}

impl Fixture {
    pub fn goal(&self, deriver: Deriver, measure: Measure) -> SearchGoal {
        let mut g = SearchGoal::new(self.kb.clone(), self.query.clone(), self.answer.clone(), deriver, measure);
        g.bound = self.bound;
        g.chase = self.chase;
        g
    }
}

fn chain_name(p: &str, i: usize) -> String {
    format!("{p}_{i}")
}

/// Extends `base` by `P_i ⊑ P_{i+1}` for `0 ≤ i < n` and `P_n ⊑ P` for every
/// predicate of `q`, plus the frozen query over the `P_0` predicates.
pub fn gen_chain(base: &KnowledgeBase, q: &Cq, answer: &[String], n: usize) -> Result<Fixture, FixtureError> {
    let mut preds: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &q.atoms {
        preds.insert(a.pred.as_str(), a.args.len());
    }
    let mut tbox = base.tbox.clone();
    for (&p, &arity) in &preds {
        for i in 0..=n {
            let from = chain_name(p, i);
            let to = if i == n { p.to_string() } else { chain_name(p, i + 1) };
            let ax = if arity == 1 {
                DlAxiom::ConceptInclusion(Concept::Name(from), Concept::Name(to))
            } else {
                DlAxiom::RoleInclusion(Role::named(&from), Role::named(&to))
            };
            tbox.push(TboxEntry::Dl(ax));
        }
    }
    let mut abox = base.abox.clone();
    for a in freeze_cq(q, answer)? {
        let renamed = Atom { pred: chain_name(&a.pred, 0), args: a.args };
        if !abox.contains(&renamed) {
            abox.push(renamed);
        }
    }
    Ok(Fixture {
        kind: FixtureKind::Chain,
        kb: KnowledgeBase::new(tbox, abox)?,
        query: q.clone(),
        answer: answer.to_vec(),
        bound: Some(n as u128),
        expected: None,
        chase: None,
    })
}

/// Clauses over variables `1..=n`; literal `j` is `p_j`, `-j` its negation.
pub type Cnf = Vec<Vec<i32>>;

/// Adds the clause `p ∨ ¬p` for every variable that lacks it.
pub fn with_tautologies(num_vars: usize, clauses: &[Vec<i32>]) -> Result<Cnf, FixtureError> {
    let mut out: Cnf = Vec::new();
    for (i, c) in clauses.iter().enumerate() {
        if c.is_empty() {
            return Err(FixtureError::EmptyClause(i));
        }
        if c.contains(&0) {
            return Err(FixtureError::ZeroLiteral(i));
        }
        let set: BTreeSet<i32> = c.iter().copied().collect();
        out.push(set.into_iter().collect());
    }
    let n = clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0).max(num_vars);
    for v in 1..=n as i32 {
        let t = vec![-v, v];
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn literal_const(l: i32) -> String {
    if l > 0 {
        format!("p{l}")
    } else {
        format!("np{}", -l)
    }
}

/// SAT gadget: ABox `T(p_j)`, `T(p̄_j)`, `c(c_i, l)` and `r(c_i, c_{i+1})`
/// with a tree-shaped Boolean query and bound `k = 2+m+(m−1)+n`.
pub fn gen_sat(num_vars: usize, clauses: &[Vec<i32>]) -> Result<Fixture, FixtureError> {
    let cnf = with_tautologies(num_vars, clauses)?;
    let n = cnf.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
    let m = cnf.len();
    let c = Term::constant;
    let v = Term::var;
    let mut abox = Vec::new();
    for j in 1..=n as i32 {
        abox.push(Atom::unary("T", c(literal_const(j))));
        abox.push(Atom::unary("T", c(literal_const(-j))));
    }
    let mut atoms = Vec::new();
    for (i, clause) in cnf.iter().enumerate() {
        let ci = format!("c{}", i + 1);
        for &l in clause {
            abox.push(Atom::binary("c", c(ci.clone()), c(literal_const(l))));
        }
        if i + 1 < m {
            abox.push(Atom::binary("r", c(ci), c(format!("c{}", i + 2))));
        }
        let (xc, xp) = (format!("xc{}", i + 1), format!("xp{}", i + 1));
        atoms.push(Atom::binary("c", v(xc.clone()), v(xp.clone())));
        atoms.push(Atom::unary("T", v(xp)));
        if i + 1 < m {
            atoms.push(Atom::binary("r", v(xc), v(format!("xc{}", i + 2))));
        }
    }
    let k = 2 + m + (m - 1) + n;
    Ok(Fixture {
        kind: FixtureKind::SatSk,
        kb: KnowledgeBase::new(vec![], abox)?,
        query: Cq::boolean(atoms),
        answer: vec![],
        bound: Some(k as u128),
        expected: Some(satisfiable(n, &cnf)),
        chase: None,
    })
}

/// The SAT gadget for the CQ deriver, with bound `4m+2n−1`: a chain of
/// conjunctions over `2m−1+n` leaves followed by a tautology step.
pub fn gen_sat_cq(num_vars: usize, clauses: &[Vec<i32>]) -> Result<Fixture, FixtureError> {
    let mut f = gen_sat(num_vars, clauses)?;
    let cnf = with_tautologies(num_vars, clauses)?;
    let n = cnf.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
    f.kind = FixtureKind::SatCq;
    f.bound = Some((4 * cnf.len() + 2 * n - 1) as u128);
    Ok(f)
}

/// Brute-force satisfiability over all assignments.
pub fn satisfiable(n: usize, cnf: &[Vec<i32>]) -> bool {
    (0u32..1 << n).any(|bits| {
        cnf.iter().all(|cl| {
            cl.iter().any(|&l| {
                let val = bits >> (l.unsigned_abs() - 1) & 1 == 1;
                if l > 0 {
                    val
                } else {
                    !val
                }
            })
        })
    })
}

/// Every CNF with at most `max_vars` variables and at most `max_clauses`
/// distinct non-empty clauses. With `up_to_symmetry`, only the least
/// representative under variable permutations and polarity flips is kept.
pub fn all_cnfs(max_vars: usize, max_clauses: usize, up_to_symmetry: bool) -> Vec<(usize, Cnf)> {
    let mut out = Vec::new();
    for n in 1..=max_vars {
        let lits: Vec<i32> = (1..=n as i32).flat_map(|v| [v, -v]).collect();
        let mut clauses: Vec<Vec<i32>> = (1u32..1 << lits.len())
            .map(|mask| {
                let mut cl: Vec<i32> = (0..lits.len()).filter(|i| mask >> i & 1 == 1).map(|i| lits[i]).collect();
                cl.sort();
                cl
            })
            .collect();
        clauses.sort();
        let index: BTreeMap<&Vec<i32>, usize> = clauses.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut syms: Vec<Vec<usize>> = Vec::new();
        if up_to_symmetry {
            for perm in permutations(n) {
                for flips in 0u32..1 << n {
                    let map = clauses
                        .iter()
                        .map(|c| {
                            let mut img: Vec<i32> = c.iter().map(|&l| rename(l, &perm, flips)).collect();
                            img.sort();
                            index[&img]
                        })
                        .collect();
                    syms.push(map);
                }
            }
        }
        let mut pick = Vec::new();
        subsets(clauses.len(), 0, max_clauses, &mut pick, &mut |s| {
            let vars: BTreeSet<u32> = s.iter().flat_map(|&i| clauses[i].iter()).map(|l| l.unsigned_abs()).collect();
            if vars.len() != n {
                return;
            }
            let least = syms.iter().all(|m| {
                let mut img: Vec<usize> = s.iter().map(|&i| m[i]).collect();
                img.sort();
                img.as_slice() >= s
            });
            if least {
                out.push((n, s.iter().map(|&i| clauses[i].clone()).collect()));
            }
        });
    }
    out
}

fn rename(l: i32, perm: &[i32], flips: u32) -> i32 {
    let v = l.unsigned_abs() as usize - 1;
    let sign = if flips >> v & 1 == 1 { -l.signum() } else { l.signum() };
    sign * perm[v]
}

fn normalize(mut cnf: Cnf) -> Cnf {
    for c in &mut cnf {
        c.sort();
    }
    cnf.sort();
    cnf
}

fn permutations(n: usize) -> Vec<Vec<i32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n as i32);
            out.push(q);
        }
    }
    out
}

/// Least image of `cnf` under renaming and polarity flips of its variables.
pub fn canonical_cnf(n: usize, cnf: &[Vec<i32>]) -> Cnf {
    let mut best: Option<Cnf> = None;
    for perm in permutations(n) {
        for flips in 0u32..1 << n {
            let image: Cnf = cnf.iter().map(|c| c.iter().map(|&l| rename(l, &perm, flips)).collect()).collect();
            let image = normalize(image);
            if best.as_ref().is_none_or(|b| &image < b) {
                best = Some(image);
            }
        }
    }
    best.unwrap_or_default()
}

fn subsets(len: usize, from: usize, left: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if !pick.is_empty() {
        f(pick);
    }
    if left == 0 {
        return;
    }
    for i in from..len {
        pick.push(i);
        subsets(len, i + 1, left - 1, pick, f);
        pick.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub max_axioms: usize,
    pub max_abox: usize,
    pub max_query: usize,
    pub depth_bound: usize,
    pub allow_answer: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_axioms: 8, max_abox: 6, max_query: 5, depth_bound: 3, allow_answer: true }
    }
}

const CONCEPTS: [&str; 4] = ["A", "B", "C", "D"];
const ROLES: [&str; 3] = ["P", "R", "S"];
const CONSTS: [&str; 3] = ["a", "b", "c"];

fn random_role(rng: &mut impl Rng) -> Role {
    let name = ROLES.choose(rng).expect("nonempty");
    if rng.gen_bool(0.3) {
        Role::inv(name)
    } else {
        Role::named(name)
    }
}

fn random_concept(rng: &mut impl Rng) -> Concept {
    if rng.gen_bool(0.5) {
        Concept::Name(CONCEPTS.choose(rng).expect("nonempty").to_string())
    } else {
        Concept::Exists(random_role(rng))
    }
}

/// A random DL-Lite_R KB together with a query entailed by it, obtained by
/// abstracting a connected set of chase facts.
pub fn random_instance(rng: &mut impl Rng, params: &RandomParams) -> Fixture {
    loop {
        let n_ax = rng.gen_range(0..=params.max_axioms);
        let mut tbox = Vec::new();
        for _ in 0..n_ax {
            let ax = if rng.gen_bool(0.2) {
                DlAxiom::RoleInclusion(random_role(rng), random_role(rng))
            } else {
                DlAxiom::ConceptInclusion(random_concept(rng), random_concept(rng))
            };
            tbox.push(TboxEntry::Dl(ax));
        }
        let n_ab = rng.gen_range(1..=params.max_abox.max(1));
        let mut abox = Vec::new();
        for _ in 0..n_ab {
            let a = Term::constant(*CONSTS.choose(rng).expect("nonempty"));
            let atom = if rng.gen_bool(0.5) {
                Atom::unary(CONCEPTS.choose(rng).expect("nonempty"), a)
            } else {
                let b = Term::constant(*CONSTS.choose(rng).expect("nonempty"));
                Atom::binary(ROLES.choose(rng).expect("nonempty"), a, b)
            };
            if !abox.contains(&atom) {
                abox.push(atom);
            }
        }
        let kb = KnowledgeBase::new(tbox, abox).expect("ground ABox");
        let cfg = ChaseConfig { depth_bound: params.depth_bound, fact_cap: 2_000 };
        let Ok(res) = chase_kb(&kb, cfg) else { continue };
        let facts = res.facts;
        let size = rng.gen_range(1..=params.max_query.max(1));
        let mut picked: Vec<Atom> = vec![facts.choose(rng).expect("nonempty ABox").clone()];
        for _ in 1..size {
            let terms: BTreeSet<&Term> = picked.iter().flat_map(|a| a.args.iter()).collect();
            let near: Vec<&Atom> =
                facts.iter().filter(|f| !picked.contains(f) && f.args.iter().any(|t| terms.contains(t))).collect();
            match near.choose(rng) {
                Some(f) => picked.push((*f).clone()),
                None => break,
            }
        }
        let terms: BTreeSet<Term> = picked.iter().flat_map(|a| a.args.iter().cloned()).collect();
        let consts: Vec<&Term> = terms.iter().filter(|t| matches!(t, Term::Const(_))).collect();
        let answer_term =
            if params.allow_answer && rng.gen_bool(0.5) { consts.choose(rng).copied().cloned() } else { None };
        let mut names: BTreeMap<Term, Term> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            let keep_const = matches!(t, Term::Const(_)) && Some(t) != answer_term.as_ref() && rng.gen_bool(0.3);
            if !keep_const {
                names.insert(t.clone(), Term::var(format!("x{i}")));
            }
        }
        let atoms: Vec<Atom> = picked
            .iter()
            .map(|a| Atom {
                pred: a.pred.clone(),
                args: a.args.iter().map(|t| names.get(t).cloned().unwrap_or_else(|| t.clone())).collect(),
            })
            .collect();
        let (answer_vars, answer) = match &answer_term {
            Some(t @ Term::Const(c)) => match &names[t] {
                Term::Var(v) => (vec![v.clone()], vec![c.clone()]),
                _ => unreachable!("answer terms are renamed"),
            },
            _ => (vec![], vec![]),
        };
        let query = Cq::new(answer_vars, atoms).expect("answer variable occurs");
        return Fixture {
            kind: FixtureKind::Random,
            kb,
            query,
            answer,
            bound: None,
            expected: Some(true),
            chase: Some(ChaseConfig { depth_bound: params.depth_bound, fact_cap: 20_000 }),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalParams {
    pub max_axioms: usize,
    pub max_facts: usize,
    pub max_depth: usize,
    /// Fact endpoints are drawn from `[-span, span]`.
    pub span: i64,
    pub max_range: i64,
}

impl Default for TemporalParams {
    fn default() -> Self {
        TemporalParams { max_axioms: 3, max_facts: 5, max_depth: 3, span: 8, max_range: 3 }
    }
}

/// A global TBox, a temporal ABox and a Boolean formula over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalFixture {
    pub kb: KnowledgeBase,
    pub tabox: TemporalAbox,
    pub formula: Formula,
}

/// A random temporal instance. CQ leaves abstract one or two ABox atoms, so
/// they hold somewhere unless the TBox is empty and the atoms are disjoint.
pub fn random_temporal(rng: &mut impl Rng, params: &TemporalParams) -> TemporalFixture {
    let mut tbox = Vec::new();
    for _ in 0..rng.gen_range(0..=params.max_axioms) {
        let ax = if rng.gen_bool(0.2) {
            DlAxiom::RoleInclusion(random_role(rng), random_role(rng))
        } else {
            DlAxiom::ConceptInclusion(random_concept(rng), random_concept(rng))
        };
        tbox.push(TboxEntry::Dl(ax));
    }
    let consts = &CONSTS[..2];
    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(1..=params.max_facts.max(1)) {
        let a = Term::constant(*consts.choose(rng).expect("nonempty"));
        let atom = if rng.gen_bool(0.6) {
            Atom::unary(CONCEPTS.choose(rng).expect("nonempty"), a)
        } else {
            let b = Term::constant(*consts.choose(rng).expect("nonempty"));
            Atom::binary(ROLES.choose(rng).expect("nonempty"), a, b)
        };
        let lo = rng.gen_range(-params.span..=params.span);
        let hi = rng.gen_range(lo..=params.span);
        facts.push(TemporalFact { atom, interval: Interval::finite(lo, hi).expect("lo <= hi") });
    }
    let kb = KnowledgeBase::new(tbox, Vec::new()).expect("empty ABox");
    let atoms: Vec<Atom> = facts.iter().map(|f| f.atom.clone()).collect();
    loop {
        let formula = random_formula(rng, params, &atoms, params.max_depth);
        if formula != Formula::Top {
            return TemporalFixture { kb, tabox: TemporalAbox::new(facts), formula };
        }
    }
}

fn random_formula(rng: &mut impl Rng, params: &TemporalParams, atoms: &[Atom], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        if rng.gen_bool(0.05) {
            return Formula::Top;
        }
        return Formula::Cq(random_leaf(rng, atoms));
    }
    let mut range = || {
        let lo = rng.gen_range(0..=params.max_range.min(2));
        OpRange::new(lo, rng.gen_range(lo..=params.max_range)).expect("0 <= lo <= hi")
    };
    let r = range();
    let mut sub = || random_formula(rng, params, atoms, depth - 1);
    let (a, b) = (sub(), sub());
    match rng.gen_range(0..8) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        2 => Formula::box_plus(r, a),
        3 => Formula::box_minus(r, a),
        4 => Formula::until(r, a, b),
        5 => Formula::since(r, a, b),
        6 => Formula::next(a),
        _ => Formula::prev(a),
    }
}

fn random_leaf(rng: &mut impl Rng, atoms: &[Atom]) -> Cq {
    let mut picked = vec![atoms.choose(rng).expect("nonempty ABox").clone()];
    if rng.gen_bool(0.3) {
        picked.push(atoms.choose(rng).expect("nonempty ABox").clone());
    }
    let mut names: BTreeMap<Term, Term> = BTreeMap::new();
    for t in picked.iter().flat_map(|a| a.args.iter()) {
        if !names.contains_key(t) && rng.gen_bool(0.4) {
            names.insert(t.clone(), Term::var(format!("x{}", names.len())));
        }
    }
    let out: Vec<Atom> = picked
        .iter()
        .map(|a| Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| names.get(t).cloned().unwrap_or_else(|| t.clone())).collect(),
        })
        .collect();
    let mut dedup: Vec<Atom> = Vec::new();
    for a in out {
        if !dedup.contains(&a) {
            dedup.push(a);
        }
    }
    Cq::boolean(dedup)
}
