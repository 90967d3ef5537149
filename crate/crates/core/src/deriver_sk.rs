//! The Skolemized deriver: bounded Skolem chase and the schemas MP_s, C_s,
//! E_s and E_s'.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::canon::{match_atom, match_atoms};
use crate::graph::{SchemaChecker, Sentence};
use crate::logic::{Atom, Cq, KnowledgeBase, LogicError, SkolemRule, Substitution, TboxEntry, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkError {
    #[error("chase exceeded the fact cap of {0} atoms")]
    FactCap(usize),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("substitution does not map the rule body onto the premises")]
    NoMatch,
    #[error("input is not ground: {0}")]
    NonGround(String),
    #[error("conjunction must not be empty")]
    EmptyConjunction,
    #[error("target does not abstract the conjunction under the given substitution")]
    Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaseConfig {
    /// Maximal Skolem nesting depth of emitted terms.
    pub depth_bound: usize,
    pub fact_cap: usize,
}

pub const DEFAULT_FACT_CAP: usize = 100_000;

impl ChaseConfig {
    /// `(rules + 1) * query_atoms` nesting, 100000 facts.
    pub fn default_for(kb: &KnowledgeBase, query_atoms: usize) -> Self {
        ChaseConfig { depth_bound: (kb.tbox.len() + 1) * query_atoms.max(1), fact_cap: DEFAULT_FACT_CAP }
    }
}

/// First derivation found for a chase atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub rule: usize,
    /// Distinct premises in body order.
    pub premises: Vec<Atom>,
}

#[derive(Debug, Clone, Default)]
pub struct ChaseResult {
    /// Facts in derivation order, ABox first.
    pub facts: Vec<Atom>,
    pub index: BTreeMap<Atom, usize>,
    pub witness: Vec<Option<Witness>>,
    pub round: Vec<usize>,
}

/// One MP_s inference available inside a chase result.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SkEdge {
    pub rule: usize,
    pub premises: Vec<usize>,
    pub conclusion: usize,
}

impl ChaseResult {
    pub fn contains(&self, a: &Atom) -> bool {
        self.index.contains_key(a)
    }

    pub fn id(&self, a: &Atom) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn by_pred(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, a) in self.facts.iter().enumerate() {
            m.entry(a.pred.as_str()).or_default().push(i);
        }
        m
    }

    /// Every MP_s inference whose premises and conclusion are chase atoms.
    pub fn hyperedges(&self, rules: &[SkolemRule]) -> Vec<SkEdge> {
        let by_pred = self.by_pred();
        let mut out = BTreeSet::new();
        for (ri, rule) in rules.iter().enumerate() {
            for (subst, prem) in indexed_matches(&rule.body, &self.facts, &by_pred, None) {
                let mut premises: Vec<usize> = Vec::new();
                for p in prem {
                    if !premises.contains(&p) {
                        premises.push(p);
                    }
                }
                for h in &rule.head {
                    if let Some(c) = self.id(&h.apply(&subst)) {
                        out.insert(SkEdge { rule: ri, premises: premises.clone(), conclusion: c });
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Matches of `body` into `facts`, returning the substitution and the fact
/// index used for each body atom. With `delta = Some(r)`, only matches using
/// at least one fact from `r` are kept.
fn indexed_matches(
    body: &[Atom],
    facts: &[Atom],
    by_pred: &BTreeMap<&str, Vec<usize>>,
    delta: Option<(&[usize], usize)>,
) -> Vec<(Substitution, Vec<usize>)> {
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    rec(body, facts, by_pred, delta, &mut Substitution::new(), &mut chosen, &mut out);
    out
}

fn rec(
    body: &[Atom],
    facts: &[Atom],
    by_pred: &BTreeMap<&str, Vec<usize>>,
    delta: Option<(&[usize], usize)>,
    subst: &mut Substitution,
    chosen: &mut Vec<usize>,
    out: &mut Vec<(Substitution, Vec<usize>)>,
) {
    let Some((first, rest)) = body.split_first() else {
        if let Some((rounds, r)) = delta {
            if !chosen.iter().any(|&i| rounds[i] == r) {
                return;
            }
        }
        out.push((subst.clone(), chosen.clone()));
        return;
    };
    let Some(cands) = by_pred.get(first.pred.as_str()) else { return };
    for &i in cands {
        let before = subst.clone();
        if match_atom(first, &facts[i], subst) {
            chosen.push(i);
            rec(rest, facts, by_pred, delta, subst, chosen, out);
            chosen.pop();
            *subst = before;
        }
    }
}

/// Round-based Skolem chase. Rules are applied in index order; atoms whose
/// terms would exceed `depth_bound` are not emitted.
pub fn chase(kb: &KnowledgeBase, rules: &[SkolemRule], cfg: ChaseConfig) -> Result<ChaseResult, SkError> {
    let mut res = ChaseResult::default();
    for a in &kb.abox {
        if !a.is_ground() {
            return Err(SkError::NonGround(a.to_string()));
        }
        if !res.index.contains_key(a) {
            res.index.insert(a.clone(), res.facts.len());
            res.facts.push(a.clone());
            res.witness.push(None);
            res.round.push(0);
        }
    }
    if res.facts.len() > cfg.fact_cap {
        return Err(SkError::FactCap(cfg.fact_cap));
    }
    let mut round = 0;
    loop {
        let mut new: Vec<(Atom, Witness)> = Vec::new();
        let mut seen: BTreeSet<Atom> = BTreeSet::new();
        {
            let by_pred = res.by_pred();
            for (ri, rule) in rules.iter().enumerate() {
                for (subst, prem) in indexed_matches(&rule.body, &res.facts, &by_pred, Some((&res.round, round))) {
                    for h in &rule.head {
                        let a = h.apply(&subst);
                        if a.max_depth() > cfg.depth_bound || res.index.contains_key(&a) || seen.contains(&a) {
                            continue;
                        }
                        let mut premises: Vec<Atom> = Vec::new();
                        for &p in &prem {
                            if !premises.contains(&res.facts[p]) {
                                premises.push(res.facts[p].clone());
                            }
                        }
                        seen.insert(a.clone());
                        new.push((a, Witness { rule: ri, premises }));
                    }
                }
            }
        }
        if new.is_empty() {
            return Ok(res);
        }
        round += 1;
        for (a, w) in new {
            res.index.insert(a.clone(), res.facts.len());
            res.facts.push(a);
            res.witness.push(Some(w));
            res.round.push(round);
            if res.facts.len() > cfg.fact_cap {
                return Err(SkError::FactCap(cfg.fact_cap));
            }
        }
    }
}

/// Chase with the KB's own Skolemized TBox.
pub fn chase_kb(kb: &KnowledgeBase, cfg: ChaseConfig) -> Result<ChaseResult, SkError> {
    chase(kb, &kb.skolem_rules()?, cfg)
}

fn as_set(atoms: &[Atom]) -> BTreeSet<&Atom> {
    atoms.iter().collect()
}

pub fn infer_mps(premises: &[Atom], rule: &SkolemRule, pi: &Substitution) -> Result<Vec<Atom>, SkError> {
    if let Some(a) = premises.iter().find(|a| !a.is_ground()) {
        return Err(SkError::NonGround(a.to_string()));
    }
    let body: Vec<Atom> = rule.body.iter().map(|a| a.apply(pi)).collect();
    if !body.iter().all(Atom::is_ground) || as_set(&body) != as_set(premises) {
        return Err(SkError::NoMatch);
    }
    Ok(rule.head.iter().map(|a| a.apply(pi)).collect())
}

pub fn infer_cs(atoms: &[Atom]) -> Result<Cq, SkError> {
    if atoms.is_empty() {
        return Err(SkError::EmptyConjunction);
    }
    if let Some(a) = atoms.iter().find(|a| !a.is_ground()) {
        return Err(SkError::NonGround(a.to_string()));
    }
    Ok(Cq::boolean(atoms.to_vec()))
}

pub fn infer_es(conj: &Cq, target: &Cq, sigma: &Substitution) -> Result<Cq, SkError> {
    if !conj.is_ground() {
        return Err(SkError::NonGround(conj.to_string()));
    }
    let image: Vec<Atom> = target.atoms.iter().map(|a| a.apply(sigma)).collect();
    if image != conj.atoms {
        return Err(SkError::Mismatch);
    }
    Ok(target.clone())
}

pub fn infer_es_prime(conj: &Cq, target: &Cq, sigma: &Substitution) -> Result<Cq, SkError> {
    if !conj.is_ground() {
        return Err(SkError::NonGround(conj.to_string()));
    }
    let image: Vec<Atom> = target.atoms.iter().map(|a| a.apply(sigma)).collect();
    if as_set(&image) != as_set(&conj.atoms) {
        return Err(SkError::Mismatch);
    }
    Ok(target.clone())
}

/// The positional substitution witnessing E_s, if any.
pub fn es_witness(conj: &Cq, target: &Cq) -> Option<Substitution> {
    if !conj.is_ground() || conj.atoms.len() != target.atoms.len() {
        return None;
    }
    let mut sigma = Substitution::new();
    for (t, c) in target.atoms.iter().zip(&conj.atoms) {
        if !match_atom(t, c, &mut sigma) {
            return None;
        }
    }
    Some(sigma)
}

/// A substitution witnessing E_s', if any.
pub fn es_prime_witness(conj: &Cq, target: &Cq) -> Option<Substitution> {
    if !conj.is_ground() {
        return None;
    }
    let goal = as_set(&conj.atoms);
    match_atoms(&target.atoms, &conj.atoms).into_iter().find(|s| {
        let img: Vec<Atom> = target.atoms.iter().map(|a| a.apply(s)).collect();
        as_set(&img) == goal
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkKind {
    MPs,
    Cs,
    Es,
    EsPrime,
}

impl SkKind {
    pub fn name(self) -> &'static str {
        match self {
            SkKind::MPs => "MPs",
            SkKind::Cs => "Cs",
            SkKind::Es => "Es",
            SkKind::EsPrime => "EsPrime",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkChecker {
    entries: Vec<(TboxEntry, SkolemRule)>,
    pub allow_es_prime: bool,
}

impl SkChecker {
    pub fn new(kb: &KnowledgeBase, allow_es_prime: bool) -> Result<Self, SkError> {
        let rules = kb.skolem_rules()?;
        let mut entries: Vec<(TboxEntry, SkolemRule)> = Vec::new();
        for (e, r) in kb.tbox.iter().zip(rules) {
            if !entries.iter().any(|(x, _)| x == e) {
                entries.push((e.clone(), r));
            }
        }
        Ok(SkChecker { entries, allow_es_prime })
    }

    pub fn skolem_rule(&self, entry: &TboxEntry) -> Option<&SkolemRule> {
        self.entries.iter().find(|(e, _)| e == entry).map(|(_, r)| r)
    }

    pub fn check_mps(&self, premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let axioms: Vec<TboxEntry> = premises.iter().filter_map(|s| s.as_entry()).collect();
        if axioms.len() != 1 {
            return false;
        }
        let Some(rule) = self.skolem_rule(&axioms[0]) else { return false };
        let Some(concl) = conclusion.as_ground_atom() else { return false };
        let mut atoms = Vec::new();
        for s in premises {
            if s.as_entry().is_some() {
                continue;
            }
            match s.as_ground_atom() {
                Some(a) => atoms.push(a.clone()),
                None => return false,
            }
        }
        let set = as_set(&atoms);
        match_atoms(&rule.body, &atoms).iter().any(|pi| {
            let body: Vec<Atom> = rule.body.iter().map(|a| a.apply(pi)).collect();
            as_set(&body) == set && rule.head.iter().any(|h| &h.apply(pi) == concl)
        })
    }

    pub fn check_cs(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let Some(q) = conclusion.as_cq() else { return false };
        if premises.is_empty() || !q.is_ground() || q.atoms.len() != premises.len() {
            return false;
        }
        premises.iter().zip(&q.atoms).all(|(p, a)| p.as_ground_atom() == Some(a))
    }

    fn single_cq<'a>(premises: &[&'a Sentence], conclusion: &'a Sentence) -> Option<(&'a Cq, &'a Cq)> {
        match (premises, conclusion) {
            ([Sentence::Cq(p)], Sentence::Cq(c)) if p.is_ground() && p.is_boolean() => Some((p, c)),
            _ => None,
        }
    }

    pub fn check_es(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        Self::single_cq(premises, conclusion).is_some_and(|(p, c)| es_witness(p, c).is_some())
    }

    pub fn check_es_prime(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        Self::single_cq(premises, conclusion).is_some_and(|(p, c)| es_prime_witness(p, c).is_some())
    }
}

impl SchemaChecker for SkChecker {
    fn admissible(&self, premises: &[&Sentence], conclusion: &Sentence) -> Option<&'static str> {
        if self.check_mps(premises, conclusion) {
            Some(SkKind::MPs.name())
        } else if Self::check_cs(premises, conclusion) {
            Some(SkKind::Cs.name())
        } else if Self::check_es(premises, conclusion) {
            Some(SkKind::Es.name())
        } else if self.allow_es_prime && Self::check_es_prime(premises, conclusion) {
            Some(SkKind::EsPrime.name())
        } else {
            None
        }
    }
}

pub fn sk_schema_checker(kb: &KnowledgeBase, allow_es_prime: bool) -> Result<SkChecker, SkError> {
    SkChecker::new(kb, allow_es_prime)
}

/// True iff `goal` (a Boolean CQ) has a match into the chase.
pub fn chase_entails(res: &ChaseResult, goal: &Cq) -> bool {
    let by_pred = res.by_pred();
    indexed_first(&goal.atoms, &res.facts, &by_pred).is_some()
}

fn indexed_first(body: &[Atom], facts: &[Atom], by_pred: &BTreeMap<&str, Vec<usize>>) -> Option<Substitution> {
    fn go(body: &[Atom], facts: &[Atom], by_pred: &BTreeMap<&str, Vec<usize>>, s: &mut Substitution) -> bool {
        let Some((first, rest)) = body.split_first() else { return true };
        let Some(cands) = by_pred.get(first.pred.as_str()) else { return false };
        for &i in cands {
            let before = s.clone();
            if match_atom(first, &facts[i], s) {
                if go(rest, facts, by_pred, s) {
                    return true;
                }
                *s = before;
            }
        }
        false
    }
    let mut s = Substitution::new();
    go(body, facts, by_pred, &mut s).then_some(s)
}

/// All matches of a query's atoms into the chase.
pub fn chase_matches(res: &ChaseResult, atoms: &[Atom]) -> Vec<Substitution> {
    let by_pred = res.by_pred();
    let mut seen = BTreeSet::new();
    indexed_matches(atoms, &res.facts, &by_pred, None)
        .into_iter()
        .map(|(s, _)| s)
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

pub fn is_skolem_term(t: &Term) -> bool {
    matches!(t, Term::Skolem(..))
}
