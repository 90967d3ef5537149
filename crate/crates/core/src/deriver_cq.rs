//! The CQ deriver: schemas MP, C, T and E over Boolean conjunctive queries.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::canon::{canonicalize_cq, match_atoms};
use crate::graph::{SchemaChecker, Sentence};
use crate::logic::{vars_of, Atom, Cq, ExistentialRule, KnowledgeBase, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CqError {
    #[error("substitution does not map the rule body into the query")]
    NoMatch,
    #[error("dropped atom `{0}` is not in the matched body")]
    BadDrop(String),
    #[error("head atom index {0} out of range")]
    BadAdd(usize),
    #[error("conjunction premises must be Boolean and nonempty")]
    BadConjunction,
    #[error("variable `{0}` does not occur in the formula")]
    UnknownVar(String),
    #[error("constant `{0}` does not occur in the query")]
    UnknownConst(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CqKind {
    Mp,
    C,
    T,
    E,
}

impl CqKind {
    pub fn name(self) -> &'static str {
        match self {
            CqKind::Mp => "MP",
            CqKind::C => "C",
            CqKind::T => "T",
            CqKind::E => "E",
        }
    }
}

/// A variable name based on `base` that is not in `taken`; it is added to `taken`.
pub fn fresh_var(base: &str, taken: &mut BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    let mut k = 1usize;
    let mut cand = base.to_string();
    while taken.contains(&cand) {
        cand = format!("{stem}{k}");
        k += 1;
    }
    taken.insert(cand.clone());
    cand
}

fn push_unique(out: &mut Vec<Atom>, a: Atom) {
    if !out.contains(&a) {
        out.push(a);
    }
}

/// `(q ∖ drop) ∪ π(head[add])` with existential head variables renamed fresh.
pub fn infer_mp(
    q: &Cq,
    rule: &ExistentialRule,
    pi: &Substitution,
    drop: &[Atom],
    add: &[usize],
) -> Result<Cq, CqError> {
    infer_mp_with(q, rule, pi, drop, add).map(|(c, _)| c)
}

/// As [`infer_mp`], also returning `π` extended by the fresh variables.
pub fn infer_mp_with(
    q: &Cq,
    rule: &ExistentialRule,
    pi: &Substitution,
    drop: &[Atom],
    add: &[usize],
) -> Result<(Cq, Substitution), CqError> {
    let body: Vec<Atom> = rule.body.iter().map(|a| a.apply(pi)).collect();
    if !body.iter().all(|a| q.atoms.contains(a)) {
        return Err(CqError::NoMatch);
    }
    if let Some(d) = drop.iter().find(|d| !body.contains(d)) {
        return Err(CqError::BadDrop(d.to_string()));
    }
    let mut taken: BTreeSet<String> = q.vars().into_iter().collect();
    let mut full = pi.clone();
    for u in &rule.existential_vars {
        let fresh = fresh_var(u, &mut taken);
        full.insert(u.clone(), Term::Var(fresh));
    }
    let mut atoms: Vec<Atom> = Vec::new();
    for a in &q.atoms {
        if !drop.contains(a) {
            push_unique(&mut atoms, a.clone());
        }
    }
    for &i in add {
        let h = rule.head.get(i).ok_or(CqError::BadAdd(i))?;
        push_unique(&mut atoms, h.apply(&full));
    }
    Ok((Cq { answer_vars: q.answer_vars.clone(), atoms }, full))
}

/// Renames the variables of `q2` apart from those of `q1` and conjoins.
pub fn infer_c(q1: &Cq, q2: &Cq) -> Result<Cq, CqError> {
    if !q1.is_boolean() || !q2.is_boolean() || q1.atoms.is_empty() || q2.atoms.is_empty() {
        return Err(CqError::BadConjunction);
    }
    let mut taken: BTreeSet<String> = q1.vars().into_iter().collect();
    let subst: Substitution =
        q2.vars().into_iter().map(|v| (v.clone(), Term::Var(fresh_var(&v, &mut taken)))).collect();
    let mut atoms = q1.atoms.clone();
    for a in &q2.atoms {
        push_unique(&mut atoms, a.apply(&subst));
    }
    Ok(Cq::boolean(atoms))
}

/// Tautology `φ → ∃x'.φ[x ↦ x']` for the chosen variables.
pub fn infer_t(phi: &[Atom], abstracted: &[String]) -> Result<ExistentialRule, CqError> {
    let vars = vars_of(phi);
    if let Some(v) = abstracted.iter().find(|v| !vars.contains(v)) {
        return Err(CqError::UnknownVar(v.clone()));
    }
    let mut taken: BTreeSet<String> = vars.into_iter().collect();
    let subst: Substitution = abstracted.iter().map(|v| (v.clone(), Term::Var(fresh_var(v, &mut taken)))).collect();
    ExistentialRule::new(phi.to_vec(), phi.iter().map(|a| a.apply(&subst)).collect()).map_err(|_| CqError::NoMatch)
}

/// Replaces every occurrence of each chosen constant by one fresh variable.
pub fn infer_e(q: &Cq, constants: &[String]) -> Result<Cq, CqError> {
    let present = q.constants();
    let mut positions = Vec::new();
    for c in constants {
        if !present.contains(c) {
            return Err(CqError::UnknownConst(c.clone()));
        }
        for (i, a) in q.atoms.iter().enumerate() {
            for (j, t) in a.args.iter().enumerate() {
                if matches!(t, Term::Const(x) if x == c) {
                    positions.push((i, j));
                }
            }
        }
    }
    Ok(infer_e_at(q, &positions))
}

/// Replaces the constants at the given `(atom, argument)` positions by
/// variables, one fresh variable per constant.
pub fn infer_e_at(q: &Cq, positions: &[(usize, usize)]) -> Cq {
    let mut taken: BTreeSet<String> = q.vars().into_iter().collect();
    let mut fresh: BTreeMap<String, String> = BTreeMap::new();
    let mut atoms = q.atoms.clone();
    for &(i, j) in positions {
        if let Some(Term::Const(c)) = q.atoms.get(i).and_then(|a| a.args.get(j)) {
            let v = fresh.entry(c.clone()).or_insert_with(|| fresh_var(&format!("x_{c}"), &mut taken)).clone();
            atoms[i].args[j] = Term::Var(v);
        }
    }
    let mut dedup = Vec::new();
    for a in atoms {
        push_unique(&mut dedup, a);
    }
    Cq { answer_vars: q.answer_vars.clone(), atoms: dedup }
}

/// Cap on candidate conclusions examined per admissibility check.
const CHECK_CAP: usize = 1 << 18;

#[derive(Debug, Clone)]
pub struct CqChecker;

fn pred_counts(atoms: &[Atom]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for a in atoms.iter().collect::<BTreeSet<_>>() {
        *m.entry(a.pred.as_str()).or_insert(0) += 1;
    }
    m
}

impl CqChecker {
    pub fn check_mp(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let Sentence::Cq(target) = conclusion else { return false };
        let (q, rule) = match premises {
            [Sentence::Cq(q), r] | [r, Sentence::Cq(q)] => match r {
                Sentence::Axiom(a) => (q, crate::logic::translate_axiom(a)),
                Sentence::Rule(r) => (q, r.clone()),
                _ => return false,
            },
            _ => return false,
        };
        if !q.is_boolean() || !target.is_boolean() {
            return false;
        }
        let want = canonicalize_cq(target);
        let want_counts = pred_counts(&want.atoms);
        let mut budget = CHECK_CAP;
        for pi in match_atoms(&rule.body, &q.atoms) {
            let body: Vec<Atom> = rule.body.iter().map(|a| a.apply(&pi)).collect::<BTreeSet<_>>().into_iter().collect();
            for add_mask in 0u64..(1u64 << rule.head.len().min(63)) {
                let add: Vec<usize> = (0..rule.head.len()).filter(|i| add_mask >> i & 1 == 1).collect();
                for drop_mask in 0u64..(1u64 << body.len().min(63)) {
                    if budget == 0 {
                        return false;
                    }
                    budget -= 1;
                    let drop: Vec<Atom> =
                        (0..body.len()).filter(|i| drop_mask >> i & 1 == 1).map(|i| body[i].clone()).collect();
                    let Ok(cand) = infer_mp(q, &rule, &pi, &drop, &add) else { continue };
                    if pred_counts(&cand.atoms) != want_counts {
                        continue;
                    }
                    if canonicalize_cq(&cand) == want {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn check_c(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let ([Sentence::Cq(a), Sentence::Cq(b)], Sentence::Cq(target)) = (premises, conclusion) else { return false };
        match infer_c(a, b) {
            Ok(c) => target.is_boolean() && canonicalize_cq(&c) == canonicalize_cq(target),
            Err(_) => false,
        }
    }

    pub fn check_t(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let Sentence::Rule(r) = conclusion else { return false };
        if !premises.is_empty() || r.body.len() != r.head.len() {
            return false;
        }
        let mut sigma: BTreeMap<&str, &Term> = BTreeMap::new();
        for (b, h) in r.body.iter().zip(&r.head) {
            if b.pred != h.pred || b.args.len() != h.args.len() {
                return false;
            }
            for (x, y) in b.args.iter().zip(&h.args) {
                match x {
                    Term::Var(v) => {
                        if let Some(prev) = sigma.insert(v, y) {
                            if prev != y {
                                return false;
                            }
                        }
                    }
                    other => {
                        if other != y {
                            return false;
                        }
                    }
                }
            }
        }
        let mut images = BTreeSet::new();
        for (v, img) in &sigma {
            match img {
                Term::Var(w) if w == v => {}
                Term::Var(w) if r.existential_vars.contains(w) => {
                    if !images.insert(w.as_str()) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }

    pub fn check_e(premises: &[&Sentence], conclusion: &Sentence) -> bool {
        let ([Sentence::Cq(q)], Sentence::Cq(target)) = (premises, conclusion) else { return false };
        if !q.is_boolean() || !target.is_boolean() || !target.constants().is_subset(&q.constants()) {
            return false;
        }
        let want = canonicalize_cq(target);
        let want_counts = pred_counts(&want.atoms);
        let mut occurrences: Vec<(usize, usize)> = Vec::new();
        for (i, a) in q.atoms.iter().enumerate() {
            for (j, t) in a.args.iter().enumerate() {
                if matches!(t, Term::Const(_)) {
                    occurrences.push((i, j));
                }
            }
        }
        if occurrences.len() > 18 {
            return false;
        }
        for mask in 0u64..(1u64 << occurrences.len()) {
            let chosen: Vec<(usize, usize)> =
                (0..occurrences.len()).filter(|k| mask >> k & 1 == 1).map(|k| occurrences[k]).collect();
            let cand = infer_e_at(q, &chosen);
            if pred_counts(&cand.atoms) == want_counts && canonicalize_cq(&cand) == want {
                return true;
            }
        }
        false
    }
}

impl SchemaChecker for CqChecker {
    fn admissible(&self, premises: &[&Sentence], conclusion: &Sentence) -> Option<&'static str> {
        if Self::check_t(premises, conclusion) {
            Some(CqKind::T.name())
        } else if Self::check_mp(premises, conclusion) {
            Some(CqKind::Mp.name())
        } else if Self::check_c(premises, conclusion) {
            Some(CqKind::C.name())
        } else if Self::check_e(premises, conclusion) {
            Some(CqKind::E.name())
        } else {
            None
        }
    }
}

pub fn cq_schema_checker(_kb: &KnowledgeBase) -> CqChecker {
    CqChecker
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{translate_axiom, DlAxiom, Role};

    fn c(s: &str) -> Term {
        Term::constant(s)
    }
    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn p_rule() -> ExistentialRule {
        translate_axiom(&DlAxiom::RoleInclusion(Role::named("P"), Role::inv("R")))
    }

    fn pbz() -> Cq {
        Cq::boolean(vec![Atom::binary("P", c("b"), v("z"))])
    }

    fn pi() -> Substitution {
        [("x".to_string(), c("b")), ("y".to_string(), v("z"))].into_iter().collect()
    }

    #[test]
    fn mp_replace_and_keep() {
        let q = pbz();
        let out = infer_mp(&q, &p_rule(), &pi(), &q.atoms, &[0]).unwrap();
        assert_eq!(out.atoms, vec![Atom::binary("R", v("z"), c("b"))]);
        let out = infer_mp(&q, &p_rule(), &pi(), &[], &[0]).unwrap();
        assert_eq!(out.atoms, vec![Atom::binary("P", c("b"), v("z")), Atom::binary("R", v("z"), c("b"))]);
        let out = infer_mp(&q, &p_rule(), &pi(), &[], &[]).unwrap();
        assert_eq!(out, q);
    }

    #[test]
    fn mp_checker() {
        let q = Sentence::Cq(pbz());
        let r = Sentence::Rule(p_rule());
        let good = Sentence::Cq(Cq::boolean(vec![Atom::binary("R", v("w"), c("b"))]));
        let bad = Sentence::Cq(Cq::boolean(vec![Atom::binary("R", c("b"), v("w"))]));
        assert!(CqChecker::check_mp(&[&q, &r], &good));
        assert!(!CqChecker::check_mp(&[&q, &r], &bad));
    }

    #[test]
    fn c_renames_apart() {
        let out = infer_c(&pbz(), &pbz()).unwrap();
        assert_eq!(out.vars().len(), 2);
        let q = Sentence::Cq(pbz());
        let merged = Sentence::Cq(pbz());
        assert!(!CqChecker::check_c(&[&q, &q], &merged));
        assert!(CqChecker::check_c(&[&q, &q], &Sentence::Cq(out)));
    }

    #[test]
    fn c_rejects_non_boolean() {
        let q = Cq::new(vec!["z".into()], vec![Atom::binary("P", c("b"), v("z"))]).unwrap();
        assert!(infer_c(&q, &pbz()).is_err());
    }

    #[test]
    fn t_examples() {
        let r = infer_t(&[Atom::binary("P", v("x"), v("z"))], &["z".into()]).unwrap();
        assert_eq!(r.existential_vars, vec!["z1".to_string()]);
        assert!(CqChecker::check_t(&[], &Sentence::Rule(r)));
        let r = infer_t(&[Atom::binary("S", v("x"), v("z"))], &[]).unwrap();
        assert!(r.existential_vars.is_empty());
        assert!(CqChecker::check_t(&[], &Sentence::Rule(r)));
        let not_taut =
            ExistentialRule::new(vec![Atom::binary("S", v("x"), v("z"))], vec![Atom::binary("S", v("z"), v("x"))])
                .unwrap();
        assert!(!CqChecker::check_t(&[], &Sentence::Rule(not_taut)));
    }

    #[test]
    fn e_examples() {
        let out = infer_e(&pbz(), &["b".into()]).unwrap();
        assert!(out.constants().is_empty());
        assert_eq!(out.vars().len(), 2);
        assert_eq!(infer_e(&pbz(), &[]).unwrap(), pbz());
        let q = Sentence::Cq(pbz());
        assert!(CqChecker::check_e(&[&q], &Sentence::Cq(out)));
    }

    #[test]
    fn e_keeps_one_variable_per_constant() {
        let q = Cq::boolean(vec![Atom::binary("P", c("b"), c("b"))]);
        let out = infer_e(&q, &["b".into()]).unwrap();
        assert_eq!(out.vars().len(), 1);
        let split = Sentence::Cq(Cq::boolean(vec![Atom::binary("P", v("x"), v("y"))]));
        assert!(!CqChecker::check_e(&[&Sentence::Cq(q)], &split));
    }
}
