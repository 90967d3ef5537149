//! First-order syntax: terms, atoms, conjunctive queries, DL-Lite_R axioms and
//! existential rules, together with their Skolemization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("predicate `{pred}` used with arity {arity}; only unary and binary predicates are supported")]
    Arity { pred: String, arity: usize },
    #[error("invalid identifier `{0}`")]
    Identifier(String),
    #[error("rule body must not be empty")]
    EmptyBody,
    #[error("existential variable `{var}` needs exactly one frontier variable to Skolemize, found {found}")]
    NonUnarySkolem { var: String, found: usize },
    #[error("expected {expected} answer constants, got {got}")]
    AnswerArity { expected: usize, got: usize },
    #[error("answer variable `{0}` does not occur in the query body")]
    DanglingAnswerVar(String),
    #[error("ABox assertion `{0}` is not ground")]
    NonGroundAssertion(String),
}

pub type Substitution = BTreeMap<String, Term>;

pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Const(String),
    Var(String),
    Skolem(String, Box<Term>),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn skolem(function: impl Into<String>, arg: Term) -> Self {
        Term::Skolem(function.into(), Box::new(arg))
    }

    /// Skolem nesting depth; constants and variables have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Skolem(_, inner) => 1 + inner.depth(),
            _ => 0,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) => false,
            Term::Skolem(_, inner) => inner.is_ground(),
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn apply(&self, subst: &Substitution) -> Term {
        match self {
            Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::Skolem(f, inner) => Term::Skolem(f.clone(), Box::new(inner.apply(subst))),
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::Const(_) => {}
            Term::Skolem(_, inner) => inner.collect_vars(out),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => f.write_str(v),
            Term::Skolem(func, inner) => write!(f, "{func}({inner})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Result<Self, LogicError> {
        let pred = pred.into();
        if !is_identifier(&pred) {
            return Err(LogicError::Identifier(pred));
        }
        if args.is_empty() || args.len() > 2 {
            return Err(LogicError::Arity { arity: args.len(), pred });
        }
        Ok(Atom { pred, args })
    }

    pub fn unary(pred: &str, a: Term) -> Self {
        Atom { pred: pred.to_string(), args: vec![a] }
    }

    pub fn binary(pred: &str, a: Term, b: Term) -> Self {
        Atom { pred: pred.to_string(), args: vec![a, b] }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn apply(&self, subst: &Substitution) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|t| t.apply(subst)).collect() }
    }

    pub fn max_depth(&self) -> usize {
        self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in &self.args {
            t.collect_vars(&mut out);
        }
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

pub fn vars_of(atoms: &[Atom]) -> Vec<String> {
    let mut out: Vec<&str> = Vec::new();
    for a in atoms {
        for t in &a.args {
            t.collect_vars(&mut out);
        }
    }
    out.into_iter().map(str::to_string).collect()
}

pub fn apply_all(atoms: &[Atom], subst: &Substitution) -> Vec<Atom> {
    atoms.iter().map(|a| a.apply(subst)).collect()
}

/// A conjunctive query. Variables that are not answer variables are
/// implicitly existentially quantified; a query without answer variables is
/// Boolean.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cq {
    pub answer_vars: Vec<String>,
    pub atoms: Vec<Atom>,
}

impl Cq {
    pub fn new(answer_vars: Vec<String>, atoms: Vec<Atom>) -> Result<Self, LogicError> {
        let vars = vars_of(&atoms);
        for v in &answer_vars {
            if !vars.contains(v) {
                return Err(LogicError::DanglingAnswerVar(v.clone()));
            }
        }
        Ok(Cq { answer_vars, atoms })
    }

    pub fn boolean(atoms: Vec<Atom>) -> Self {
        Cq { answer_vars: Vec::new(), atoms }
    }

    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.atoms.iter().all(Atom::is_ground)
    }

    pub fn vars(&self) -> Vec<String> {
        vars_of(&self.atoms)
    }

    pub fn existential_vars(&self) -> Vec<String> {
        self.vars().into_iter().filter(|v| !self.answer_vars.contains(v)).collect()
    }

    /// All terms (variables, constants, Skolem terms) appearing as arguments.
    pub fn terms(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for a in &self.atoms {
            for t in &a.args {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            for t in &a.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// Replaces the answer variables by the given constants, yielding the
    /// Boolean query `q(a)`.
    pub fn instantiate(&self, answers: &[String]) -> Result<Cq, LogicError> {
        if answers.len() != self.answer_vars.len() {
            return Err(LogicError::AnswerArity { expected: self.answer_vars.len(), got: answers.len() });
        }
        let subst: Substitution =
            self.answer_vars.iter().zip(answers).map(|(v, a)| (v.clone(), Term::Const(a.clone()))).collect();
        Ok(Cq::boolean(apply_all(&self.atoms, &subst)))
    }

    pub fn apply(&self, subst: &Substitution) -> Cq {
        Cq { answer_vars: self.answer_vars.clone(), atoms: apply_all(&self.atoms, subst) }
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ex = self.existential_vars();
        if !ex.is_empty() {
            write!(f, "exists {} . ", ex.join(","))?;
        }
        write_atoms(f, &self.atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub inverse: bool,
}

impl Role {
    pub fn named(name: &str) -> Self {
        Role { name: name.to_string(), inverse: false }
    }

    pub fn inv(name: &str) -> Self {
        Role { name: name.to_string(), inverse: true }
    }

    pub fn inverted(&self) -> Role {
        Role { name: self.name.clone(), inverse: !self.inverse }
    }

    /// `R(a,b)` with `P⁻(a,b)` stored as `P(b,a)`.
    pub fn atom(&self, a: Term, b: Term) -> Atom {
        if self.inverse {
            Atom::binary(&self.name, b, a)
        } else {
            Atom::binary(&self.name, a, b)
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}-", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Concept {
    Name(String),
    Exists(Role),
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Name(n) => f.write_str(n),
            Concept::Exists(r) => write!(f, "exists {r}"),
        }
    }
}

/// Positive DL-Lite_R inclusion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DlAxiom {
    ConceptInclusion(Concept, Concept),
    RoleInclusion(Role, Role),
}

impl fmt::Display for DlAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DlAxiom::ConceptInclusion(l, r) => write!(f, "{l} sub {r}"),
            DlAxiom::RoleInclusion(l, r) => write!(f, "{l} rsub {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExistentialRule {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    pub frontier_vars: Vec<String>,
    pub existential_vars: Vec<String>,
}

impl ExistentialRule {
    pub fn new(body: Vec<Atom>, head: Vec<Atom>) -> Result<Self, LogicError> {
        if body.is_empty() {
            return Err(LogicError::EmptyBody);
        }
        let body_vars = vars_of(&body);
        let head_vars = vars_of(&head);
        let frontier_vars = head_vars.iter().filter(|v| body_vars.contains(v)).cloned().collect();
        let existential_vars = head_vars.iter().filter(|v| !body_vars.contains(v)).cloned().collect();
        Ok(ExistentialRule { body, head, frontier_vars, existential_vars })
    }

    pub fn vars(&self) -> Vec<String> {
        let mut all = vars_of(&self.body);
        for v in vars_of(&self.head) {
            if !all.contains(&v) {
                all.push(v);
            }
        }
        all
    }

    /// Renames every variable of the rule by prefixing it, so that the rule
    /// shares no variables with a query it is matched against.
    pub fn renamed_apart(&self, prefix: &str) -> ExistentialRule {
        let subst: Substitution =
            self.vars().into_iter().map(|v| (v.clone(), Term::Var(format!("{prefix}{v}")))).collect();
        ExistentialRule::new(apply_all(&self.body, &subst), apply_all(&self.head, &subst))
            .expect("renaming preserves a nonempty body")
    }
}

impl fmt::Display for ExistentialRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        if !self.existential_vars.is_empty() {
            write!(f, "exists {} . ", self.existential_vars.join(","))?;
        }
        write_atoms(f, &self.head)
    }
}

pub(crate) fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// A rule without existential variables; head terms may be Skolem terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkolemRule {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl fmt::Display for SkolemRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        write_atoms(f, &self.head)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TboxEntry {
    Dl(DlAxiom),
    Rule(ExistentialRule),
}

impl TboxEntry {
    pub fn to_rule(&self) -> ExistentialRule {
        match self {
            TboxEntry::Dl(ax) => translate_axiom(ax),
            TboxEntry::Rule(r) => r.clone(),
        }
    }
}

impl fmt::Display for TboxEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TboxEntry::Dl(a) => write!(f, "{a}"),
            TboxEntry::Rule(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub tbox: Vec<TboxEntry>,
    pub abox: Vec<Atom>,
}

impl KnowledgeBase {
    pub fn new(tbox: Vec<TboxEntry>, abox: Vec<Atom>) -> Result<Self, LogicError> {
        if let Some(a) = abox.iter().find(|a| a.args.iter().any(|t| !matches!(t, Term::Const(_)))) {
            return Err(LogicError::NonGroundAssertion(a.to_string()));
        }
        Ok(KnowledgeBase { tbox, abox })
    }

    /// Skolemized rules, index-aligned with the TBox.
    pub fn skolem_rules(&self) -> Result<Vec<SkolemRule>, LogicError> {
        self.tbox.iter().enumerate().map(|(i, e)| skolemize(&e.to_rule(), &i.to_string())).collect()
    }

    pub fn tbox_index(&self, entry: &TboxEntry) -> Option<usize> {
        self.tbox.iter().position(|e| e == entry)
    }

    pub fn is_dl_lite(&self) -> bool {
        self.tbox.iter().all(|e| matches!(e, TboxEntry::Dl(_)))
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in &self.abox {
            for t in &a.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }
}

/// Compiles a DL-Lite_R inclusion into an equivalent existential rule.
/// Variables are named `x`, `y` (body) and `u` (existential).
pub fn translate_axiom(axiom: &DlAxiom) -> ExistentialRule {
    let x = || Term::var("x");
    let y = || Term::var("y");
    let u = || Term::var("u");
    let (body, head) = match axiom {
        DlAxiom::ConceptInclusion(lhs, rhs) => {
            // body atom plus the variable the right-hand side talks about
            let (body, frontier) = match lhs {
                Concept::Name(a) => (Atom::unary(a, x()), x()),
                Concept::Exists(r) => {
                    let frontier = if r.inverse { y() } else { x() };
                    (Atom::binary(&r.name, x(), y()), frontier)
                }
            };
            let head = match rhs {
                Concept::Name(b) => Atom::unary(b, frontier),
                Concept::Exists(s) => s.atom(frontier, u()),
            };
            (body, head)
        }
        DlAxiom::RoleInclusion(lhs, rhs) => {
            let body = Atom::binary(&lhs.name, x(), y());
            let head = if lhs.inverse == rhs.inverse {
                Atom::binary(&rhs.name, x(), y())
            } else {
                Atom::binary(&rhs.name, y(), x())
            };
            (body, head)
        }
    };
    ExistentialRule::new(vec![body], vec![head]).expect("translated rule has a body")
}

pub fn skolem_function_name(rule_id: &str, var: &str) -> String {
    format!("fn_{rule_id}_{var}")
}

/// Replaces each existential variable `u` by `fn_{rule_id}_u(z)` where `z` is
/// the single frontier variable.
pub fn skolemize(rule: &ExistentialRule, rule_id: &str) -> Result<SkolemRule, LogicError> {
    let mut subst = Substitution::new();
    for u in &rule.existential_vars {
        if rule.frontier_vars.len() != 1 {
            return Err(LogicError::NonUnarySkolem { var: u.clone(), found: rule.frontier_vars.len() });
        }
        let z = Term::Var(rule.frontier_vars[0].clone());
        subst.insert(u.clone(), Term::skolem(skolem_function_name(rule_id, u), z));
    }
    Ok(SkolemRule { body: rule.body.clone(), head: apply_all(&rule.head, &subst) })
}

/// Inverse of [`skolemize`]: every distinct Skolem term in the head becomes a
/// fresh existential variable.
pub fn deskolemize(rule: &SkolemRule) -> ExistentialRule {
    let mut map: BTreeMap<Term, String> = BTreeMap::new();
    let taken = vars_of(&rule.body);
    let mut head = Vec::new();
    for atom in &rule.head {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Skolem(..) => {
                    let n = map.len();
                    let name = map.entry(t.clone()).or_insert_with(|| {
                        let mut k = n;
                        loop {
                            let cand = format!("u{k}");
                            if !taken.contains(&cand) {
                                break cand;
                            }
                            k += 1;
                        }
                    });
                    Term::Var(name.clone())
                }
                other => other.clone(),
            })
            .collect();
        head.push(Atom { pred: atom.pred.clone(), args });
    }
    ExistentialRule::new(rule.body.clone(), head).expect("Skolem rule has a body")
}

/// Grounds a query: answer variables to the given constants, every other
/// variable to a fresh constant `c_<var>`.
pub fn freeze_cq(q: &Cq, answers: &[String]) -> Result<Vec<Atom>, LogicError> {
    let inst = q.instantiate(answers)?;
    let subst: Substitution = inst.vars().into_iter().map(|v| (v.clone(), Term::Const(format!("c_{v}")))).collect();
    Ok(apply_all(&inst.atoms, &subst))
}

/// Reads an ABox as a Boolean query: constants outside `answers` become
/// distinct existential variables.
pub fn abox_to_query(abox: &[Atom], answers: &[String]) -> Cq {
    let mut subst: BTreeMap<String, Term> = BTreeMap::new();
    let mut atoms = Vec::new();
    for a in abox {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) if !answers.contains(c) => {
                    subst.entry(c.clone()).or_insert_with(|| Term::Var(format!("v_{c}"))).clone()
                }
                other => other.clone(),
            })
            .collect();
        atoms.push(Atom { pred: a.pred.clone(), args });
    }
    Cq::boolean(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Term {
        Term::constant(s)
    }
    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn role_inclusion_with_inverse_swaps_arguments() {
        let ax = DlAxiom::RoleInclusion(Role::named("P"), Role::inv("R"));
        let r = translate_axiom(&ax);
        assert_eq!(r.body, vec![Atom::binary("P", v("x"), v("y"))]);
        assert_eq!(r.head, vec![Atom::binary("R", v("y"), v("x"))]);
        assert!(r.existential_vars.is_empty());
    }

    #[test]
    fn name_inclusion() {
        let ax = DlAxiom::ConceptInclusion(Concept::Name("A".into()), Concept::Name("B".into()));
        let r = translate_axiom(&ax);
        assert_eq!(r.to_string(), "A(x) -> B(x)");
    }

    #[test]
    fn inverse_existential_inclusion() {
        let ax = DlAxiom::ConceptInclusion(Concept::Exists(Role::inv("P")), Concept::Exists(Role::named("S")));
        let r = translate_axiom(&ax);
        assert_eq!(r.to_string(), "P(x,y) -> exists u . S(y,u)");
        let sk = skolemize(&r, "3").unwrap();
        assert_eq!(sk.to_string(), "P(x,y) -> S(y,fn_3_u(y))");
    }

    #[test]
    fn skolemize_without_existentials_keeps_head() {
        let r = translate_axiom(&DlAxiom::RoleInclusion(Role::named("P"), Role::inv("R")));
        let sk = skolemize(&r, "0").unwrap();
        assert_eq!(sk.head, r.head);
    }

    #[test]
    fn skolemize_concept_existential() {
        let r =
            translate_axiom(&DlAxiom::ConceptInclusion(Concept::Name("B".into()), Concept::Exists(Role::named("P"))));
        let sk = skolemize(&r, "2").unwrap();
        assert_eq!(sk.head, vec![Atom::binary("P", v("x"), Term::skolem("fn_2_u", v("x")))]);
    }

    #[test]
    fn multi_frontier_rules_cannot_be_skolemized_unary() {
        let r = ExistentialRule::new(
            vec![Atom::binary("P", v("x"), v("y"))],
            vec![Atom::binary("Q", v("x"), v("u")), Atom::binary("Q", v("y"), v("u"))],
        )
        .unwrap();
        assert!(matches!(skolemize(&r, "0"), Err(LogicError::NonUnarySkolem { .. })));
    }

    #[test]
    fn atoms_are_unary_or_binary() {
        assert!(Atom::new("P", vec![c("a"), c("b"), c("c")]).is_err());
        assert!(Atom::new("P", vec![]).is_err());
        assert!(Atom::new("P", vec![c("a")]).is_ok());
    }

    #[test]
    fn freeze_single_atom() {
        let q = Cq::new(vec!["x".into()], vec![Atom::binary("P", v("x"), v("z"))]).unwrap();
        let frozen = freeze_cq(&q, &["b".into()]).unwrap();
        assert_eq!(frozen, vec![Atom::binary("P", c("b"), c("c_z"))]);
        assert!(matches!(freeze_cq(&q, &[]), Err(LogicError::AnswerArity { .. })));
    }

    #[test]
    fn freeze_boolean_ground_is_identity() {
        let q = Cq::boolean(vec![Atom::unary("A", c("a"))]);
        assert_eq!(freeze_cq(&q, &[]).unwrap(), q.atoms);
    }

    #[test]
    fn abox_to_query_keeps_answers() {
        let q = abox_to_query(&[Atom::unary("B", c("b"))], &["b".into()]);
        assert_eq!(q.atoms, vec![Atom::unary("B", c("b"))]);
        assert!(q.vars().is_empty());
        let q = abox_to_query(&[Atom::binary("P", c("b"), c("c"))], &["b".into()]);
        assert_eq!(q.atoms, vec![Atom::binary("P", c("b"), v("v_c"))]);
    }

    #[test]
    fn abox_must_be_ground() {
        assert!(KnowledgeBase::new(vec![], vec![Atom::unary("A", v("x"))]).is_err());
    }
}
