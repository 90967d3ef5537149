//! Temporal inference schemas: the Skolemized schemas lifted to annotated
//! CQs, plus TOP, CONJ, DISJ, COAL, SEP and one schema per temporal operator.

use super::eval::TemporalError;
use super::formula::{AnnotatedFormula, Formula, TemporalAbox};
use super::interval::{coalesce, Interval, OpRange};
use crate::canon::canonicalize_cq;
use crate::deriver_sk::{infer_mps, SkChecker, SkError};
use crate::graph::{SchemaChecker, Sentence, Theory};
use crate::logic::{Atom, KnowledgeBase, SkolemRule, Substitution, TboxEntry};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemporalRule {
    /// `⊤@ι` from no premises.
    Top(Interval),
    /// `φ@ι, ψ@ι'` gives `(φ ∧ ψ)@(ι ∩ ι')`.
    Conj,
    /// `φ@ι` gives `(φ ∨ ψ)@ι` for the given `ψ`.
    DisjLeft(Formula),
    /// `φ@ι` gives `(ψ ∨ φ)@ι` for the given `ψ`.
    DisjRight(Formula),
    Coal,
    Sep(Interval),
    BoxPlus(OpRange),
    BoxMinus(OpRange),
    Next,
    Prev,
    /// Requires a positive lower bound.
    Until(OpRange),
    Since(OpRange),
    /// `ψ@ι` gives `(φ U_[0,r2] ψ)@ι`.
    UntilNow(Formula, i64),
    /// `(φ U_[1,r2] ψ)@ι` gives `(φ U_[0,r2] ψ)@ι`.
    UntilLater,
    SinceNow(Formula, i64),
    SinceLater,
}

impl TemporalRule {
    pub fn name(&self) -> &'static str {
        match self {
            TemporalRule::Top(_) => "TOP",
            TemporalRule::Conj => "CONJ",
            TemporalRule::DisjLeft(_) | TemporalRule::DisjRight(_) => "DISJ",
            TemporalRule::Coal => "COAL",
            TemporalRule::Sep(_) => "SEP",
            TemporalRule::BoxPlus(_) => "BOXPLUS",
            TemporalRule::BoxMinus(_) => "BOXMINUS",
            TemporalRule::Next => "NEXT",
            TemporalRule::Prev => "PREV",
            TemporalRule::Until(_) => "UNTIL",
            TemporalRule::Since(_) => "SINCE",
            TemporalRule::UntilNow(..) | TemporalRule::UntilLater => "UNTIL0",
            TemporalRule::SinceNow(..) | TemporalRule::SinceLater => "SINCE0",
        }
    }
}

/// `⊞_r φ` holds on `[t1 - r1, t2 - r2]` when `φ` holds on `[t1, t2]`.
pub fn boxplus_interval(iv: &Interval, r: OpRange) -> Option<Interval> {
    Interval::new(iv.lo().map(|x| x - r.lo_i64()), iv.hi().map(|x| x - r.hi_i64())).ok()
}

/// `⊟_r φ` holds on `[t1 + r2, t2 + r1]` when `φ` holds on `[t1, t2]`.
pub fn boxminus_interval(iv: &Interval, r: OpRange) -> Option<Interval> {
    Interval::new(iv.lo().map(|x| x + r.hi_i64()), iv.hi().map(|x| x + r.lo_i64())).ok()
}

/// `(ν - r) ∩ ι` with `ν = (ι + 1) ∩ ι'`.
pub fn until_interval(phi: &Interval, psi: &Interval, r: OpRange) -> Option<Interval> {
    let nu = phi.shift(1).intersect(psi)?;
    nu.minus(r).intersect(phi)
}

/// `(ν + r) ∩ ι` with `ν = (ι - 1) ∩ ι'`.
pub fn since_interval(phi: &Interval, psi: &Interval, r: OpRange) -> Option<Interval> {
    let nu = phi.shift(-1).intersect(psi)?;
    nu.plus(r).intersect(phi)
}

/// Equality of formulas up to renaming the variables of each CQ leaf.
pub fn same_formula(a: &Formula, b: &Formula) -> bool {
    a == b || a.map_leaves(&canonicalize_cq) == b.map_leaves(&canonicalize_cq)
}

fn schema(rule: &TemporalRule, why: impl Into<String>) -> TemporalError {
    TemporalError::Schema(rule.name(), why.into())
}

fn one<'a>(rule: &TemporalRule, premises: &'a [AnnotatedFormula]) -> Result<&'a AnnotatedFormula, TemporalError> {
    match premises {
        [p] => Ok(p),
        _ => Err(schema(rule, format!("expected one premise, got {}", premises.len()))),
    }
}

fn two<'a>(
    rule: &TemporalRule,
    premises: &'a [AnnotatedFormula],
) -> Result<(&'a AnnotatedFormula, &'a AnnotatedFormula), TemporalError> {
    match premises {
        [p, q] => Ok((p, q)),
        _ => Err(schema(rule, format!("expected two premises, got {}", premises.len()))),
    }
}

fn range(lo: i64, hi: i64) -> Result<OpRange, TemporalError> {
    Ok(OpRange::new(lo, hi)?)
}

/// Applies a temporal schema. Errors when a side condition fails or the
/// resulting interval would be empty.
pub fn infer_temporal(rule: &TemporalRule, premises: &[AnnotatedFormula]) -> Result<AnnotatedFormula, TemporalError> {
    let empty = || schema(rule, "empty interval");
    let out = match rule {
        TemporalRule::Top(iv) => {
            if !premises.is_empty() {
                return Err(schema(rule, "takes no premises"));
            }
            AnnotatedFormula::new(Formula::Top, *iv)
        }
        TemporalRule::Conj => {
            let (a, b) = two(rule, premises)?;
            let iv = a.interval.intersect(&b.interval).ok_or_else(empty)?;
            AnnotatedFormula::new(Formula::and(a.formula.clone(), b.formula.clone()), iv)
        }
        TemporalRule::DisjLeft(psi) => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(Formula::or(p.formula.clone(), psi.clone()), p.interval)
        }
        TemporalRule::DisjRight(psi) => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(Formula::or(psi.clone(), p.formula.clone()), p.interval)
        }
        TemporalRule::Coal => {
            if premises.len() < 2 {
                return Err(schema(rule, "needs at least two premises"));
            }
            let f = &premises[0].formula;
            if premises.iter().any(|p| !same_formula(&p.formula, f)) {
                return Err(schema(rule, "premises differ beyond variable renaming"));
            }
            match coalesce(premises.iter().map(|p| p.interval).collect()).as_slice() {
                [iv] => AnnotatedFormula::new(f.clone(), *iv),
                _ => return Err(schema(rule, "union is not a single interval")),
            }
        }
        TemporalRule::Sep(iv) => {
            let p = one(rule, premises)?;
            if !iv.is_subset_of(&p.interval) {
                return Err(schema(rule, format!("{iv} is not inside {}", p.interval)));
            }
            AnnotatedFormula::new(p.formula.clone(), *iv)
        }
        TemporalRule::BoxPlus(r) => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(
                Formula::box_plus(*r, p.formula.clone()),
                boxplus_interval(&p.interval, *r).ok_or_else(empty)?,
            )
        }
        TemporalRule::BoxMinus(r) => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(
                Formula::box_minus(*r, p.formula.clone()),
                boxminus_interval(&p.interval, *r).ok_or_else(empty)?,
            )
        }
        TemporalRule::Next => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(Formula::next(p.formula.clone()), p.interval.shift(-1))
        }
        TemporalRule::Prev => {
            let p = one(rule, premises)?;
            AnnotatedFormula::new(Formula::prev(p.formula.clone()), p.interval.shift(1))
        }
        TemporalRule::Until(r) | TemporalRule::Since(r) => {
            if r.lo == 0 {
                return Err(schema(rule, "lower bound must be positive"));
            }
            let (a, b) = two(rule, premises)?;
            let (iv, f) = if matches!(rule, TemporalRule::Until(_)) {
                (until_interval(&a.interval, &b.interval, *r), Formula::until(*r, a.formula.clone(), b.formula.clone()))
            } else {
                (since_interval(&a.interval, &b.interval, *r), Formula::since(*r, a.formula.clone(), b.formula.clone()))
            };
            AnnotatedFormula::new(f, iv.ok_or_else(empty)?)
        }
        TemporalRule::UntilNow(phi, hi) | TemporalRule::SinceNow(phi, hi) => {
            let p = one(rule, premises)?;
            let r = range(0, *hi)?;
            let f = if matches!(rule, TemporalRule::UntilNow(..)) {
                Formula::until(r, phi.clone(), p.formula.clone())
            } else {
                Formula::since(r, phi.clone(), p.formula.clone())
            };
            AnnotatedFormula::new(f, p.interval)
        }
        TemporalRule::UntilLater | TemporalRule::SinceLater => {
            let p = one(rule, premises)?;
            let f = match (&p.formula, rule) {
                (Formula::Until(r, a, b), TemporalRule::UntilLater) if r.lo == 1 => {
                    Formula::Until(range(0, r.hi_i64())?, a.clone(), b.clone())
                }
                (Formula::Since(r, a, b), TemporalRule::SinceLater) if r.lo == 1 => {
                    Formula::Since(range(0, r.hi_i64())?, a.clone(), b.clone())
                }
                _ => return Err(schema(rule, "premise must use the range [1,r2]")),
            };
            AnnotatedFormula::new(f, p.interval)
        }
    };
    Ok(out)
}

/// Lifted MP_s: atoms annotated with a shared interval give the rule's head
/// atoms at that interval.
pub fn infer_tmp(
    premises: &[AnnotatedFormula],
    rule: &SkolemRule,
    pi: &Substitution,
) -> Result<Vec<AnnotatedFormula>, TemporalError> {
    let Some(first) = premises.first() else { return Err(SkError::NoMatch.into()) };
    let mut atoms: Vec<Atom> = Vec::new();
    for p in premises {
        if p.interval != first.interval {
            return Err(TemporalError::Schema("TMP", "premises carry different intervals".into()));
        }
        match &p.formula {
            Formula::Cq(q) if q.atoms.len() == 1 && q.is_ground() => atoms.push(q.atoms[0].clone()),
            f => return Err(TemporalError::Schema("TMP", format!("{f} is not a ground atom"))),
        }
    }
    Ok(infer_mps(&atoms, rule, pi)?.into_iter().map(|a| AnnotatedFormula::ground(vec![a], first.interval)).collect())
}

/// Axioms of the KB, its atemporal assertions at every interval, and the
/// temporal facts at exactly their stated intervals.
pub struct TemporalTheory<'a> {
    pub kb: &'a KnowledgeBase,
    pub tabox: &'a TemporalAbox,
}

impl Theory for TemporalTheory<'_> {
    fn contains(&self, s: &Sentence) -> bool {
        match s {
            Sentence::Axiom(a) => self.kb.tbox.iter().any(|e| matches!(e, TboxEntry::Dl(b) if b == a)),
            Sentence::Rule(r) => self.kb.tbox.iter().any(|e| matches!(e, TboxEntry::Rule(b) if b == r)),
            Sentence::Annotated(af) => match &af.formula {
                Formula::Cq(q) if q.atoms.len() == 1 && q.is_ground() => {
                    let a = &q.atoms[0];
                    self.kb.abox.contains(a)
                        || self.tabox.facts.iter().any(|f| &f.atom == a && f.interval == af.interval)
                }
                _ => false,
            },
            Sentence::Cq(_) => false,
        }
    }
}

/// Admissibility for the temporal Skolemized deriver.
#[derive(Debug, Clone)]
pub struct TemporalChecker {
    sk: SkChecker,
}

impl TemporalChecker {
    pub fn new(kb: &KnowledgeBase) -> Result<Self, TemporalError> {
        Ok(TemporalChecker { sk: SkChecker::new(kb, false)? })
    }

    fn lifted(&self, premises: &[&Sentence], conclusion: &AnnotatedFormula) -> Option<&'static str> {
        let Formula::Cq(c) = &conclusion.formula else { return None };
        let mut plain: Vec<Sentence> = Vec::new();
        for p in premises {
            match p {
                Sentence::Annotated(af) if af.interval == conclusion.interval => match &af.formula {
                    Formula::Cq(q) => plain.push(Sentence::Cq(q.clone())),
                    _ => return None,
                },
                Sentence::Annotated(_) => return None,
                other => plain.push((*other).clone()),
            }
        }
        let refs: Vec<&Sentence> = plain.iter().collect();
        let concl = Sentence::Cq(c.clone());
        if self.sk.check_mps(&refs, &concl) {
            Some("TMP")
        } else if SkChecker::check_cs(&refs, &concl) {
            Some("TCs")
        } else if SkChecker::check_es(&refs, &concl) {
            Some("TEs")
        } else {
            None
        }
    }
}

fn annotated<'a>(premises: &[&'a Sentence]) -> Option<Vec<&'a AnnotatedFormula>> {
    premises
        .iter()
        .map(|p| match p {
            Sentence::Annotated(a) => Some(a),
            _ => None,
        })
        .collect()
}

fn same(a: &AnnotatedFormula, b: &AnnotatedFormula) -> bool {
    a.interval == b.interval && same_formula(&a.formula, &b.formula)
}

impl SchemaChecker for TemporalChecker {
    fn admissible(&self, premises: &[&Sentence], conclusion: &Sentence) -> Option<&'static str> {
        let Sentence::Annotated(c) = conclusion else { return None };
        if let Some(name) = self.lifted(premises, c) {
            return Some(name);
        }
        let ps = annotated(premises)?;
        let owned: Vec<AnnotatedFormula> = ps.iter().map(|p| (*p).clone()).collect();
        let mut candidates: Vec<TemporalRule> = vec![TemporalRule::Coal, TemporalRule::Sep(c.interval)];
        match &c.formula {
            Formula::Top => candidates.push(TemporalRule::Top(c.interval)),
            Formula::And(..) => candidates.push(TemporalRule::Conj),
            Formula::Or(a, b) => {
                candidates.push(TemporalRule::DisjLeft((**b).clone()));
                candidates.push(TemporalRule::DisjRight((**a).clone()));
            }
            Formula::BoxPlus(r, _) => candidates.push(TemporalRule::BoxPlus(*r)),
            Formula::BoxMinus(r, _) => candidates.push(TemporalRule::BoxMinus(*r)),
            Formula::Next(_) => candidates.push(TemporalRule::Next),
            Formula::Prev(_) => candidates.push(TemporalRule::Prev),
            Formula::Until(r, a, _) if r.lo == 0 => {
                candidates.push(TemporalRule::UntilNow((**a).clone(), r.hi_i64()));
                candidates.push(TemporalRule::UntilLater);
            }
            Formula::Since(r, a, _) if r.lo == 0 => {
                candidates.push(TemporalRule::SinceNow((**a).clone(), r.hi_i64()));
                candidates.push(TemporalRule::SinceLater);
            }
            Formula::Until(r, ..) => candidates.push(TemporalRule::Until(*r)),
            Formula::Since(r, ..) => candidates.push(TemporalRule::Since(*r)),
            Formula::Cq(_) => {}
        }
        candidates
            .into_iter()
            .find(|rule| infer_temporal(rule, &owned).is_ok_and(|out| same(&out, c)))
            .map(|rule| rule.name())
    }
}
