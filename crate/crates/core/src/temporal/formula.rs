use std::fmt;

use serde::{Deserialize, Serialize};

use super::interval::{Interval, OpRange};
use crate::logic::{Atom, Cq, LogicError, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Cq(Cq),
    Top,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    BoxPlus(OpRange, Box<Formula>),
    BoxMinus(OpRange, Box<Formula>),
    Until(OpRange, Box<Formula>, Box<Formula>),
    Since(OpRange, Box<Formula>, Box<Formula>),
    /// Punctual next, equivalent to `BoxPlus([1,1], _)`.
    Next(Box<Formula>),
    /// Punctual previous, equivalent to `BoxMinus([1,1], _)`.
    Prev(Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn box_plus(r: OpRange, a: Formula) -> Formula {
        Formula::BoxPlus(r, Box::new(a))
    }

    pub fn box_minus(r: OpRange, a: Formula) -> Formula {
        Formula::BoxMinus(r, Box::new(a))
    }

    pub fn until(r: OpRange, a: Formula, b: Formula) -> Formula {
        Formula::Until(r, Box::new(a), Box::new(b))
    }

    pub fn since(r: OpRange, a: Formula, b: Formula) -> Formula {
        Formula::Since(r, Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Formula {
        Formula::Next(Box::new(a))
    }

    pub fn prev(a: Formula) -> Formula {
        Formula::Prev(Box::new(a))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Cq(_) | Formula::Top => 0,
            Formula::BoxPlus(_, a) | Formula::BoxMinus(_, a) | Formula::Next(a) | Formula::Prev(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) | Formula::Since(_, a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// CQ leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Cq> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Cq>) {
        match self {
            Formula::Cq(q) => out.push(q),
            Formula::Top => {}
            Formula::BoxPlus(_, a) | Formula::BoxMinus(_, a) | Formula::Next(a) | Formula::Prev(a) => {
                a.collect_leaves(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) | Formula::Since(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Applies `f` to every CQ leaf.
    pub fn map_leaves(&self, f: &impl Fn(&Cq) -> Cq) -> Formula {
        let b = |x: &Formula| Box::new(x.map_leaves(f));
        match self {
            Formula::Cq(q) => Formula::Cq(f(q)),
            Formula::Top => Formula::Top,
            Formula::And(x, y) => Formula::And(b(x), b(y)),
            Formula::Or(x, y) => Formula::Or(b(x), b(y)),
            Formula::BoxPlus(r, x) => Formula::BoxPlus(*r, b(x)),
            Formula::BoxMinus(r, x) => Formula::BoxMinus(*r, b(x)),
            Formula::Until(r, x, y) => Formula::Until(*r, b(x), b(y)),
            Formula::Since(r, x, y) => Formula::Since(*r, b(x), b(y)),
            Formula::Next(x) => Formula::Next(b(x)),
            Formula::Prev(x) => Formula::Prev(b(x)),
        }
    }

    /// Sum of the upper endpoints of all metric operators (next/previous count 1).
    pub fn temporal_reach(&self) -> i64 {
        match self {
            Formula::Cq(_) | Formula::Top => 0,
            Formula::BoxPlus(r, a) | Formula::BoxMinus(r, a) => r.hi_i64() + a.temporal_reach(),
            Formula::Next(a) | Formula::Prev(a) => 1 + a.temporal_reach(),
            Formula::And(a, b) | Formula::Or(a, b) => a.temporal_reach().max(b.temporal_reach()),
            Formula::Until(r, a, b) | Formula::Since(r, a, b) => {
                r.hi_i64() + a.temporal_reach().max(b.temporal_reach())
            }
        }
    }

    pub fn is_next_form(&self) -> bool {
        match self {
            Formula::Cq(_) | Formula::Top => true,
            Formula::BoxPlus(..) | Formula::BoxMinus(..) | Formula::Until(..) | Formula::Since(..) => false,
            Formula::Next(a) | Formula::Prev(a) => a.is_next_form(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_next_form() && b.is_next_form(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Cq(q) => write!(f, "{{{q}}}"),
            Formula::Top => f.write_str("TOP"),
            Formula::And(a, b) => write!(f, "({a} AND {b})"),
            Formula::Or(a, b) => write!(f, "({a} OR {b})"),
            Formula::BoxPlus(r, a) => write!(f, "BOXP{r} {a}"),
            Formula::BoxMinus(r, a) => write!(f, "BOXM{r} {a}"),
            Formula::Until(r, a, b) => write!(f, "({a} UNTIL{r} {b})"),
            Formula::Since(r, a, b) => write!(f, "({a} SINCE{r} {b})"),
            Formula::Next(a) => write!(f, "NEXT {a}"),
            Formula::Prev(a) => write!(f, "PREV {a}"),
        }
    }
}

/// `φ(x)@w`: a formula whose CQ leaves share the answer variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mtcq {
    pub answer_vars: Vec<String>,
    pub formula: Formula,
}

impl Mtcq {
    /// Boolean formula `φ(a)`.
    pub fn instantiate(&self, answers: &[String]) -> Result<Formula, LogicError> {
        if answers.len() != self.answer_vars.len() {
            return Err(LogicError::AnswerArity { expected: self.answer_vars.len(), got: answers.len() });
        }
        let subst: Substitution =
            self.answer_vars.iter().zip(answers).map(|(v, a)| (v.clone(), Term::Const(a.clone()))).collect();
        Ok(self.formula.map_leaves(&|q| Cq::boolean(q.atoms.iter().map(|a| a.apply(&subst)).collect())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnnotatedFormula {
    pub formula: Formula,
    pub interval: Interval,
}

impl AnnotatedFormula {
    pub fn new(formula: Formula, interval: Interval) -> Self {
        AnnotatedFormula { formula, interval }
    }

    pub fn ground(atoms: Vec<Atom>, interval: Interval) -> Self {
        AnnotatedFormula { formula: Formula::Cq(Cq::boolean(atoms)), interval }
    }
}

impl fmt::Display for AnnotatedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @{}", self.formula, self.interval)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemporalFact {
    pub atom: Atom,
    pub interval: Interval,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalAbox {
    pub facts: Vec<TemporalFact>,
}

impl TemporalAbox {
    pub fn new(facts: Vec<TemporalFact>) -> Self {
        TemporalAbox { facts }
    }

    /// Ground atoms holding at time point `t`.
    pub fn snapshot(&self, t: i64) -> Vec<Atom> {
        let mut out: Vec<Atom> = Vec::new();
        for f in &self.facts {
            if f.interval.contains(t) && !out.contains(&f.atom) {
                out.push(f.atom.clone());
            }
        }
        out.sort();
        out
    }

    /// Indices of facts whose interval contains `t`.
    pub fn active(&self, t: i64) -> Vec<usize> {
        (0..self.facts.len()).filter(|&i| self.facts[i].interval.contains(t)).collect()
    }
}
