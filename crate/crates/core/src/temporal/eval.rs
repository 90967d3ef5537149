use std::collections::HashMap;

use thiserror::Error;

use super::formula::{Formula, Mtcq, TemporalAbox};
use super::interval::{intervals_from_points, Interval, IntervalError, OpRange};
use crate::deriver_sk::{chase_entails, chase_kb, ChaseConfig, ChaseResult, SkError};
use crate::graph::GraphError;
use crate::logic::{Atom, Cq, KnowledgeBase, LogicError};
use crate::search::SearchError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("window {0} must be finite")]
    UnboundedWindow(String),
    #[error("schema {0} does not apply: {1}")]
    Schema(&'static str, String),
    #[error("{0} is not entailed on {1}")]
    NotEntailed(String, String),
    #[error("the query is trivially true and needs no proof")]
    Trivial,
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Sk(#[from] SkError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Maximal intervals of `window` whose points satisfy the same ABox facts,
/// in temporal order. Infinite windows yield infinite outer rulers.
pub fn compute_rulers(tabox: &TemporalAbox, window: &Interval) -> Vec<Interval> {
    let mut cuts: Vec<i64> = Vec::new();
    for f in &tabox.facts {
        if let Some(l) = f.interval.lo() {
            cuts.push(l);
        }
        if let Some(h) = f.interval.hi() {
            cuts.push(h + 1);
        }
    }
    cuts.retain(|&c| window.lo().is_none_or(|l| c > l) && window.hi().is_none_or(|h| c <= h));
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::new();
    let mut lo = window.lo();
    for c in cuts {
        out.push(Interval::new(lo, Some(c - 1)).expect("cut inside window"));
        lo = Some(c);
    }
    out.push(Interval::new(lo, window.hi()).expect("cut inside window"));
    out
}

/// A point of `iv`, preferring its lower endpoint.
pub(crate) fn sample_point(iv: &Interval) -> i64 {
    iv.lo().or(iv.hi()).unwrap_or(0)
}

/// Certain answers of CQs at single time points. The TBox holds globally and
/// the atemporal ABox of `kb` holds at every point.
pub struct PointOracle<'a> {
    kb: &'a KnowledgeBase,
    tabox: &'a TemporalAbox,
    depth_atoms: usize,
    chases: HashMap<Vec<usize>, ChaseResult>,
}

impl<'a> PointOracle<'a> {
    pub fn new(kb: &'a KnowledgeBase, tabox: &'a TemporalAbox, query_atoms: usize) -> Self {
        PointOracle { kb, tabox, depth_atoms: query_atoms.max(1), chases: HashMap::new() }
    }

    /// The KB holding at time `t`.
    pub fn snapshot_kb(&self, t: i64) -> Result<KnowledgeBase, TemporalError> {
        let mut abox: Vec<Atom> = self.kb.abox.clone();
        for a in self.tabox.snapshot(t) {
            if !abox.contains(&a) {
                abox.push(a);
            }
        }
        Ok(KnowledgeBase::new(self.kb.tbox.clone(), abox)?)
    }

    pub fn holds(&mut self, q: &Cq, t: i64) -> Result<bool, TemporalError> {
        let key = self.tabox.active(t);
        if !self.chases.contains_key(&key) {
            let kb = self.snapshot_kb(t)?;
            let cfg = ChaseConfig::default_for(&kb, self.depth_atoms);
            self.chases.insert(key.clone(), chase_kb(&kb, cfg)?);
        }
        Ok(chase_entails(&self.chases[&key], q))
    }
}

/// Truth values of a Boolean formula on the points `lo..=hi`.
pub(crate) fn sat(oracle: &mut PointOracle, f: &Formula, lo: i64, hi: i64) -> Result<Vec<bool>, TemporalError> {
    if hi < lo {
        return Ok(Vec::new());
    }
    let len = (hi - lo + 1) as usize;
    let out = match f {
        Formula::Cq(q) => (lo..=hi).map(|t| oracle.holds(q, t)).collect::<Result<Vec<_>, _>>()?,
        Formula::Top => vec![true; len],
        Formula::And(a, b) => {
            let (x, y) = (sat(oracle, a, lo, hi)?, sat(oracle, b, lo, hi)?);
            x.iter().zip(&y).map(|(p, q)| *p && *q).collect()
        }
        Formula::Or(a, b) => {
            let (x, y) = (sat(oracle, a, lo, hi)?, sat(oracle, b, lo, hi)?);
            x.iter().zip(&y).map(|(p, q)| *p || *q).collect()
        }
        Formula::BoxPlus(r, a) => boxplus(oracle, *r, a, lo, hi)?,
        Formula::Next(a) => boxplus(oracle, OpRange::new(1, 1)?, a, lo, hi)?,
        Formula::BoxMinus(r, a) => boxminus(oracle, *r, a, lo, hi)?,
        Formula::Prev(a) => boxminus(oracle, OpRange::new(1, 1)?, a, lo, hi)?,
        Formula::Until(r, a, b) => {
            let (r1, r2) = (r.lo_i64(), r.hi_i64());
            let x = sat(oracle, a, lo, hi + r2)?;
            let y = sat(oracle, b, lo, hi + r2)?;
            (0..len).map(|i| (r1..=r2).any(|k| y[i + k as usize] && (0..k).all(|j| x[i + j as usize]))).collect()
        }
        Formula::Since(r, a, b) => {
            let (r1, r2) = (r.lo_i64(), r.hi_i64());
            let x = sat(oracle, a, lo - r2, hi)?;
            let y = sat(oracle, b, lo - r2, hi)?;
            let at = |i: usize, back: i64| i + r2 as usize - back as usize;
            (0..len).map(|i| (r1..=r2).any(|k| y[at(i, k)] && (0..k).all(|j| x[at(i, j)]))).collect()
        }
    };
    Ok(out)
}

fn boxplus(oracle: &mut PointOracle, r: OpRange, a: &Formula, lo: i64, hi: i64) -> Result<Vec<bool>, TemporalError> {
    let (r1, r2) = (r.lo_i64(), r.hi_i64());
    let x = sat(oracle, a, lo + r1, hi + r2)?;
    let len = (hi - lo + 1) as usize;
    Ok((0..len).map(|i| (0..=(r2 - r1) as usize).all(|k| x[i + k])).collect())
}

fn boxminus(oracle: &mut PointOracle, r: OpRange, a: &Formula, lo: i64, hi: i64) -> Result<Vec<bool>, TemporalError> {
    let (r1, r2) = (r.lo_i64(), r.hi_i64());
    let x = sat(oracle, a, lo - r2, hi - r1)?;
    let len = (hi - lo + 1) as usize;
    Ok((0..len).map(|i| (0..=(r2 - r1) as usize).all(|k| x[i + k])).collect())
}

/// Maximal intervals within `window` on which the answer tuple is certain,
/// by point-wise evaluation over the per-point canonical models.
pub fn eval_mtcq(
    kb: &KnowledgeBase,
    tabox: &TemporalAbox,
    mtcq: &Mtcq,
    answers: &[String],
    window: &Interval,
) -> Result<Vec<Interval>, TemporalError> {
    let f = mtcq.instantiate(answers)?;
    eval_formula(kb, tabox, &f, window)
}

/// [`eval_mtcq`] for an already instantiated Boolean formula.
pub fn eval_formula(
    kb: &KnowledgeBase,
    tabox: &TemporalAbox,
    f: &Formula,
    window: &Interval,
) -> Result<Vec<Interval>, TemporalError> {
    let (Some(lo), Some(hi)) = (window.lo(), window.hi()) else {
        return Err(TemporalError::UnboundedWindow(window.to_string()));
    };
    let atoms = f.leaves().iter().map(|q| q.atoms.len()).max().unwrap_or(1);
    let mut oracle = PointOracle::new(kb, tabox, atoms);
    let truth = sat(&mut oracle, f, lo, hi)?;
    let points: Vec<i64> = (lo..=hi).zip(truth).filter(|(_, b)| *b).map(|(t, _)| t).collect();
    Ok(intervals_from_points(&points))
}
