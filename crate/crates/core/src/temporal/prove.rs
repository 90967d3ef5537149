//! Temporal proof construction. CQ leaves are proved per ruler with the
//! atemporal search and lifted to intervals; operators are then resolved one
//! at a time with COAL after each, and SEP is the last step.

use std::collections::{BTreeMap, HashMap};

use super::eval::{compute_rulers, sample_point, PointOracle, TemporalError};
use super::formula::{AnnotatedFormula, Formula, Mtcq, TemporalAbox};
use super::interval::{coalesce, Interval, OpRange};
use super::rules::{infer_temporal, TemporalRule};
use crate::graph::{tree_size, Proof, ProofGraph, Sentence, VertexId};
use crate::logic::{Atom, Cq, KnowledgeBase};
use crate::search::{min_tree_size, Deriver, Measure, SearchError, SearchGoal};

type Piece = (AnnotatedFormula, VertexId);

/// Window of rulers a proof for `target` may use: the target padded by the
/// formula's temporal reach, or the whole timeline for unbounded targets.
pub fn proof_window(f: &Formula, target: &Interval) -> Interval {
    if !target.is_finite() {
        return Interval::all();
    }
    let r = f.temporal_reach();
    Interval::new(target.lo().map(|x| x - r), target.hi().map(|x| x + r)).expect("padding keeps order")
}

/// Proof of `mtcq(answers)@target` under the temporal Skolemized deriver.
pub fn temporal_min_proof(
    kb: &KnowledgeBase,
    tabox: &TemporalAbox,
    mtcq: &Mtcq,
    answers: &[String],
    target: &Interval,
) -> Result<Proof, TemporalError> {
    let f = mtcq.instantiate(answers)?;
    prove_formula(kb, tabox, &f, target)
}

/// [`temporal_min_proof`] for an already instantiated Boolean formula.
pub fn prove_formula(
    kb: &KnowledgeBase,
    tabox: &TemporalAbox,
    f: &Formula,
    target: &Interval,
) -> Result<Proof, TemporalError> {
    if *f == Formula::Top {
        return Err(TemporalError::Trivial);
    }
    let window = proof_window(f, target);
    let mut b = Builder::new(kb, tabox, compute_rulers(tabox, &window));
    let pieces = b.derive(f)?;
    let Some((af, v)) = pieces.into_iter().find(|(af, _)| target.is_subset_of(&af.interval)) else {
        return Err(TemporalError::NotEntailed(f.to_string(), target.to_string()));
    };
    let sink = if af.interval == *target { v } else { b.apply(TemporalRule::Sep(*target), &[(af, v)])? };
    Ok(Proof { graph: b.graph, sink }.restrict_to_sink())
}

struct Builder<'a> {
    kb: &'a KnowledgeBase,
    tabox: &'a TemporalAbox,
    rulers: Vec<Interval>,
    graph: ProofGraph,
    labels: HashMap<Sentence, VertexId>,
    derived: BTreeMap<Formula, Vec<Piece>>,
    atemporal: HashMap<(Vec<usize>, Cq), Option<Proof>>,
}

impl<'a> Builder<'a> {
    fn new(kb: &'a KnowledgeBase, tabox: &'a TemporalAbox, rulers: Vec<Interval>) -> Self {
        Builder {
            kb,
            tabox,
            rulers,
            graph: ProofGraph::new(),
            labels: HashMap::new(),
            derived: BTreeMap::new(),
            atemporal: HashMap::new(),
        }
    }

    /// Adds a derived vertex unless one with the same label exists.
    fn add(&mut self, label: AnnotatedFormula, sources: Vec<VertexId>, rule: &str) -> VertexId {
        let s = Sentence::Annotated(label);
        if let Some(v) = self.labels.get(&s) {
            return *v;
        }
        let v = self.graph.add_vertex(s.clone());
        self.graph.add_edge(sources, v, rule);
        self.labels.insert(s, v);
        v
    }

    fn apply(&mut self, rule: TemporalRule, premises: &[Piece]) -> Result<VertexId, TemporalError> {
        let labels: Vec<AnnotatedFormula> = premises.iter().map(|(a, _)| a.clone()).collect();
        let out = infer_temporal(&rule, &labels)?;
        Ok(self.add(out, premises.iter().map(|(_, v)| *v).collect(), rule.name()))
    }

    fn piece(&mut self, rule: TemporalRule, premises: &[Piece]) -> Result<Option<Piece>, TemporalError> {
        let labels: Vec<AnnotatedFormula> = premises.iter().map(|(a, _)| a.clone()).collect();
        match infer_temporal(&rule, &labels) {
            Ok(out) => {
                let v = self.add(out.clone(), premises.iter().map(|(_, v)| *v).collect(), rule.name());
                Ok(Some((out, v)))
            }
            Err(TemporalError::Schema(..)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Maximal intervals on which `f` is derived, each with its vertex.
    fn derive(&mut self, f: &Formula) -> Result<Vec<Piece>, TemporalError> {
        if let Some(p) = self.derived.get(f) {
            return Ok(p.clone());
        }
        let mut out: Vec<Piece> = Vec::new();
        match f {
            Formula::Cq(q) => out = self.cq_pieces(q)?,
            Formula::Top => out.extend(self.piece(TemporalRule::Top(Interval::all()), &[])?),
            Formula::And(a, b) => {
                let (pa, pb) = (self.derive(a)?, self.derive(b)?);
                for x in &pa {
                    for y in &pb {
                        out.extend(self.piece(TemporalRule::Conj, &[x.clone(), y.clone()])?);
                    }
                }
            }
            Formula::Or(a, b) => {
                for x in self.derive(a)? {
                    out.extend(self.piece(TemporalRule::DisjLeft((**b).clone()), &[x])?);
                }
                for y in self.derive(b)? {
                    out.extend(self.piece(TemporalRule::DisjRight((**a).clone()), &[y])?);
                }
            }
            Formula::BoxPlus(r, a) => out = self.unary(TemporalRule::BoxPlus(*r), a)?,
            Formula::BoxMinus(r, a) => out = self.unary(TemporalRule::BoxMinus(*r), a)?,
            Formula::Next(a) => out = self.unary(TemporalRule::Next, a)?,
            Formula::Prev(a) => out = self.unary(TemporalRule::Prev, a)?,
            Formula::Until(r, a, b) | Formula::Since(r, a, b) => {
                let until = matches!(f, Formula::Until(..));
                if r.lo > 0 {
                    let rule = if until { TemporalRule::Until(*r) } else { TemporalRule::Since(*r) };
                    let (pa, pb) = (self.derive(a)?, self.derive(b)?);
                    for x in &pa {
                        for y in &pb {
                            out.extend(self.piece(rule.clone(), &[x.clone(), y.clone()])?);
                        }
                    }
                } else {
                    let now = if until {
                        TemporalRule::UntilNow((**a).clone(), r.hi_i64())
                    } else {
                        TemporalRule::SinceNow((**a).clone(), r.hi_i64())
                    };
                    for y in self.derive(b)? {
                        out.extend(self.piece(now.clone(), &[y])?);
                    }
                    if r.hi > 0 {
                        let later = OpRange::new(1, r.hi_i64())?;
                        let (g, rule) = if until {
                            (Formula::Until(later, a.clone(), b.clone()), TemporalRule::UntilLater)
                        } else {
                            (Formula::Since(later, a.clone(), b.clone()), TemporalRule::SinceLater)
                        };
                        for x in self.derive(&g)? {
                            out.extend(self.piece(rule.clone(), &[x])?);
                        }
                    }
                }
            }
        }
        let out = self.coalesce_pieces(out)?;
        self.derived.insert(f.clone(), out.clone());
        Ok(out)
    }

    fn unary(&mut self, rule: TemporalRule, a: &Formula) -> Result<Vec<Piece>, TemporalError> {
        let mut out = Vec::new();
        for x in self.derive(a)? {
            out.extend(self.piece(rule.clone(), &[x])?);
        }
        Ok(out)
    }

    /// Groups pieces into maximal contiguous runs and covers each run with
    /// as few pieces as possible, joined by one COAL step.
    fn coalesce_pieces(&mut self, mut pieces: Vec<Piece>) -> Result<Vec<Piece>, TemporalError> {
        pieces.sort_by_key(|a| a.0.interval);
        pieces.dedup_by(|a, b| a.0.interval == b.0.interval);
        let runs = coalesce(pieces.iter().map(|p| p.0.interval).collect());
        let mut out = Vec::new();
        for run in runs {
            let members: Vec<&Piece> = pieces.iter().filter(|p| p.0.interval.is_subset_of(&run)).collect();
            let cover = greedy_cover(&members, &run);
            if cover.len() == 1 {
                out.push(cover[0].clone());
            } else {
                let v = self.apply(TemporalRule::Coal, &cover)?;
                let af = AnnotatedFormula::new(cover[0].0.formula.clone(), run);
                out.push((af, v));
            }
        }
        Ok(out)
    }

    /// Lifted atemporal proofs of `q`, one per maximal run of rulers on
    /// which the same leaf facts stay active.
    fn cq_pieces(&mut self, q: &Cq) -> Result<Vec<Piece>, TemporalError> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.rulers.len() {
            let ruler = self.rulers[i];
            let t = sample_point(&ruler);
            let Some(p) = self.atemporal(q, t)? else {
                i += 1;
                continue;
            };
            let mut span = Interval::all();
            let mut sources: BTreeMap<Atom, Interval> = BTreeMap::new();
            for v in p.graph.leaves() {
                let Some(a) = p.graph.label(v).as_ground_atom() else { continue };
                if self.kb.abox.contains(a) || sources.contains_key(a) {
                    continue;
                }
                let fact = self
                    .tabox
                    .facts
                    .iter()
                    .filter(|f| &f.atom == a && ruler.is_subset_of(&f.interval))
                    .max_by_key(|f| f.interval.hi().map_or((true, 0), |h| (false, h)))
                    .expect("leaf is active on its ruler")
                    .interval;
                span = span.intersect(&fact).expect("facts share the ruler");
                sources.insert(a.clone(), fact);
            }
            out.push(self.lift(&p, span, &sources)?);
            match span.hi() {
                None => break,
                Some(h) => {
                    while i < self.rulers.len() && self.rulers[i].hi().is_some_and(|x| x <= h) {
                        i += 1;
                    }
                }
            }
        }
        Ok(out)
    }

    fn atemporal(&mut self, q: &Cq, t: i64) -> Result<Option<Proof>, TemporalError> {
        let key = (self.tabox.active(t), q.clone());
        if let Some(p) = self.atemporal.get(&key) {
            return Ok(p.clone());
        }
        let oracle = PointOracle::new(self.kb, self.tabox, q.atoms.len());
        let kb = oracle.snapshot_kb(t)?;
        let goal = SearchGoal::new(kb, q.clone(), Vec::new(), Deriver::Sk, Measure::TreeSize);
        let p = match min_tree_size(&goal) {
            Ok(p) => Some(p),
            Err(SearchError::NotEntailed(_)) => None,
            Err(e) => return Err(e.into()),
        };
        self.atemporal.insert(key, p.clone());
        Ok(p)
    }

    /// Copies an atemporal proof into the graph with every CQ annotated by
    /// `span`. Temporal leaves are cut down to `span` with SEP.
    fn lift(&mut self, p: &Proof, span: Interval, sources: &BTreeMap<Atom, Interval>) -> Result<Piece, TemporalError> {
        let mut map: HashMap<VertexId, VertexId> = HashMap::new();
        let order = p.graph.topo_order()?;
        for v in order {
            let label = p.graph.label(v);
            let incoming = p.graph.incoming(v);
            let lifted = match label {
                Sentence::Cq(c) => Sentence::Annotated(AnnotatedFormula::new(Formula::Cq(c.clone()), span)),
                other => other.clone(),
            };
            let nv = match incoming.first() {
                Some(e) => {
                    let srcs: Vec<VertexId> = e.sources.iter().map(|s| map[s]).collect();
                    let rule = match e.rule.as_str() {
                        "MPs" => "TMP",
                        "Cs" => "TCs",
                        _ => "TEs",
                    };
                    let nv = self.graph.add_vertex(lifted);
                    self.graph.add_edge(srcs, nv, rule);
                    nv
                }
                None => match label.as_ground_atom().and_then(|a| sources.get(a).map(|iv| (a, iv))) {
                    Some((a, iv)) if *iv != span => {
                        let leaf =
                            self.graph.add_vertex(Sentence::Annotated(AnnotatedFormula::ground(vec![a.clone()], *iv)));
                        let nv = self.graph.add_vertex(lifted);
                        self.graph.add_edge(vec![leaf], nv, "SEP");
                        nv
                    }
                    _ => self.graph.add_vertex(lifted),
                },
            };
            map.insert(v, nv);
        }
        let Sentence::Annotated(af) = self.graph.label(map[&p.sink]).clone() else {
            unreachable!("sink of a CQ proof is a CQ")
        };
        Ok((af, map[&p.sink]))
    }
}

fn hi_key(h: Option<i64>) -> (bool, i64) {
    h.map_or((true, 0), |x| (false, x))
}

fn greedy_cover(members: &[&Piece], run: &Interval) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    let mut reached: Option<Option<i64>> = None;
    loop {
        let next = members
            .iter()
            .filter(|p| match reached {
                None => p.0.interval.lo() == run.lo(),
                Some(None) => false,
                Some(Some(h)) => p.0.interval.lo().is_none_or(|l| l <= h + 1),
            })
            .max_by_key(|p| hi_key(p.0.interval.hi()))
            .expect("run is covered by its members");
        out.push((*next).clone());
        reached = Some(next.0.interval.hi());
        if next.0.interval.hi() == run.hi() {
            return out;
        }
    }
}

/// Upper bound on the tree size of proofs built by [`prove_formula`].
///
/// With `n` rulers in the proof window and `t` the largest minimal
/// atemporal tree size of a CQ leaf on any ruler, a CQ has at most `n`
/// pieces of tree size at most `2t`. Each operator combines at most
/// `K(a) + K(b)` pieces and joins them with one COAL, where `K` counts
/// pieces. The final SEP adds one. For a fixed formula the bound is
/// polynomial in `n` and `t`; `n` is at most `|window|` for finite targets
/// and at most `2·|tem(A)| + 1` otherwise.
pub fn tree_size_bound(f: &Formula, rulers: u128, cq_tree_size: u128) -> u128 {
    fn go(f: &Formula, n: u128, t: u128) -> (u128, u128) {
        let (k, x) = match f {
            Formula::Cq(_) => (n, 2 * t),
            Formula::Top => (1, 1),
            Formula::And(a, b) => {
                let ((ka, ba), (kb, bb)) = (go(a, n, t), go(b, n, t));
                (ka + kb, 1 + ba + bb)
            }
            Formula::Until(r, a, b) | Formula::Since(r, a, b) if r.lo > 0 => {
                let ((ka, ba), (kb, bb)) = (go(a, n, t), go(b, n, t));
                (ka + kb, 1 + ba + bb)
            }
            Formula::Or(a, b) => {
                let ((ka, ba), (kb, bb)) = (go(a, n, t), go(b, n, t));
                (ka + kb, 1 + ba.max(bb))
            }
            Formula::Until(r, a, b) | Formula::Since(r, a, b) => {
                let (kb, bb) = go(b, n, t);
                if r.hi == 0 {
                    (kb, 1 + bb)
                } else {
                    let later = OpRange::new(1, r.hi_i64()).expect("positive range");
                    let (ku, bu) = go(&Formula::Until(later, a.clone(), b.clone()), n, t);
                    (kb + ku, 1 + bb.max(bu))
                }
            }
            Formula::BoxPlus(_, a) | Formula::BoxMinus(_, a) | Formula::Next(a) | Formula::Prev(a) => {
                let (ka, ba) = go(a, n, t);
                (ka, 1 + ba)
            }
        };
        (k, 1 + k * x)
    }
    go(f, rulers.max(1), cq_tree_size).1 + 1
}

/// Inputs of [`tree_size_bound`] for a concrete instance: the ruler count of
/// the proof window and the largest minimal atemporal tree size of a CQ
/// leaf over those rulers.
pub fn tree_size_bound_parameters(
    kb: &KnowledgeBase,
    tabox: &TemporalAbox,
    f: &Formula,
    target: &Interval,
) -> Result<(u128, u128), TemporalError> {
    let rulers = compute_rulers(tabox, &proof_window(f, target));
    let mut b = Builder::new(kb, tabox, rulers.clone());
    let mut t = 1;
    for q in f.leaves() {
        for r in &rulers {
            if let Some(p) = b.atemporal(q, sample_point(r))? {
                t = t.max(tree_size(&p)?);
            }
        }
    }
    Ok((rulers.len() as u128, t))
}
