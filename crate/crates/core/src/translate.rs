//! Translation of proofs between the CQ deriver and the Skolemized deriver.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::canon::match_atoms;
use crate::deriver_cq::{infer_c, infer_mp_with, infer_t, CqError, CqKind};
use crate::deriver_sk::{SkError, SkKind};
use crate::graph::{unravel, GraphError, Proof, ProofGraph, Sentence, VertexId};
use crate::logic::{Atom, Cq, KnowledgeBase, LogicError, SkolemRule, Substitution, TboxEntry, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("input is not a proof of the goal: {0}")]
    NotAProof(String),
    #[error("no grounding found for `{0}`")]
    Unmatched(String),
    #[error(transparent)]
    Cq(#[from] CqError),
    #[error(transparent)]
    Sk(#[from] SkError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Size limit for [`cq_to_sk`]: `|p|·(h+1)+2` with `h` the largest rule head.
/// For a tree `p` concluding a CQ with `k` atoms the output is a tree whose
/// atoms each have a linear derivation, giving `k·(2·|p|·h+1)+2`.
pub fn cq_to_sk_bound(kb: &KnowledgeBase, p: &Proof) -> usize {
    let h = kb.tbox.iter().map(|e| e.to_rule().head.len()).max().unwrap_or(1).max(1);
    let n = p.graph.vertex_count();
    if !p.is_tree() {
        return n * (h + 1) + 2;
    }
    let k = p.conclusion().as_cq().map_or(1, |q| q.atoms.len());
    k * (2 * n * h + 1) + 2
}

/// Size limit for [`sk_to_cq`]: `|p|·(b+2)+2` with `b` the largest rule body.
pub fn sk_to_cq_bound(kb: &KnowledgeBase, p: &Proof) -> usize {
    let b = kb.tbox.iter().map(|e| e.to_rule().body.len()).max().unwrap_or(1).max(1);
    p.graph.vertex_count() * (b + 2) + 2
}

fn skolem_rule_of(kb: &KnowledgeBase, rules: &[SkolemRule], s: &Sentence) -> Option<(TboxEntry, SkolemRule)> {
    let e = s.as_entry()?;
    let i = kb.tbox_index(&e)?;
    Some((e, rules[i].clone()))
}

/// Skolemized proof with the same conclusion as an R_cq proof. Tree inputs
/// give tree outputs.
pub fn cq_to_sk(kb: &KnowledgeBase, p: &Proof, goal: &Cq) -> Result<Proof, TranslateError> {
    if !p.proves(&Sentence::Cq(goal.clone())) {
        return Err(TranslateError::NotAProof(p.conclusion().to_string()));
    }
    let rules = kb.skolem_rules()?;
    let order = p.graph.topo_order()?;
    let mut out = SkBuilder::default();
    let mut ground: BTreeMap<VertexId, Vec<Atom>> = BTreeMap::new();
    for v in order {
        let Sentence::Cq(q) = p.graph.label(v) else { continue };
        let inc = p.graph.incoming(v);
        let Some(edge) = inc.first() else {
            if !q.is_ground() {
                return Err(TranslateError::NotAProof(format!("non-ground leaf {q}")));
            }
            for a in &q.atoms {
                out.leaf(a);
            }
            ground.insert(v, q.atoms.clone());
            continue;
        };
        let mut avail: Vec<Atom> = Vec::new();
        let mut rule: Option<(TboxEntry, SkolemRule)> = None;
        for s in &edge.sources {
            match p.graph.label(*s) {
                Sentence::Cq(_) => {
                    for a in ground.get(s).ok_or_else(|| TranslateError::Unmatched(p.graph.label(*s).to_string()))? {
                        if !avail.contains(a) {
                            avail.push(a.clone());
                        }
                    }
                }
                other => rule = rule.or_else(|| skolem_rule_of(kb, &rules, other)),
            }
        }
        let found = match &rule {
            None => first_match(&q.atoms, &avail).map(|img| (img, Vec::new())),
            Some((_, sr)) => match_atoms(&sr.body, &avail).into_iter().find_map(|mu| {
                let heads: Vec<Atom> = sr.head.iter().map(|h| h.apply(&mu)).collect();
                let mut ext = avail.clone();
                ext.extend(heads.iter().cloned());
                first_match(&q.atoms, &ext).map(|img| (img, vec![(mu, heads)]))
            }),
        };
        let (img, steps) = found.ok_or_else(|| TranslateError::Unmatched(q.to_string()))?;
        if let Some((entry, sr)) = &rule {
            for (mu, heads) in steps {
                let mut prem: Vec<Atom> = Vec::new();
                for b in &sr.body {
                    let a = b.apply(&mu);
                    if !prem.contains(&a) {
                        prem.push(a);
                    }
                }
                for h in heads {
                    out.derive(&h, &prem, entry);
                }
            }
        }
        ground.insert(v, img);
    }
    let sink_atoms = ground.get(&p.sink).ok_or_else(|| TranslateError::Unmatched(p.conclusion().to_string()))?;
    let conj = first_match(&goal.atoms, sink_atoms).ok_or_else(|| TranslateError::Unmatched(goal.to_string()))?;
    let sk = out.finish(&conj, goal).restrict_to_sink();
    if p.is_tree() {
        return Ok(unravel(&sk.graph, sk.sink)?.0);
    }
    Ok(sk)
}

/// Ground image of `pattern` under its first match into `facts`.
fn first_match(pattern: &[Atom], facts: &[Atom]) -> Option<Vec<Atom>> {
    let s = match_atoms(pattern, facts).into_iter().next()?;
    Some(pattern.iter().map(|a| a.apply(&s)).collect())
}

#[derive(Default)]
struct SkBuilder {
    g: ProofGraph,
    atoms: HashMap<Atom, VertexId>,
    axioms: HashMap<TboxEntry, VertexId>,
}

impl SkBuilder {
    fn leaf(&mut self, a: &Atom) -> VertexId {
        if let Some(v) = self.atoms.get(a) {
            return *v;
        }
        let v = self.g.add_vertex(Sentence::atom(a.clone()));
        self.atoms.insert(a.clone(), v);
        v
    }

    fn derive(&mut self, a: &Atom, premises: &[Atom], entry: &TboxEntry) {
        if self.atoms.contains_key(a) {
            return;
        }
        let mut sources: Vec<VertexId> = premises.iter().map(|p| self.atoms[p]).collect();
        let ax = match self.axioms.get(entry) {
            Some(v) => *v,
            None => {
                let v = self.g.add_vertex(Sentence::from_entry(entry));
                self.axioms.insert(entry.clone(), v);
                v
            }
        };
        sources.push(ax);
        let v = self.g.add_vertex(Sentence::atom(a.clone()));
        self.g.add_edge(sources, v, SkKind::MPs.name());
        self.atoms.insert(a.clone(), v);
    }

    fn finish(mut self, conj: &[Atom], goal: &Cq) -> Proof {
        let mut top = self.atoms[&conj[0]];
        if conj.len() > 1 {
            let srcs = conj.iter().map(|a| self.atoms[a]).collect();
            let v = self.g.add_vertex(Sentence::Cq(Cq::boolean(conj.to_vec())));
            self.g.add_edge(srcs, v, SkKind::Cs.name());
            top = v;
        }
        let target = Sentence::Cq(goal.clone());
        if !self.g.label(top).same_as(&target) {
            let v = self.g.add_vertex(target);
            self.g.add_edge(vec![top], v, SkKind::Es.name());
            top = v;
        }
        Proof { graph: self.g, sink: top }
    }
}

/// Semi-linear R_cq proof with the same conclusion as a Skolemized proof.
/// The output is always a tree.
pub fn sk_to_cq(kb: &KnowledgeBase, p: &Proof, goal: &Cq) -> Result<Proof, TranslateError> {
    if !p.proves(&Sentence::Cq(goal.clone())) {
        return Err(TranslateError::NotAProof(p.conclusion().to_string()));
    }
    let rules = kb.skolem_rules()?;
    let order = p.graph.topo_order()?;
    let mut derived_by: BTreeMap<Atom, (TboxEntry, SkolemRule, Vec<Atom>)> = BTreeMap::new();
    let mut leaves: Vec<Atom> = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    for &v in &order {
        let Some(a) = p.graph.label(v).as_ground_atom() else { continue };
        if !atoms.contains(a) {
            atoms.push(a.clone());
        }
        let inc = p.graph.incoming(v);
        match inc.first() {
            None => {
                if !leaves.contains(a) && !derived_by.contains_key(a) {
                    leaves.push(a.clone());
                }
            }
            Some(e) => {
                if derived_by.contains_key(a) || leaves.contains(a) {
                    continue;
                }
                let mut prem = Vec::new();
                let mut rule = None;
                for s in &e.sources {
                    match p.graph.label(*s).as_ground_atom() {
                        Some(x) => prem.push(x.clone()),
                        None => rule = rule.or_else(|| skolem_rule_of(kb, &rules, p.graph.label(*s))),
                    }
                }
                let (entry, sr) =
                    rule.ok_or_else(|| TranslateError::NotAProof(format!("edge into {a} has no axiom")))?;
                derived_by.insert(a.clone(), (entry, sr, prem));
            }
        }
    }
    let conj = first_match(&goal.atoms, &atoms).ok_or_else(|| TranslateError::Unmatched(goal.to_string()))?;
    let final_set: BTreeSet<Atom> = conj.iter().cloned().collect();

    // Atoms the conjunction depends on, and the MP_s steps producing them
    // grouped by axiom and premises, in dependency order.
    let mut needed: BTreeSet<Atom> = BTreeSet::new();
    let mut stack: Vec<Atom> = conj.clone();
    while let Some(a) = stack.pop() {
        if needed.insert(a.clone()) {
            if let Some((_, _, prem)) = derived_by.get(&a) {
                stack.extend(prem.iter().cloned());
            }
        }
    }
    let mut groups: Vec<(TboxEntry, SkolemRule, Vec<Atom>, Vec<Atom>)> = Vec::new();
    for a in &atoms {
        if !needed.contains(a) {
            continue;
        }
        let Some((entry, sr, prem)) = derived_by.get(a) else { continue };
        match groups.iter_mut().find(|(e, _, p, _)| e == entry && p == prem) {
            Some(g) => g.3.push(a.clone()),
            None => groups.push((entry.clone(), sr.clone(), prem.clone(), vec![a.clone()])),
        }
    }
    let used_leaves: Vec<Atom> = leaves.iter().filter(|a| needed.contains(*a)).cloned().collect();
    if used_leaves.is_empty() {
        return Err(TranslateError::NotAProof("no ABox assertion is used".into()));
    }

    let mut g = ProofGraph::new();
    let mut names: BTreeMap<Term, Term> = BTreeMap::new();
    let lift = |a: &Atom, names: &BTreeMap<Term, Term>| Atom {
        pred: a.pred.clone(),
        args: a.args.iter().map(|t| names.get(t).cloned().unwrap_or_else(|| t.clone())).collect(),
    };
    let mut cur = Cq::boolean(vec![used_leaves[0].clone()]);
    let mut cur_v = g.add_vertex(Sentence::Cq(cur.clone()));
    for a in &used_leaves[1..] {
        let lv = g.add_vertex(Sentence::atom(a.clone()));
        cur = infer_c(&cur, &Cq::boolean(vec![a.clone()]))?;
        let v = g.add_vertex(Sentence::Cq(cur.clone()));
        g.add_edge(vec![cur_v, lv], v, CqKind::C.name());
        cur_v = v;
    }
    for (k, (entry, sr, prem, concl)) in groups.iter().enumerate() {
        let later: BTreeSet<&Atom> = groups[k + 1..].iter().flat_map(|g| g.2.iter()).chain(final_set.iter()).collect();
        let rule = entry.to_rule();
        let sigma = match_atoms(&sr.body, prem)
            .into_iter()
            .find(|s| concl.iter().all(|c| sr.head.iter().any(|h| &h.apply(s) == c)))
            .ok_or_else(|| TranslateError::Unmatched(format!("{} from {entry}", concl[0])))?;
        let pi: Substitution =
            sigma.iter().map(|(x, t)| (x.clone(), names.get(t).cloned().unwrap_or_else(|| t.clone()))).collect();
        let add: Vec<usize> = (0..sr.head.len()).filter(|&i| concl.contains(&sr.head[i].apply(&sigma))).collect();
        let mut drop: Vec<Atom> = Vec::new();
        for a in prem {
            if !later.contains(a) {
                let l = lift(a, &names);
                if !drop.contains(&l) {
                    drop.push(l);
                }
            }
        }
        let (next, full) = infer_mp_with(&cur, &rule, &pi, &drop, &add)?;
        for &i in &add {
            let ground = sr.head[i].apply(&sigma);
            let lifted = rule.head[i].apply(&full);
            for (gt, lt) in ground.args.iter().zip(&lifted.args) {
                if matches!(gt, Term::Skolem(..)) {
                    names.entry(gt.clone()).or_insert_with(|| lt.clone());
                }
            }
        }
        let ax = g.add_vertex(Sentence::from_entry(entry));
        let v = g.add_vertex(Sentence::Cq(next.clone()));
        g.add_edge(vec![cur_v, ax], v, CqKind::Mp.name());
        cur = next;
        cur_v = v;
    }
    let target = Sentence::Cq(goal.clone());
    if !g.label(cur_v).same_as(&target) {
        let theta = match_atoms(&goal.atoms, &cur.atoms)
            .into_iter()
            .next()
            .ok_or_else(|| TranslateError::Unmatched(goal.to_string()))?;
        let vars = goal.vars();
        let trule = infer_t(&goal.atoms, &vars)?;
        let tv = g.add_vertex(Sentence::Rule(trule.clone()));
        g.add_edge(vec![], tv, CqKind::T.name());
        let mut drop: Vec<Atom> = Vec::new();
        for a in &goal.atoms {
            let img = a.apply(&theta);
            if !drop.contains(&img) {
                drop.push(img);
            }
        }
        let add: Vec<usize> = (0..trule.head.len()).collect();
        let (next, _) = infer_mp_with(&cur, &trule, &theta, &drop, &add)?;
        let v = g.add_vertex(Sentence::Cq(next));
        g.add_edge(vec![cur_v, tv], v, CqKind::Mp.name());
        cur_v = v;
    }
    Ok(Proof { graph: g, sink: cur_v })
}
