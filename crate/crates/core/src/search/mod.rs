//! Minimal-proof search over the Skolemized derivation structure.

mod matcher;
mod oracle;
mod size;
mod tree_shaped;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deriver_sk::{chase, chase_entails, ChaseConfig, ChaseResult, SkEdge, SkError, SkKind};
use crate::graph::{self, Proof, ProofGraph, Sentence, VertexId};
use crate::logic::{Cq, KnowledgeBase, LogicError, SkolemRule};
use matcher::Matcher;

pub use oracle::brute_force_min;
pub use size::min_size;
pub use tree_shaped::{build_compressed, cost_graph, tree_shaped_min, CompressedStructure, CostGraph, Ind};

pub const DEFAULT_EXPANSION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Deriver {
    Cq,
    Sk,
    SkPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    Size,
    TreeSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("the knowledge base does not entail {0} within the chase bound")]
    NotEntailed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("search exceeded the cap of {0} expansions")]
    Cap(usize),
    #[error("query is not tree-shaped")]
    NotTreeShaped,
    #[error("no bound given")]
    NoBound,
    #[error(transparent)]
    Sk(#[from] SkError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl SearchError {
    /// True for errors caused by a resource cap rather than by the input.
    pub fn is_cap(&self) -> bool {
        matches!(self, SearchError::Cap(_) | SearchError::Sk(SkError::FactCap(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchGoal {
    pub kb: KnowledgeBase,
    pub query: Cq,
    pub answer: Vec<String>,
    pub deriver: Deriver,
    pub measure: Measure,
    pub bound: Option<u128>,
    pub chase: Option<ChaseConfig>,
    pub expansion_cap: usize,
}

impl SearchGoal {
    pub fn new(kb: KnowledgeBase, query: Cq, answer: Vec<String>, deriver: Deriver, measure: Measure) -> Self {
        SearchGoal {
            kb,
            query,
            answer,
            deriver,
            measure,
            bound: None,
            chase: None,
            expansion_cap: DEFAULT_EXPANSION_CAP,
        }
    }

    pub fn with_bound(mut self, n: u128) -> Self {
        self.bound = Some(n);
        self
    }

    pub fn with_chase(mut self, cfg: ChaseConfig) -> Self {
        self.chase = Some(cfg);
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.expansion_cap = cap;
        self
    }

    pub fn chase_config(&self) -> ChaseConfig {
        self.chase.unwrap_or_else(|| ChaseConfig::default_for(&self.kb, self.query.atoms.len()))
    }

    fn require_skolem(&self) -> Result<(), SearchError> {
        if self.deriver == Deriver::Cq {
            return Err(SearchError::Unsupported(
                "direct search over the CQ deriver; search with sk and translate the proof".into(),
            ));
        }
        Ok(())
    }
}

/// How a chase atom is justified in a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Just {
    Leaf,
    Edge(usize),
}

/// The bounded derivation structure of a goal.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub goal: Cq,
    pub chase: ChaseResult,
    pub edges: Vec<SkEdge>,
    pub incoming: Vec<Vec<usize>>,
    pub in_abox: Vec<bool>,
    pub by_pred: BTreeMap<String, Vec<usize>>,
}

pub(crate) fn prepare(g: &SearchGoal) -> Result<Prepared, SearchError> {
    let rules: Vec<SkolemRule> = g.kb.skolem_rules()?;
    let goal = g.query.instantiate(&g.answer)?;
    let res = chase(&g.kb, &rules, g.chase_config())?;
    if !chase_entails(&res, &goal) {
        return Err(SearchError::NotEntailed(goal.to_string()));
    }
    let edges = res.hyperedges(&rules);
    let mut incoming = vec![Vec::new(); res.facts.len()];
    for (i, e) in edges.iter().enumerate() {
        incoming[e.conclusion].push(i);
    }
    let in_abox = res.witness.iter().map(Option::is_none).collect();
    let by_pred = res.by_pred().into_iter().map(|(p, v)| (p.to_string(), v)).collect();
    Ok(Prepared { goal, chase: res, edges, incoming, in_abox, by_pred })
}

impl Prepared {
    pub fn label(&self, i: usize) -> String {
        self.chase.facts[i].to_string()
    }

    /// Goal atom indices ordered so each atom shares variables with earlier ones when possible.
    pub fn connected_order(&self) -> Vec<usize> {
        let atoms = &self.goal.atoms;
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut left: Vec<usize> = (0..atoms.len()).collect();
        let mut out = Vec::new();
        while !left.is_empty() {
            let pos = left.iter().position(|&i| atoms[i].vars().iter().any(|v| seen.contains(v))).unwrap_or(0);
            let i = left.remove(pos);
            seen.extend(atoms[i].vars());
            out.push(i);
        }
        out
    }
}

/// Atoms of the final conjunction for a positional choice of chase facts.
pub(crate) fn conj_list(deriver: Deriver, chosen: &[usize]) -> Vec<usize> {
    match deriver {
        Deriver::SkPrime => {
            let mut out = Vec::new();
            for &c in chosen {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            out
        }
        _ => chosen.to_vec(),
    }
}

/// Vertices added after the atom derivations: the C_s and E_s steps.
pub(crate) fn overhead(goal: &Cq, list_len: usize) -> u128 {
    u128::from(list_len > 1) + u128::from(!goal.is_ground())
}

/// Builds the proof given positional chase facts for the goal atoms and a
/// justification for every atom they depend on.
pub(crate) fn assemble(
    kb: &KnowledgeBase,
    prep: &Prepared,
    deriver: Deriver,
    chosen: &[usize],
    just: &BTreeMap<usize, Just>,
) -> Proof {
    let mut g = ProofGraph::new();
    let mut atom_v: BTreeMap<usize, VertexId> = BTreeMap::new();
    let mut axiom_v: HashMap<Sentence, VertexId> = HashMap::new();
    let list = conj_list(deriver, chosen);
    for &a in &list {
        place(kb, prep, just, a, &mut g, &mut atom_v, &mut axiom_v);
    }
    let mut top = atom_v[&list[0]];
    if list.len() > 1 {
        let conj = Cq::boolean(list.iter().map(|&a| prep.chase.facts[a].clone()).collect());
        let v = g.add_vertex(Sentence::Cq(conj));
        g.add_edge(list.iter().map(|a| atom_v[a]).collect(), v, SkKind::Cs.name());
        top = v;
    }
    let goal = Sentence::Cq(prep.goal.clone());
    if !g.label(top).same_as(&goal) {
        let v = g.add_vertex(goal);
        let kind = if deriver == Deriver::SkPrime { SkKind::EsPrime } else { SkKind::Es };
        g.add_edge(vec![top], v, kind.name());
        top = v;
    }
    Proof { graph: g, sink: top }
}

fn place(
    kb: &KnowledgeBase,
    prep: &Prepared,
    just: &BTreeMap<usize, Just>,
    a: usize,
    g: &mut ProofGraph,
    atom_v: &mut BTreeMap<usize, VertexId>,
    axiom_v: &mut HashMap<Sentence, VertexId>,
) -> VertexId {
    if let Some(v) = atom_v.get(&a) {
        return *v;
    }
    match just.get(&a).copied().unwrap_or(Just::Leaf) {
        Just::Leaf => {
            let v = g.add_vertex(Sentence::atom(prep.chase.facts[a].clone()));
            atom_v.insert(a, v);
            v
        }
        Just::Edge(e) => {
            let edge = &prep.edges[e];
            let mut sources: Vec<VertexId> =
                edge.premises.iter().map(|&p| place(kb, prep, just, p, g, atom_v, axiom_v)).collect();
            let ax = Sentence::from_entry(&kb.tbox[edge.rule]);
            let av = *axiom_v.entry(ax.clone()).or_insert_with(|| g.add_vertex(ax));
            sources.push(av);
            let v = g.add_vertex(Sentence::atom(prep.chase.facts[a].clone()));
            g.add_edge(sources, v, SkKind::MPs.name());
            atom_v.insert(a, v);
            v
        }
    }
}

/// Minimal tree-size justification of every chase atom: ABox atoms cost 1,
/// a derived atom costs 2 plus the costs of its distinct atom premises.
pub(crate) fn tree_costs(prep: &Prepared) -> (Vec<u128>, Vec<Just>) {
    let n = prep.chase.facts.len();
    let mut cost = vec![u128::MAX; n];
    let mut just = vec![Just::Leaf; n];
    let mut key: Vec<Option<(u128, Vec<String>, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut waiting: Vec<usize> = prep.edges.iter().map(|e| e.premises.len()).collect();
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in prep.edges.iter().enumerate() {
        for &p in &e.premises {
            uses[p].push(i);
        }
    }
    let mut heap = BinaryHeap::new();
    for (i, c) in cost.iter_mut().enumerate().take(n) {
        if prep.in_abox[i] {
            *c = 1;
            heap.push(Reverse((1u128, i)));
        }
    }
    while let Some(Reverse((c, i))) = heap.pop() {
        if done[i] || c != cost[i] {
            continue;
        }
        done[i] = true;
        for &ei in &uses[i] {
            waiting[ei] -= 1;
            if waiting[ei] > 0 {
                continue;
            }
            let e = &prep.edges[ei];
            let t = e.conclusion;
            if done[t] || prep.in_abox[t] {
                continue;
            }
            let total = 2 + e.premises.iter().map(|&p| cost[p]).sum::<u128>();
            let k = (total, e.premises.iter().map(|&p| prep.label(p)).collect::<Vec<_>>(), e.rule);
            if key[t].as_ref().is_none_or(|old| &k < old) {
                key[t] = Some(k);
                cost[t] = total;
                just[t] = Just::Edge(ei);
                heap.push(Reverse((total, t)));
            }
        }
    }
    (cost, just)
}

/// Least-cost match of the goal into the chase under per-atom costs; ties go
/// to the first match in chase order. With a limit, the search stops at the
/// first match of cost at most `limit` and yields `None` if there is none.
pub(crate) fn best_match(
    prep: &Prepared,
    deriver: Deriver,
    cost: &[u128],
    cap: usize,
    limit: Option<u128>,
) -> Result<Option<Vec<usize>>, SearchError> {
    let order = prep.connected_order();
    let mut min_pred: BTreeMap<&str, u128> = BTreeMap::new();
    for (i, f) in prep.chase.facts.iter().enumerate() {
        let m = min_pred.entry(f.pred.as_str()).or_insert(u128::MAX);
        *m = (*m).min(cost[i]);
    }
    let positional = deriver != Deriver::SkPrime;
    let rest_lb: Vec<u128> = (0..=order.len())
        .map(|k| {
            if !positional {
                return 0;
            }
            order[k..]
                .iter()
                .map(|&i| min_pred.get(prep.goal.atoms[i].pred.as_str()).copied().unwrap_or(u128::MAX))
                .fold(0u128, u128::saturating_add)
        })
        .collect();
    struct St<'a> {
        prep: &'a Prepared,
        m: Matcher,
        positional: bool,
        cost: &'a [u128],
        order: Vec<usize>,
        rest_lb: Vec<u128>,
        chosen: Vec<usize>,
        used: Vec<u32>,
        distinct: usize,
        acc: u128,
        best: Option<(u128, Vec<usize>)>,
        limit: Option<u128>,
        done: bool,
        steps: usize,
        cap: usize,
    }
    fn go(st: &mut St, k: usize) -> Result<(), SearchError> {
        st.steps += 1;
        if st.steps > st.cap {
            return Err(SearchError::Cap(st.cap));
        }
        let lb = st.acc.saturating_add(st.rest_lb[k]);
        if st.done || st.best.as_ref().is_some_and(|(b, _)| lb >= *b) || st.limit.is_some_and(|n| lb > n) {
            return Ok(());
        }
        if k == st.order.len() {
            let len = if st.positional { st.chosen.len() } else { st.distinct };
            let total = lb + overhead(&st.prep.goal, len);
            if st.limit.is_some_and(|n| total > n) {
                return Ok(());
            }
            if st.best.as_ref().is_none_or(|(b, _)| total < *b) {
                st.best = Some((total, st.chosen.clone()));
                st.done = st.limit.is_some();
            }
            return Ok(());
        }
        let ai = st.order[k];
        let mark = st.m.mark();
        for i in 0..st.m.candidates(ai).len() {
            let c = st.m.candidates(ai)[i];
            if !st.m.bind(ai, c) {
                continue;
            }
            st.used[c] += 1;
            let fresh = st.used[c] == 1;
            st.distinct += usize::from(fresh);
            let add = if st.positional || fresh { st.cost[c] } else { 0 };
            st.acc = st.acc.saturating_add(add);
            st.chosen[ai] = c;
            let r = go(st, k + 1);
            st.chosen[ai] = usize::MAX;
            st.acc -= add;
            st.used[c] -= 1;
            st.distinct -= usize::from(fresh);
            st.m.undo(mark);
            r?;
        }
        Ok(())
    }
    let n = prep.goal.atoms.len();
    let mut st = St {
        prep,
        m: Matcher::new(prep),
        positional,
        cost,
        order,
        rest_lb,
        chosen: vec![usize::MAX; n],
        used: vec![0; prep.chase.facts.len()],
        distinct: 0,
        acc: 0,
        best: None,
        limit,
        done: false,
        steps: 0,
        cap,
    };
    go(&mut st, 0)?;
    match (st.best, limit) {
        (Some((_, c)), _) => Ok(Some(c)),
        (None, Some(_)) => Ok(None),
        (None, None) => Err(SearchError::NotEntailed(prep.goal.to_string())),
    }
}

/// No atom depends on itself through the chosen justifications.
pub(crate) fn just_acyclic(prep: &Prepared, just: &BTreeMap<usize, Just>) -> bool {
    fn visit(prep: &Prepared, just: &BTreeMap<usize, Just>, a: usize, state: &mut BTreeMap<usize, bool>) -> bool {
        match state.get(&a) {
            Some(true) => return true,
            Some(false) => return false,
            None => {}
        }
        state.insert(a, false);
        if let Some(Just::Edge(e)) = just.get(&a) {
            for &p in &prep.edges[*e].premises {
                if !visit(prep, just, p, state) {
                    return false;
                }
            }
        }
        state.insert(a, true);
        true
    }
    let mut state = BTreeMap::new();
    just.keys().all(|&a| visit(prep, just, a, &mut state))
}

/// Justifications reachable from `roots` under a total justification map.
pub(crate) fn restrict_just(prep: &Prepared, roots: &[usize], all: &[Just]) -> BTreeMap<usize, Just> {
    let mut out = BTreeMap::new();
    let mut stack: Vec<usize> = roots.to_vec();
    while let Some(a) = stack.pop() {
        if out.contains_key(&a) {
            continue;
        }
        out.insert(a, all[a]);
        if let Just::Edge(e) = all[a] {
            stack.extend(prep.edges[e].premises.iter().copied());
        }
    }
    out
}

pub(crate) fn min_tree_size_prepared(goal: &SearchGoal, prep: &Prepared) -> Result<Proof, SearchError> {
    Ok(tree_size_within(goal, prep, None)?.expect("unlimited search finds a match"))
}

/// A proof of tree size at most `limit` if one exists, minimal when unlimited.
pub(crate) fn tree_size_within(
    goal: &SearchGoal,
    prep: &Prepared,
    limit: Option<u128>,
) -> Result<Option<Proof>, SearchError> {
    let (cost, all) = tree_costs(prep);
    let Some(chosen) = best_match(prep, goal.deriver, &cost, goal.expansion_cap, limit)? else {
        return Ok(None);
    };
    let just = restrict_just(prep, &chosen, &all);
    Ok(Some(assemble(&goal.kb, prep, goal.deriver, &chosen, &just)))
}

/// A proof of minimal tree size within the bounded Skolemized structure.
pub fn min_tree_size(goal: &SearchGoal) -> Result<Proof, SearchError> {
    goal.require_skolem()?;
    let prep = prepare(goal)?;
    min_tree_size_prepared(goal, &prep)
}

/// A proof minimal for the goal's measure.
pub fn min_proof(goal: &SearchGoal) -> Result<Proof, SearchError> {
    match goal.measure {
        Measure::TreeSize => min_tree_size(goal),
        Measure::Size => min_size(goal),
    }
}

/// The goal's measure evaluated on a proof.
pub fn measure_of(m: Measure, p: &Proof) -> u128 {
    match m {
        Measure::Size => graph::size(p) as u128,
        Measure::TreeSize => graph::tree_size(p).expect("search output is acyclic"),
    }
}

/// Is there a proof with measure at most the goal's bound?
pub fn decide_op(goal: &SearchGoal) -> Result<bool, SearchError> {
    let n = goal.bound.ok_or(SearchError::NoBound)?;
    goal.require_skolem()?;
    let prep = prepare(goal)?;
    if n == 0 {
        return Ok(false);
    }
    match goal.measure {
        Measure::TreeSize => Ok(tree_size_within(goal, &prep, Some(n))?.is_some()),
        Measure::Size => Ok(graph::size(&size::min_size_prepared(goal, &prep, Some(n))?) as u128 <= n),
    }
}

/// Undirected co-occurrence edges between the distinct terms of `q`.
pub fn gaifman(q: &Cq) -> (Vec<crate::logic::Term>, BTreeSet<(usize, usize)>, bool) {
    let terms = q.terms();
    let idx = |t: &crate::logic::Term| terms.iter().position(|x| x == t).expect("term of q");
    let mut edges = BTreeSet::new();
    let mut self_loop = false;
    for a in &q.atoms {
        if a.args.len() == 2 {
            let (i, j) = (idx(&a.args[0]), idx(&a.args[1]));
            if i == j {
                self_loop = true;
            } else {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    (terms, edges, self_loop)
}

/// Connected, acyclic Gaifman graph.
pub fn is_tree_shaped(q: &Cq) -> bool {
    let (terms, edges, self_loop) = gaifman(q);
    if self_loop || terms.is_empty() || edges.len() + 1 != terms.len() {
        return false;
    }
    let mut adj = vec![Vec::new(); terms.len()];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; terms.len()];
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(adj[v].iter().copied());
        }
    }
    seen.iter().all(|&s| s)
}
