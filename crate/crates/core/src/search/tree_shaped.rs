use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;

use super::{
    assemble, gaifman, is_tree_shaped, overhead, prepare, restrict_just, tree_costs, Deriver, Just, Measure, Prepared,
    SearchError, SearchGoal,
};
use crate::canon::match_atom;
use crate::graph::{self, Proof};
use crate::logic::{Atom, Concept, Cq, DlAxiom, KnowledgeBase, Role, Substitution, TboxEntry, Term};

/// Individual of the compressed structure: an ABox constant or the
/// placeholder `b_{∃R}` shared by all anonymous elements of type ∃R.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ind {
    Named(String),
    Anon(Role),
}

impl fmt::Display for Ind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ind::Named(n) => f.write_str(n),
            Ind::Anon(r) => write!(f, "b_ex_{r}"),
        }
    }
}

/// Atom over compressed individuals, with roles stored under their name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CAtom {
    pub pred: String,
    pub args: Vec<Ind>,
}

impl fmt::Display for CAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(Ind::to_string).collect();
        write!(f, "{}({})", self.pred, args.join(","))
    }
}

fn role_atom(r: &Role, a: Ind, b: Ind) -> CAtom {
    let args = if r.inverse { vec![b, a] } else { vec![a, b] };
    CAtom { pred: r.name.clone(), args }
}

/// The pair `(a, b)` with `R(a, b)` read off a stored atom, if it is an R-atom.
fn role_view(r: &Role, at: &CAtom) -> Option<(Ind, Ind)> {
    if at.pred != r.name || at.args.len() != 2 {
        return None;
    }
    let (x, y) = (at.args[0].clone(), at.args[1].clone());
    Some(if r.inverse { (y, x) } else { (x, y) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CEdge {
    pub premise: usize,
    pub axiom: usize,
    pub conclusion: usize,
}

/// Polynomial over-approximation of the Skolemized derivation structure in
/// which all anonymous successors of type ∃R are merged into `b_{∃R}`.
#[derive(Debug, Clone)]
pub struct CompressedStructure {
    pub atoms: Vec<CAtom>,
    pub index: HashMap<CAtom, usize>,
    pub axioms: Vec<DlAxiom>,
    pub edges: Vec<CEdge>,
    pub in_abox: Vec<bool>,
    /// Minimal tree size of a derivation of each atom.
    pub cost: Vec<u128>,
    pub just: Vec<Option<usize>>,
}

impl CompressedStructure {
    pub fn vertex_count(&self) -> usize {
        self.atoms.len() + self.axioms.len()
    }

    pub fn contains(&self, a: &CAtom) -> bool {
        self.index.contains_key(a)
    }

    fn add(&mut self, a: CAtom, abox: bool) -> usize {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        self.index.insert(a.clone(), self.atoms.len());
        self.atoms.push(a);
        self.in_abox.push(abox);
        self.atoms.len() - 1
    }

    /// Conclusions of the five inference patterns for one atom and axiom.
    fn apply(ax: &DlAxiom, at: &CAtom) -> Option<CAtom> {
        match ax {
            DlAxiom::ConceptInclusion(l, r) => {
                let subject = match l {
                    Concept::Name(a) => (at.pred == *a && at.args.len() == 1).then(|| at.args[0].clone())?,
                    Concept::Exists(role) => role_view(role, at)?.0,
                };
                Some(match r {
                    Concept::Name(b) => CAtom { pred: b.clone(), args: vec![subject] },
                    Concept::Exists(q) => role_atom(q, subject, Ind::Anon(q.inverted())),
                })
            }
            DlAxiom::RoleInclusion(p, q) => {
                let (a, b) = role_view(p, at)?;
                Some(role_atom(q, a, b))
            }
        }
    }
}

pub fn build_compressed(kb: &KnowledgeBase) -> Result<CompressedStructure, SearchError> {
    let mut axioms = Vec::new();
    for e in &kb.tbox {
        match e {
            TboxEntry::Dl(a) => axioms.push(a.clone()),
            TboxEntry::Rule(r) => return Err(SearchError::Unsupported(format!("rule outside DL-Lite_R: {r}"))),
        }
    }
    let mut cs = CompressedStructure {
        atoms: Vec::new(),
        index: HashMap::new(),
        axioms,
        edges: Vec::new(),
        in_abox: Vec::new(),
        cost: Vec::new(),
        just: Vec::new(),
    };
    for a in &kb.abox {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(Ind::Named(c.clone())),
                other => Err(SearchError::Unsupported(format!("non-constant ABox term {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        cs.add(CAtom { pred: a.pred.clone(), args }, true);
    }
    let mut next = 0;
    while next < cs.atoms.len() {
        let at = cs.atoms[next].clone();
        for k in 0..cs.axioms.len() {
            if let Some(c) = CompressedStructure::apply(&cs.axioms[k], &at) {
                let ci = cs.add(c, false);
                cs.edges.push(CEdge { premise: next, axiom: k, conclusion: ci });
            }
        }
        next += 1;
    }
    compressed_costs(&mut cs);
    Ok(cs)
}

fn compressed_costs(cs: &mut CompressedStructure) {
    let n = cs.atoms.len();
    let mut cost = vec![u128::MAX; n];
    let mut just: Vec<Option<usize>> = vec![None; n];
    let mut key: Vec<Option<(u128, String, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in cs.edges.iter().enumerate() {
        uses[e.premise].push(i);
    }
    let mut heap = BinaryHeap::new();
    for (i, c) in cost.iter_mut().enumerate().take(n) {
        if cs.in_abox[i] {
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
            let e = &cs.edges[ei];
            let t = e.conclusion;
            if done[t] || cs.in_abox[t] {
                continue;
            }
            let k = (c + 2, cs.atoms[i].to_string(), e.axiom);
            if key[t].as_ref().is_none_or(|old| &k < old) {
                cost[t] = k.0;
                key[t] = Some(k);
                just[t] = Some(ei);
                heap.push(Reverse((cost[t], t)));
            }
        }
    }
    cs.cost = cost;
    cs.just = just;
}

/// Assignments of query terms to individuals, oriented along a rooted
/// Gaifman tree. `gamma[c]` holds the costs of the edge from `parent[c]` to
/// `c`, keyed by the parent's and the child's individual.
#[derive(Debug, Clone)]
pub struct CostGraph<I: Ord> {
    pub terms: Vec<Term>,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Terms ordered root first, each after its parent.
    pub order: Vec<usize>,
    pub node_cost: Vec<BTreeMap<I, u128>>,
    pub gamma: Vec<BTreeMap<(I, I), u128>>,
}

/// Builds the cost graph of a tree-shaped Boolean CQ given costed facts.
fn build_cost_graph<I: Ord + Clone + std::hash::Hash>(
    q: &Cq,
    answers: &[String],
    facts: &[(String, Vec<I>, u128)],
    constant: impl Fn(&str) -> I,
) -> Result<CostGraph<I>, SearchError> {
    if !is_tree_shaped(q) {
        return Err(SearchError::NotTreeShaped);
    }
    let (terms, edges, _) = gaifman(q);
    let n = terms.len();
    let root = answers
        .first()
        .and_then(|a| terms.iter().position(|t| *t == Term::Const(a.clone())))
        .unwrap_or_else(|| (0..n).min_by_key(|&i| terms[i].to_string()).expect("nonempty query"));
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut parent = vec![None; n];
    let mut order = vec![root];
    let mut k = 0;
    while k < order.len() {
        let v = order[k];
        for &w in &adj[v] {
            if w != root && parent[w].is_none() {
                parent[w] = Some(v);
                order.push(w);
            }
        }
        k += 1;
    }
    let idx = |t: &Term| terms.iter().position(|x| x == t).expect("term of q");
    let lookup: HashMap<(&str, &[I]), u128> = facts.iter().map(|(p, a, c)| ((p.as_str(), a.as_slice()), *c)).collect();
    let allowed = |t: usize, i: &I| match &terms[t] {
        Term::Const(c) => constant(c) == *i,
        _ => true,
    };
    let mut domain: Vec<Vec<I>> = vec![Vec::new(); n];
    let mut all: Vec<I> = facts.iter().flat_map(|(_, a, _)| a.iter().cloned()).collect();
    all.sort();
    all.dedup();
    for (t, d) in domain.iter_mut().enumerate() {
        *d = all.iter().filter(|i| allowed(t, i)).cloned().collect();
    }
    let mut node_cost: Vec<BTreeMap<I, u128>> = vec![BTreeMap::new(); n];
    for (t, d) in domain.iter().enumerate() {
        let unary: Vec<&Atom> = q.atoms.iter().filter(|a| a.args.len() == 1 && idx(&a.args[0]) == t).collect();
        for i in d {
            let mut sum = 0u128;
            let mut ok = true;
            for a in &unary {
                match lookup.get(&(a.pred.as_str(), std::slice::from_ref(i))) {
                    Some(c) => sum += c,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                node_cost[t].insert(i.clone(), sum);
            }
        }
    }
    let mut gamma: Vec<BTreeMap<(I, I), u128>> = vec![BTreeMap::new(); n];
    for c in 0..n {
        let Some(p) = parent[c] else { continue };
        let between: Vec<&Atom> = q
            .atoms
            .iter()
            .filter(|a| {
                a.args.len() == 2 && {
                    let (x, y) = (idx(&a.args[0]), idx(&a.args[1]));
                    (x, y) == (p, c) || (x, y) == (c, p)
                }
            })
            .collect();
        let first = between[0];
        let first_parent_left = idx(&first.args[0]) == p;
        for (pred, args, _) in facts {
            if *pred != first.pred || args.len() != 2 {
                continue;
            }
            let (ip, ic) = if first_parent_left { (&args[0], &args[1]) } else { (&args[1], &args[0]) };
            if !allowed(p, ip) || !allowed(c, ic) {
                continue;
            }
            let mut sum = 0u128;
            let mut ok = true;
            for a in &between {
                let key: Vec<I> =
                    if idx(&a.args[0]) == p { vec![ip.clone(), ic.clone()] } else { vec![ic.clone(), ip.clone()] };
                match lookup.get(&(a.pred.as_str(), key.as_slice())) {
                    Some(v) => sum += v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                gamma[c].insert((ip.clone(), ic.clone()), sum);
            }
        }
    }
    Ok(CostGraph { terms, root, parent, order, node_cost, gamma })
}

/// Leaf-up elimination: the least-cost assignment of every term, ties broken
/// on the least individual.
fn eliminate<I: Ord + Clone>(cg: &CostGraph<I>) -> Option<(u128, Vec<I>)> {
    let n = cg.terms.len();
    let mut f: Vec<BTreeMap<I, u128>> = cg.node_cost.clone();
    let mut choice: Vec<BTreeMap<I, I>> = vec![BTreeMap::new(); n];
    for &c in cg.order.iter().rev() {
        let Some(p) = cg.parent[c] else { continue };
        let mut best: BTreeMap<I, (u128, I)> = BTreeMap::new();
        for ((ip, ic), g) in &cg.gamma[c] {
            let Some(fc) = f[c].get(ic) else { continue };
            let total = g + fc;
            let cand = (total, ic.clone());
            match best.get(ip) {
                Some(old) if *old <= cand => {}
                _ => {
                    best.insert(ip.clone(), cand);
                }
            }
        }
        let mut next = BTreeMap::new();
        for (ip, v) in &f[p] {
            if let Some((total, ic)) = best.get(ip) {
                next.insert(ip.clone(), v + total);
                choice[c].insert(ip.clone(), ic.clone());
            }
        }
        f[p] = next;
    }
    let (ir, total) = f[cg.root].iter().min_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)))?;
    let mut assign: Vec<Option<I>> = vec![None; n];
    assign[cg.root] = Some(ir.clone());
    for &c in &cg.order {
        if let Some(p) = cg.parent[c] {
            let ip = assign[p].clone().expect("parent assigned first");
            assign[c] = Some(choice[c][&ip].clone());
        }
    }
    Some((*total, assign.into_iter().map(|a| a.expect("all assigned")).collect()))
}

/// Cost graph of `q(a)` over the compressed structure.
pub fn cost_graph(q: &Cq, answers: &[String], cs: &CompressedStructure) -> Result<CostGraph<Ind>, SearchError> {
    let facts: Vec<(String, Vec<Ind>, u128)> = cs
        .atoms
        .iter()
        .zip(&cs.cost)
        .filter(|(_, c)| **c != u128::MAX)
        .map(|(a, c)| (a.pred.clone(), a.args.clone(), *c))
        .collect();
    build_cost_graph(q, answers, &facts, |c| Ind::Named(c.to_string()))
}

/// Minimal tree-size proof for a tree-shaped query under the Skolemized
/// deriver, computed on the compressed structure and then de-compressed.
pub fn tree_shaped_min(goal: &SearchGoal) -> Result<Proof, SearchError> {
    if goal.deriver != Deriver::Sk || goal.measure != Measure::TreeSize {
        return Err(SearchError::Unsupported("tree-shaped minimization needs deriver sk and tree size".into()));
    }
    let q = goal.query.instantiate(&goal.answer)?;
    if !is_tree_shaped(&q) {
        return Err(SearchError::NotTreeShaped);
    }
    let cs = build_compressed(&goal.kb)?;
    let prep = prepare(goal)?;
    let cg = cost_graph(&q, &goal.answer, &cs)?;
    let (opt, assign) = eliminate(&cg).ok_or_else(|| SearchError::NotEntailed(q.to_string()))?;
    let expected = opt + overhead(&q, q.atoms.len());
    if let Some(p) = decompress(goal, &prep, &cs, &cg, &assign) {
        if graph::tree_size(&p).ok() == Some(expected) {
            return Ok(p);
        }
    }
    exact_on_chase(goal, &prep, &q)
}

/// Replaces placeholders by Skolem terms following each atom's derivation.
fn decompress(
    goal: &SearchGoal,
    prep: &Prepared,
    cs: &CompressedStructure,
    cg: &CostGraph<Ind>,
    assign: &[Ind],
) -> Option<Proof> {
    let rules = goal.kb.skolem_rules().ok()?;
    let idx = |t: &Term| cg.terms.iter().position(|x| x == t).expect("term of q");
    let mut memo: HashMap<usize, usize> = HashMap::new();
    let mut just: BTreeMap<usize, Just> = BTreeMap::new();
    let mut chosen = Vec::new();
    let mut sigma = Substitution::new();
    for a in &prep.goal.atoms {
        let ca = CAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| assign[idx(t)].clone()).collect() };
        let ci = *cs.index.get(&ca)?;
        let fact = realize(prep, cs, &rules, ci, &mut memo, &mut just)?;
        if !match_atom(a, &prep.chase.facts[fact], &mut sigma) {
            return None;
        }
        chosen.push(fact);
    }
    Some(assemble(&goal.kb, prep, Deriver::Sk, &chosen, &just))
}

fn realize(
    prep: &Prepared,
    cs: &CompressedStructure,
    rules: &[crate::logic::SkolemRule],
    ci: usize,
    memo: &mut HashMap<usize, usize>,
    just: &mut BTreeMap<usize, Just>,
) -> Option<usize> {
    if let Some(&f) = memo.get(&ci) {
        return Some(f);
    }
    let f = if cs.in_abox[ci] {
        let at = &cs.atoms[ci];
        let args = at
            .args
            .iter()
            .map(|i| match i {
                Ind::Named(c) => Some(Term::constant(c.clone())),
                Ind::Anon(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        let f = prep.chase.id(&Atom { pred: at.pred.clone(), args })?;
        just.insert(f, Just::Leaf);
        f
    } else {
        let e = &cs.edges[cs.just[ci]?];
        let pf = realize(prep, cs, rules, e.premise, memo, just)?;
        let rule = &rules[e.axiom];
        let mut s = Substitution::new();
        if !match_atom(&rule.body[0], &prep.chase.facts[pf], &mut s) {
            return None;
        }
        let f = prep.chase.id(&rule.head[0].apply(&s))?;
        let ei = prep.edges.iter().position(|x| x.rule == e.axiom && x.premises == [pf] && x.conclusion == f)?;
        just.insert(f, Just::Edge(ei));
        f
    };
    memo.insert(ci, f);
    Some(f)
}

/// The same elimination over the actual chase terms.
fn exact_on_chase(goal: &SearchGoal, prep: &Prepared, q: &Cq) -> Result<Proof, SearchError> {
    let (cost, all) = tree_costs(prep);
    let facts: Vec<(String, Vec<Term>, u128)> =
        prep.chase.facts.iter().zip(&cost).map(|(a, c)| (a.pred.clone(), a.args.clone(), *c)).collect();
    let cg = build_cost_graph(q, &goal.answer, &facts, |c| Term::constant(c.to_string()))?;
    let (_, assign) = eliminate(&cg).ok_or_else(|| SearchError::NotEntailed(q.to_string()))?;
    let idx = |t: &Term| cg.terms.iter().position(|x| x == t).expect("term of q");
    let chosen: Vec<usize> = q
        .atoms
        .iter()
        .map(|a| {
            let ground = Atom { pred: a.pred.clone(), args: a.args.iter().map(|t| assign[idx(t)].clone()).collect() };
            prep.chase.id(&ground).expect("assignment uses chase facts")
        })
        .collect();
    let just = restrict_just(prep, &chosen, &all);
    Ok(assemble(&goal.kb, prep, Deriver::Sk, &chosen, &just))
}
