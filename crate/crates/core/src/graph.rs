//! Labeled directed hypergraphs, proofs and proof measures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::canonicalize_cq;
use crate::logic::{Atom, Concept, Cq, DlAxiom, ExistentialRule, KnowledgeBase, TboxEntry, Term};
use crate::temporal::{AnnotatedFormula, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cycle through vertex {0}")]
    Cycle(usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentence {
    Cq(Cq),
    Axiom(DlAxiom),
    Rule(ExistentialRule),
    Annotated(AnnotatedFormula),
}

impl Sentence {
    pub fn atom(a: Atom) -> Sentence {
        Sentence::Cq(Cq::boolean(vec![a]))
    }

    pub fn from_entry(e: &TboxEntry) -> Sentence {
        match e {
            TboxEntry::Dl(a) => Sentence::Axiom(a.clone()),
            TboxEntry::Rule(r) => Sentence::Rule(r.clone()),
        }
    }

    pub fn as_entry(&self) -> Option<TboxEntry> {
        match self {
            Sentence::Axiom(a) => Some(TboxEntry::Dl(a.clone())),
            Sentence::Rule(r) => Some(TboxEntry::Rule(r.clone())),
            _ => None,
        }
    }

    pub fn as_cq(&self) -> Option<&Cq> {
        match self {
            Sentence::Cq(q) => Some(q),
            _ => None,
        }
    }

    /// The single ground atom of a one-atom ground CQ label.
    pub fn as_ground_atom(&self) -> Option<&Atom> {
        match self {
            Sentence::Cq(q) if q.atoms.len() == 1 && q.is_ground() && q.is_boolean() => Some(&q.atoms[0]),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Sentence::Cq(q) if q.atoms.len() == 1 && q.is_ground() => "atom",
            Sentence::Cq(q) if q.is_ground() => "conjunction",
            Sentence::Cq(_) => "cq",
            Sentence::Axiom(_) => "axiom",
            Sentence::Rule(_) => "rule",
            Sentence::Annotated(_) => "annotated",
        }
    }

    /// Label used for equality tests: CQs are compared up to variable renaming.
    pub fn canonical(&self) -> Sentence {
        match self {
            Sentence::Cq(q) => Sentence::Cq(canonicalize_cq(q)),
            Sentence::Annotated(a) => Sentence::Annotated(AnnotatedFormula {
                formula: a.formula.map_leaves(&canonicalize_cq),
                interval: a.interval,
            }),
            other => other.clone(),
        }
    }

    pub fn same_as(&self, other: &Sentence) -> bool {
        self == other || self.canonical() == other.canonical()
    }

    /// Symbol count used by the label-weighted hypergraph size.
    pub fn symbol_size(&self) -> usize {
        fn term(t: &Term) -> usize {
            match t {
                Term::Skolem(_, inner) => 1 + term(inner),
                _ => 1,
            }
        }
        fn atoms(a: &[Atom]) -> usize {
            a.iter().map(|x| 1 + x.args.iter().map(term).sum::<usize>()).sum()
        }
        fn concept(c: &Concept) -> usize {
            match c {
                Concept::Name(_) => 1,
                Concept::Exists(_) => 2,
            }
        }
        fn formula(f: &Formula) -> usize {
            match f {
                Formula::Cq(q) => atoms(&q.atoms),
                Formula::Top => 1,
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) | Formula::Since(_, a, b) => {
                    1 + formula(a) + formula(b)
                }
                Formula::BoxPlus(_, a) | Formula::BoxMinus(_, a) | Formula::Next(a) | Formula::Prev(a) => {
                    1 + formula(a)
                }
            }
        }
        match self {
            Sentence::Cq(q) => atoms(&q.atoms),
            Sentence::Axiom(DlAxiom::ConceptInclusion(l, r)) => 1 + concept(l) + concept(r),
            Sentence::Axiom(DlAxiom::RoleInclusion(..)) => 3,
            Sentence::Rule(r) => 1 + atoms(&r.body) + atoms(&r.head),
            Sentence::Annotated(a) => 1 + formula(&a.formula),
        }
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::Cq(q) => write!(f, "{q}"),
            Sentence::Axiom(a) => write!(f, "{a}"),
            Sentence::Rule(r) => write!(f, "{r}"),
            Sentence::Annotated(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub sources: Vec<VertexId>,
    pub target: VertexId,
    /// Name of the inference schema; informational only.
    pub rule: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofGraph {
    pub labels: Vec<Sentence>,
    pub edges: Vec<Edge>,
}

impl ProofGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, label: Sentence) -> VertexId {
        self.labels.push(label);
        VertexId(self.labels.len() - 1)
    }

    pub fn add_edge(&mut self, sources: Vec<VertexId>, target: VertexId, rule: &str) {
        self.edges.push(Edge { sources, target, rule: rule.to_string() });
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.labels.len()).map(VertexId)
    }

    pub fn label(&self, v: VertexId) -> &Sentence {
        &self.labels[v.0]
    }

    pub fn incoming(&self, v: VertexId) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.target == v).collect()
    }

    pub fn has_outgoing(&self, v: VertexId) -> bool {
        self.edges.iter().any(|e| e.sources.contains(&v))
    }

    pub fn leaves(&self) -> Vec<VertexId> {
        let targets: BTreeSet<VertexId> = self.edges.iter().map(|e| e.target).collect();
        self.vertices().filter(|v| !targets.contains(v)).collect()
    }

    pub fn sinks(&self) -> Vec<VertexId> {
        let used: BTreeSet<VertexId> = self.edges.iter().flat_map(|e| e.sources.iter().copied()).collect();
        self.vertices().filter(|v| !used.contains(v)).collect()
    }

    pub fn check_endpoints(&self) -> Result<(), GraphError> {
        let n = self.labels.len();
        for e in &self.edges {
            for v in e.sources.iter().chain(std::iter::once(&e.target)) {
                if v.0 >= n {
                    return Err(GraphError::UnknownVertex(v.0));
                }
            }
        }
        Ok(())
    }

    /// Vertices ordered so that every edge's sources precede its target.
    pub fn topo_order(&self) -> Result<Vec<VertexId>, GraphError> {
        self.check_endpoints()?;
        let n = self.labels.len();
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            for s in &e.sources {
                succ[s.0].push(e.target.0);
                indeg[e.target.0] += 1;
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            out.push(VertexId(v));
            for &t in &succ[v] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        if out.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).expect("some vertex remains");
            return Err(GraphError::Cycle(stuck));
        }
        Ok(out)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_ok()
    }

    /// Label-weighted size `Σ_(S,d) |ℓ(d)| + Σ_{v∈S} |ℓ(v)|`; reporting only.
    pub fn weighted_size(&self) -> usize {
        self.edges
            .iter()
            .map(|e| {
                self.label(e.target).symbol_size()
                    + e.sources.iter().map(|s| self.label(*s).symbol_size()).sum::<usize>()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub graph: ProofGraph,
    pub sink: VertexId,
}

impl Proof {
    pub fn leaf(label: Sentence) -> Proof {
        let mut graph = ProofGraph::new();
        let sink = graph.add_vertex(label);
        Proof { graph, sink }
    }

    pub fn conclusion(&self) -> &Sentence {
        self.graph.label(self.sink)
    }

    pub fn proves(&self, goal: &Sentence) -> bool {
        self.conclusion().same_as(goal)
    }

    /// The subgraph of vertices from which the sink is reachable, renumbered.
    pub fn restrict_to_sink(&self) -> Proof {
        let mut keep = BTreeSet::new();
        let mut stack = vec![self.sink];
        while let Some(v) = stack.pop() {
            if keep.insert(v) {
                for e in self.graph.incoming(v) {
                    stack.extend(e.sources.iter().copied());
                }
            }
        }
        let map: BTreeMap<VertexId, VertexId> = keep.iter().enumerate().map(|(i, v)| (*v, VertexId(i))).collect();
        let labels = keep.iter().map(|v| self.graph.label(*v).clone()).collect();
        let edges = self
            .graph
            .edges
            .iter()
            .filter(|e| keep.contains(&e.target))
            .map(|e| Edge {
                sources: e.sources.iter().map(|s| map[s]).collect(),
                target: map[&e.target],
                rule: e.rule.clone(),
            })
            .collect();
        Proof { graph: ProofGraph { labels, edges }, sink: map[&self.sink] }
    }

    pub fn is_tree(&self) -> bool {
        let mut uses = vec![0usize; self.graph.vertex_count()];
        for e in &self.graph.edges {
            for s in &e.sources {
                uses[s.0] += 1;
            }
        }
        self.graph.is_acyclic()
            && self.graph.vertices().all(|v| if v == self.sink { uses[v.0] == 0 } else { uses[v.0] == 1 })
    }
}

/// `m_s`: number of vertices.
pub fn size(p: &Proof) -> usize {
    p.graph.vertex_count()
}

fn first_incoming(g: &ProofGraph) -> Vec<Option<usize>> {
    let mut inc = vec![None; g.vertex_count()];
    for (i, e) in g.edges.iter().enumerate() {
        if inc[e.target.0].is_none() {
            inc[e.target.0] = Some(i);
        }
    }
    inc
}

/// `m_t`: size of the tree unraveling at the sink, computed recursively.
pub fn tree_size(p: &Proof) -> Result<u128, GraphError> {
    let order = p.graph.topo_order()?;
    let inc = first_incoming(&p.graph);
    let mut ts = vec![0u128; p.graph.vertex_count()];
    for v in order {
        ts[v.0] = 1 + inc[v.0].map_or(0, |e| p.graph.edges[e].sources.iter().map(|s| ts[s.0]).sum());
    }
    Ok(ts[p.sink.0])
}

/// Longest leaf-to-sink path, counted in edges.
pub fn depth(p: &Proof) -> Result<usize, GraphError> {
    let order = p.graph.topo_order()?;
    let mut d = vec![0usize; p.graph.vertex_count()];
    for v in order {
        d[v.0] =
            p.graph.incoming(v).iter().filter_map(|e| e.sources.iter().map(|s| d[s.0] + 1).max()).max().unwrap_or(0);
    }
    Ok(d[p.sink.0])
}

/// Tree unraveling at `v` together with the map sending each tree vertex to
/// its origin in `g`.
pub fn unravel(g: &ProofGraph, v: VertexId) -> Result<(Proof, BTreeMap<VertexId, VertexId>), GraphError> {
    g.check_endpoints()?;
    if v.0 >= g.vertex_count() {
        return Err(GraphError::UnknownVertex(v.0));
    }
    let inc = first_incoming(g);
    let mut out = ProofGraph::new();
    let mut h = BTreeMap::new();
    let mut on_path = vec![false; g.vertex_count()];
    let root = unravel_rec(g, &inc, v, &mut out, &mut h, &mut on_path)?;
    Ok((Proof { graph: out, sink: root }, h))
}

fn unravel_rec(
    g: &ProofGraph,
    inc: &[Option<usize>],
    v: VertexId,
    out: &mut ProofGraph,
    h: &mut BTreeMap<VertexId, VertexId>,
    on_path: &mut [bool],
) -> Result<VertexId, GraphError> {
    if on_path[v.0] {
        return Err(GraphError::Cycle(v.0));
    }
    on_path[v.0] = true;
    let me = out.add_vertex(g.label(v).clone());
    h.insert(me, v);
    if let Some(ei) = inc[v.0] {
        let e = &g.edges[ei];
        let mut sources = Vec::with_capacity(e.sources.len());
        for s in &e.sources {
            sources.push(unravel_rec(g, inc, *s, out, h, on_path)?);
        }
        out.add_edge(sources, me, &e.rule);
    }
    on_path[v.0] = false;
    Ok(me)
}

/// True iff `h` preserves labels (up to renaming of CQ variables) and maps
/// every edge of `p` onto an edge of `g`.
pub fn check_homomorphism(p: &Proof, g: &ProofGraph, h: &BTreeMap<VertexId, VertexId>) -> bool {
    for v in p.graph.vertices() {
        let Some(&w) = h.get(&v) else { return false };
        if w.0 >= g.vertex_count() || !p.graph.label(v).same_as(g.label(w)) {
            return false;
        }
    }
    let image: BTreeSet<(Vec<VertexId>, VertexId)> = g.edges.iter().map(|e| (e.sources.clone(), e.target)).collect();
    p.graph.edges.iter().all(|e| {
        let mapped = (e.sources.iter().map(|s| h[s]).collect::<Vec<_>>(), h[&e.target]);
        image.contains(&mapped)
    })
}

/// Admissibility oracle of a deriver: returns the name of a schema that
/// licenses the inference, if any.
pub trait SchemaChecker {
    fn admissible(&self, premises: &[&Sentence], conclusion: &Sentence) -> Option<&'static str>;
}

/// Theory whose members may label leaves.
pub trait Theory {
    fn contains(&self, s: &Sentence) -> bool;
}

impl Theory for KnowledgeBase {
    fn contains(&self, s: &Sentence) -> bool {
        match s {
            Sentence::Axiom(a) => self.tbox.iter().any(|e| matches!(e, TboxEntry::Dl(b) if b == a)),
            Sentence::Rule(r) => self.tbox.iter().any(|e| matches!(e, TboxEntry::Rule(b) if b == r)),
            other => other.as_ground_atom().is_some_and(|a| self.abox.contains(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub single_sink: bool,
    pub acyclic: bool,
    pub at_most_one_incoming: bool,
    pub grounded: bool,
    pub admissible: bool,
    pub failures: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.single_sink && self.acyclic && self.at_most_one_incoming && self.grounded && self.admissible
    }
}

pub fn validate_proof(p: &Proof, theory: &dyn Theory, checker: &dyn SchemaChecker) -> ValidityReport {
    let mut failures = Vec::new();
    if let Err(e) = p.graph.check_endpoints() {
        failures.push(e.to_string());
        return ValidityReport {
            single_sink: false,
            acyclic: false,
            at_most_one_incoming: false,
            grounded: false,
            admissible: false,
            failures,
        };
    }
    let sinks = p.graph.sinks();
    let single_sink = sinks == vec![p.sink];
    if !single_sink {
        failures.push(format!("sinks {sinks:?}, expected only {}", p.sink));
    }
    let acyclic = p.graph.is_acyclic();
    if !acyclic {
        failures.push("graph has a cycle".into());
    }
    let mut at_most_one_incoming = true;
    for v in p.graph.vertices() {
        let inc = p.graph.incoming(v);
        if inc.len() > 1 && inc.iter().any(|e| e.sources != inc[0].sources) {
            at_most_one_incoming = false;
            failures.push(format!("{v} has {} incoming edges", inc.len()));
        }
    }
    let mut grounded = true;
    for v in p.graph.leaves() {
        if !theory.contains(p.graph.label(v)) {
            grounded = false;
            failures.push(format!("leaf {v} `{}` is not in the theory", p.graph.label(v)));
        }
    }
    let mut admissible = true;
    for (i, e) in p.graph.edges.iter().enumerate() {
        let prem: Vec<&Sentence> = e.sources.iter().map(|s| p.graph.label(*s)).collect();
        if checker.admissible(&prem, p.graph.label(e.target)).is_none() {
            admissible = false;
            failures.push(format!("edge {i} ({}) into {} is not admissible", e.rule, e.target));
        }
    }
    ValidityReport { single_sink, acyclic, at_most_one_incoming, grounded, admissible, failures }
}
