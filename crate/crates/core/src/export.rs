//! JSON and DOT renderings of proofs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{depth, size, tree_size, Edge, GraphError, Proof, ProofGraph, VertexId};
use crate::syntax::{parse_sentence, SyntaxError, HEADER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("invalid proof JSON: {0}")]
    Json(String),
    #[error("unsupported format `{0}`, expected `{HEADER}`")]
    Format(String),
    #[error("vertex {0}: {1}")]
    Label(usize, SyntaxError),
    #[error("vertex ids must be 0..n in order; found {0} at position {1}")]
    VertexOrder(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonVertex {
    pub id: usize,
    pub label: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub sources: Vec<usize>,
    pub target: usize,
    pub rule: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonMeasures {
    pub size: usize,
    pub tree_size: u128,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonProof {
    pub format: String,
    pub vertices: Vec<JsonVertex>,
    pub edges: Vec<JsonEdge>,
    pub sink: usize,
    pub measures: JsonMeasures,
}

pub fn to_json_value(p: &Proof) -> Result<JsonProof, ExportError> {
    let vertices = p
        .graph
        .vertices()
        .map(|v| {
            let l = p.graph.label(v);
            JsonVertex { id: v.0, label: l.to_string(), kind: l.kind().to_string() }
        })
        .collect();
    let edges = p
        .graph
        .edges
        .iter()
        .map(|e| JsonEdge {
            sources: e.sources.iter().map(|s| s.0).collect(),
            target: e.target.0,
            rule: e.rule.clone(),
        })
        .collect();
    Ok(JsonProof {
        format: HEADER.to_string(),
        vertices,
        edges,
        sink: p.sink.0,
        measures: JsonMeasures { size: size(p), tree_size: tree_size(p)?, depth: depth(p)? },
    })
}

pub fn to_json(p: &Proof) -> Result<String, ExportError> {
    let v = to_json_value(p)?;
    Ok(serde_json::to_string_pretty(&v).expect("plain data serializes") + "\n")
}

/// Rebuilds a proof from [`to_json`] output. Measures are ignored.
pub fn from_json(text: &str) -> Result<Proof, ExportError> {
    let j: JsonProof = serde_json::from_str(text).map_err(|e| ExportError::Json(e.to_string()))?;
    if j.format != HEADER {
        return Err(ExportError::Format(j.format));
    }
    let mut graph = ProofGraph::new();
    for (i, v) in j.vertices.iter().enumerate() {
        if v.id != i {
            return Err(ExportError::VertexOrder(v.id, i));
        }
        graph.add_vertex(parse_sentence(&v.label).map_err(|e| ExportError::Label(i, e))?);
    }
    let n = j.vertices.len();
    for e in &j.edges {
        if let Some(bad) = e.sources.iter().chain([&e.target]).find(|x| **x >= n) {
            return Err(GraphError::UnknownVertex(*bad).into());
        }
        graph.edges.push(Edge {
            sources: e.sources.iter().map(|s| VertexId(*s)).collect(),
            target: VertexId(e.target),
            rule: e.rule.clone(),
        });
    }
    if j.sink >= n {
        return Err(GraphError::UnknownVertex(j.sink).into());
    }
    Ok(Proof { graph, sink: VertexId(j.sink) })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering, conclusions above premises. Each hyperedge becomes a
/// junction point joined to its sources and pointing to its target.
pub fn to_dot(p: &Proof) -> String {
    let mut out =
        format!("// {HEADER}\ndigraph proof {{\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n");
    for v in p.graph.vertices() {
        let style = if v == p.sink { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  {v} [label=\"{}\"{style}];", escape(&p.graph.label(v).to_string()));
    }
    for (i, e) in p.graph.edges.iter().enumerate() {
        let _ = writeln!(out, "  e{i} [shape=point, xlabel=\"{}\"];", escape(&e.rule));
        for s in &e.sources {
            let _ = writeln!(out, "  {s} -> e{i} [arrowhead=none];");
        }
        let _ = writeln!(out, "  e{i} -> {};", e.target);
    }
    out.push_str("}\n");
    out
}

pub fn export(p: &Proof, format: ExportFormat) -> Result<String, ExportError> {
    match format {
        ExportFormat::Json => to_json(p),
        ExportFormat::Dot => Ok(to_dot(p)),
    }
}
