//! Syndrome-subspace transition graphs.
//!
//! Nodes are the 2^(n-k) syndrome subspaces; edges are the transitions an
//! elementary error induces from each correctable node. Every edge carries
//! the signed energy factor varpi, the syndrome-energy change in units of
//! 2*alpha when that error fires.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{CorrectabilityTable, TransitionClass};
use crate::code::{ErrorModel, StabilizerCode, Syndrome};
use crate::pauli::Pauli;

/// Signed energy factor for applying error with syndrome `error_syndrome` to
/// subspace `node`: sum over anticommuting generators m of (-1)^{nu_m},
/// evaluated as w_j - 2 * |nu(j) AND nu|.
pub fn varpi_of_syndromes(error_syndrome: &Syndrome, node: &Syndrome) -> i32 {
    let w_j = error_syndrome.count_ones() as i32;
    w_j - 2 * error_syndrome.dot(node) as i32
}

/// varpi for elementary error `j` of `model` acting on subspace `node`.
pub fn varpi(code: &StabilizerCode, model: &ErrorModel, j: usize, node: &Syndrome) -> i32 {
    assert!(j < model.len(), "error index {j} out of range");
    let sj = code.syndrome(&model.operator(j, code.num_qubits()));
    varpi_of_syndromes(&sj, node)
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("table was built for {table_errors} errors, model has {model_errors}")]
    MismatchedTable {
        table_errors: usize,
        model_errors: usize,
    },
    #[error("table covers {table_syndromes} syndromes, code has {code_syndromes}")]
    MismatchedCode {
        table_syndromes: usize,
        code_syndromes: usize,
    },
    #[error("unknown export format {0:?} (expected dot or json)")]
    UnknownFormat(String),
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphNode {
    /// Syndrome as a bit string, generator 0 first.
    pub syndrome: String,
    /// Little-endian integer value of the syndrome.
    pub index: usize,
    pub correctable: bool,
    pub weight: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    /// Index of the elementary error inducing the transition.
    pub error: usize,
    /// Label like "X3" (1-based qubit).
    pub label: String,
    pub class: TransitionClass,
    pub varpi: i32,
}

/// The full syndrome transition graph for one (code, model) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyndromeGraph {
    pub code: String,
    pub num_generators: usize,
    pub num_errors: usize,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl SyndromeGraph {
    pub fn num_correctable(&self) -> usize {
        self.nodes.iter().filter(|n| n.correctable).count()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.source == node).count()
    }
}

/// Builds the graph: one node per syndrome (ordered by syndrome integer),
/// one edge per (correctable node, elementary error).
pub fn build_graph(
    code: &StabilizerCode,
    model: &ErrorModel,
    table: &CorrectabilityTable,
) -> Result<SyndromeGraph, GraphError> {
    if table.num_errors() != model.len() {
        return Err(GraphError::MismatchedTable {
            table_errors: table.num_errors(),
            model_errors: model.len(),
        });
    }
    if table.records().len() != code.num_syndromes() {
        return Err(GraphError::MismatchedCode {
            table_syndromes: table.records().len(),
            code_syndromes: code.num_syndromes(),
        });
    }

    let nodes: Vec<GraphNode> = table
        .records()
        .iter()
        .map(|r| GraphNode {
            syndrome: r.syndrome.to_string(),
            index: r.syndrome.as_index(),
            correctable: r.correctable(),
            weight: r.weight,
        })
        .collect();

    let mut edges = Vec::new();
    for rec in table.records().iter().filter(|r| r.correctable()) {
        for j in 0..model.len() {
            let target = rec.syndrome.xor(&table.error_syndromes()[j]);
            edges.push(GraphEdge {
                source: rec.syndrome.as_index(),
                target: target.as_index(),
                error: j,
                label: model.errors()[j].label(),
                class: table.transition_class(&rec.syndrome, j),
                varpi: varpi_of_syndromes(&table.error_syndromes()[j], &rec.syndrome),
            });
        }
    }

    Ok(SyndromeGraph {
        code: code.name().to_string(),
        num_generators: code.num_generators(),
        num_errors: model.len(),
        nodes,
        edges,
    })
}

fn edge_color(edge: &GraphEdge, model: &ErrorModel) -> &'static str {
    if edge.class == TransitionClass::Uncorrectable {
        return "red";
    }
    match model.errors()[edge.error].pauli {
        Pauli::X => "black",
        Pauli::Z => "green",
        Pauli::Y => "orange",
        Pauli::I => "gray",
    }
}

/// GraphViz DOT rendering; colors follow the figure conventions (correctable
/// X black, Z green, Y orange; uncorrectable red).
pub fn export_dot(graph: &SyndromeGraph, model: &ErrorModel) -> String {
    let mut out = String::new();
    out.push_str("digraph syndromes {\n");
    out.push_str(&format!("  label=\"{}\";\n", graph.code));
    for node in &graph.nodes {
        let shape = if node.correctable {
            "circle"
        } else {
            "doublecircle"
        };
        out.push_str(&format!(
            "  n{} [label=\"{}\", shape={}];\n",
            node.index, node.index, shape
        ));
    }
    for edge in &graph.edges {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{}\", color={}];\n",
            edge.source,
            edge.target,
            edge.label,
            edge_color(edge, model)
        ));
    }
    out.push_str("}\n");
    out
}

pub fn export_json(graph: &SyndromeGraph) -> Result<String, GraphError> {
    Ok(serde_json::to_string_pretty(graph)?)
}

pub fn import_json(text: &str) -> Result<SyndromeGraph, GraphError> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

pub fn export_graph(
    graph: &SyndromeGraph,
    model: &ErrorModel,
    format: ExportFormat,
) -> Result<String, GraphError> {
    match format {
        ExportFormat::Dot => Ok(export_dot(graph, model)),
        ExportFormat::Json => export_json(graph),
    }
}
