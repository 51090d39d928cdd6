//! Strict layered DAGs decoded from topology docs, plus the density, depth
//! and token-cost measures computed over them.

mod cost;
mod density;
mod depth;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsl::{Difficulty, TopologyDoc};

pub use cost::{cost_estimate, CostEstimate};
pub use density::{density_from_counts, density_scores, DensityReport};
pub use depth::depth_oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Declared ref to an earlier step of the same turn.
    IntraTurn,
    /// Declared ref to a different agent of the previous turn.
    CrossTurn,
    /// Implicit link from an agent to its own instance in the previous turn.
    SelfTurn,
}

/// A directed edge. For `CrossTurn` and `SelfTurn` the source id names a
/// node of the previous turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub role: String,
    /// 1-based layer index.
    pub layer: usize,
}

/// One turn's topology as a strict layered DAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredDag {
    /// 1-based turn index.
    pub turn: usize,
    pub difficulty: Difficulty,
    /// `layers[i]` holds the ids of layer `i + 1`, in document order.
    pub layers: Vec<Vec<String>>,
    pub nodes: BTreeMap<String, NodeInfo>,
    /// Edges grouped by destination in document order; declared refs come
    /// first (in ref order), then the destination's self-turn edge if any.
    pub edges: Vec<Edge>,
}

/// `(|V|, |E|, s)` for one turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub v_count: usize,
    pub e_count: usize,
    pub s: usize,
}

/// Decodes a validated doc into a layered DAG.
///
/// Each ref becomes one edge. A ref resolves to an earlier step of the
/// current turn when possible, otherwise to the previous turn. Every agent
/// id shared with the previous turn also gets a self-turn edge.
pub fn decode_topo(doc: &TopologyDoc, prev: Option<&LayeredDag>) -> LayeredDag {
    let turn = prev.map_or(1, |p| p.turn + 1);
    let mut nodes = BTreeMap::new();
    let mut layers = Vec::with_capacity(doc.steps.len());
    let mut edges = Vec::new();

    for (i, step) in doc.steps.iter().enumerate() {
        let layer = i + 1;
        for agent in &step.agents {
            for r in &agent.refs {
                // `nodes` only holds earlier steps at this point
                let kind = if nodes.contains_key(r) {
                    EdgeKind::IntraTurn
                } else {
                    EdgeKind::CrossTurn
                };
                edges.push(Edge {
                    src: r.clone(),
                    dst: agent.id.clone(),
                    kind,
                });
            }
            if prev.is_some_and(|p| p.nodes.contains_key(&agent.id)) {
                edges.push(Edge {
                    src: agent.id.clone(),
                    dst: agent.id.clone(),
                    kind: EdgeKind::SelfTurn,
                });
            }
        }
        for agent in &step.agents {
            nodes.insert(
                agent.id.clone(),
                NodeInfo {
                    role: agent.role.clone(),
                    layer,
                },
            );
        }
        layers.push(step.agents.iter().map(|a| a.id.clone()).collect());
    }

    LayeredDag {
        turn,
        difficulty: doc.difficulty,
        layers,
        nodes,
        edges,
    }
}

/// Node, declared-edge and step counts. Self-turn edges are not counted.
pub fn counts(dag: &LayeredDag) -> Counts {
    Counts {
        v_count: dag.layers.iter().map(Vec::len).sum(),
        e_count: dag
            .edges
            .iter()
            .filter(|e| e.kind != EdgeKind::SelfTurn)
            .count(),
        s: dag.layers.len(),
    }
}

impl LayeredDag {
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Incoming edges of `id`, in declaration order.
    pub fn in_edges<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.dst == id)
    }

    /// Node ids in layer order, then document order within a layer.
    pub fn ordered_ids(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().flatten().map(String::as_str)
    }

    /// Rebuilds the doc this DAG was decoded from (refs in declared order).
    pub fn to_doc(&self) -> TopologyDoc {
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|id| crate::dsl::AgentSpec {
                        id: id.clone(),
                        role: self.nodes[id].role.clone(),
                        refs: self
                            .in_edges(id)
                            .filter(|e| e.kind != EdgeKind::SelfTurn)
                            .map(|e| e.src.clone())
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        TopologyDoc::from_layers(self.difficulty, layers)
    }

    /// Graphviz text. Previous-turn sources are drawn as `id@k-1` nodes.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph turn_{} {{", self.turn);
        let _ = writeln!(out, "  rankdir=LR;");
        for (i, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_step_{} {{", i + 1);
            let _ = writeln!(out, "    label=\"step {}\";", i + 1);
            for id in layer {
                let _ = writeln!(out, "    \"{id}\" [label=\"{id}\\n{}\"];", self.nodes[id].role);
            }
            let _ = writeln!(out, "  }}");
        }
        for e in &self.edges {
            match e.kind {
                EdgeKind::IntraTurn => {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\";", e.src, e.dst);
                }
                EdgeKind::CrossTurn | EdgeKind::SelfTurn => {
                    let _ = writeln!(
                        out,
                        "  \"{}@{}\" -> \"{}\" [style=dashed];",
                        e.src,
                        self.turn - 1,
                        e.dst
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
