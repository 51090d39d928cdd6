use std::collections::HashMap;

use super::{EdgeKind, LayeredDag};

/// Longest path length (in nodes) over intra-turn edges.
///
/// Layers are a topological order, so one pass suffices: a node's depth is
/// one more than the deepest of its intra-turn predecessors.
pub fn depth_oracle(dag: &LayeredDag) -> usize {
    let mut depth: HashMap<&str, usize> = HashMap::with_capacity(dag.nodes.len());
    let mut best = 0;
    for id in dag.ordered_ids() {
        let d = 1 + dag
            .in_edges(id)
            .filter(|e| e.kind == EdgeKind::IntraTurn)
            .filter_map(|e| depth.get(e.src.as_str()))
            .max()
            .copied()
            .unwrap_or(0);
        best = best.max(d);
        depth.insert(id, d);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{AgentSpec, Difficulty, TopologyDoc};
    use crate::graph::decode_topo;

    fn agent(id: &str, refs: &[&str]) -> AgentSpec {
        AgentSpec::new(id, "coder", refs.iter().copied())
    }

    #[test]
    fn chain_visits_every_layer() {
        let doc = TopologyDoc::from_layers(
            Difficulty::EASY,
            vec![vec![agent("a", &[])], vec![agent("b", &["a"])], vec![agent("c", &["b"])]],
        );
        assert_eq!(depth_oracle(&decode_topo(&doc, None)), 3);
    }

    #[test]
    fn skipped_layer_is_shallower_than_step_count() {
        let doc = TopologyDoc::from_layers(
            Difficulty::EASY,
            vec![vec![agent("a", &[])], vec![agent("b", &[])], vec![agent("c", &["a", "b"])]],
        );
        assert_eq!(depth_oracle(&decode_topo(&doc, None)), 2);
    }

    #[test]
    fn isolated_nodes_have_depth_one() {
        let doc = TopologyDoc::from_layers(Difficulty::EASY, vec![vec![agent("a", &[]), agent("b", &[])]]);
        assert_eq!(depth_oracle(&decode_topo(&doc, None)), 1);
    }
}
