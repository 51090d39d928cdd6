//! Fixture builders shared by the benchmarks.

use layerflow_core::corpus::CorpusRecord;
use layerflow_core::dsl::{AgentSpec, Difficulty, TopologyDoc};

const ROLES: [&str; 6] = ["retrieval", "planning", "algorithmic", "coding", "debugging", "testing"];

/// A `width`-wide, `depth`-deep topology where every agent refs the whole
/// previous step.
pub fn grid(width: usize, depth: usize, difficulty: Difficulty) -> TopologyDoc {
    let id = |l: usize, j: usize| format!("a{l}_{j}");
    let layers = (0..depth)
        .map(|l| {
            (0..width)
                .map(|j| {
                    let refs: Vec<String> = if l == 0 { Vec::new() } else { (0..width).map(|k| id(l - 1, k)).collect() };
                    AgentSpec::new(id(l, j), ROLES[(l + j) % ROLES.len()], refs)
                })
                .collect()
        })
        .collect();
    TopologyDoc::from_layers(difficulty, layers)
}

/// `n` records over a handful of shapes, so deduplication has work to do.
pub fn corpus(n: usize) -> Vec<CorpusRecord> {
    (0..n)
        .map(|i| {
            let doc = grid(1 + i % 3, 1 + (i / 3) % 3, Difficulty::HARD);
            CorpusRecord {
                id: format!("r{i}"),
                problem_id: format!("p{}", i % 17),
                difficulty: Difficulty::HARD,
                turn: 1,
                yaml: if i % 11 == 0 { "steps: [".into() } else { doc.to_yaml() },
                prior_id: None,
            }
        })
        .collect()
}
