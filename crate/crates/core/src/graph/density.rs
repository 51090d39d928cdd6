use serde::{Deserialize, Serialize};

use super::{counts, LayeredDag};
use crate::dsl::Difficulty;

/// Size, sparsity and depth scores of one turn's topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub v_count: usize,
    pub e_count: usize,
    pub s: usize,
    pub s_node: f64,
    pub s_edge: f64,
    pub s_depth: f64,
    pub s_complex: f64,
    /// Un-normalized density `|V| + 2|E|/|V| + s`.
    pub raw_density: f64,
    pub difficulty: Difficulty,
    pub n_max: usize,
}

impl DensityReport {
    pub fn within_node_cap(&self) -> bool {
        self.v_count <= self.n_max
    }
}

pub fn density_scores(dag: &LayeredDag, difficulty: Difficulty) -> DensityReport {
    let c = counts(dag);
    density_from_counts(c.v_count, c.e_count, c.s, difficulty)
}

/// Scores from raw counts.
///
/// ```text
/// s_node    = exp(-|V| / N_max(l))
/// s_edge    = exp(-|E| / (|V| (|V| - 0.5)))
/// s_depth   = 1 - s / |V|
/// s_complex = exp(s_node + 2 s_edge + s_depth)
/// ```
///
/// # Panics
/// If `v_count` is zero.
pub fn density_from_counts(v_count: usize, e_count: usize, s: usize, difficulty: Difficulty) -> DensityReport {
    assert!(v_count > 0, "density is undefined for an empty topology");
    let v = v_count as f64;
    let e = e_count as f64;
    let depth = s as f64;
    let n_max = difficulty.n_max();

    let s_node = (-v / n_max as f64).exp();
    let s_edge = (-e / (v * (v - 0.5))).exp();
    let s_depth = 1.0 - depth / v;
    let s_complex = (s_node + 2.0 * s_edge + s_depth).exp();
    let raw_density = v + 2.0 * e / v + depth;

    DensityReport {
        v_count,
        e_count,
        s,
        s_node,
        s_edge,
        s_depth,
        s_complex,
        raw_density,
        difficulty,
        n_max,
    }
}
