use serde::{Deserialize, Serialize};

use super::{counts, LayeredDag};

/// Token cost of one turn under fixed per-message length `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub m: u64,
    /// `m (|V| + |V| |V_prev| + 2|E|)`
    pub total: u64,
    /// `m (1 + |V| + 2|E| / |V|)`
    pub per_agent: f64,
}

pub fn cost_estimate(dag: &LayeredDag, prev_v: usize, m: u64) -> CostEstimate {
    let c = counts(dag);
    cost_from_counts(c.v_count, c.e_count, prev_v, m)
}

pub(crate) fn cost_from_counts(v: usize, e: usize, prev_v: usize, m: u64) -> CostEstimate {
    let (v64, e64, p64) = (v as u64, e as u64, prev_v as u64);
    CostEstimate {
        m,
        total: m * (v64 + v64 * p64 + 2 * e64),
        per_agent: m as f64 * (1.0 + v as f64 + 2.0 * e as f64 / v as f64),
    }
}
