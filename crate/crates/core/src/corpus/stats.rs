use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{filter, CorpusRecord};
use crate::dsl::DslConfig;
use crate::graph::{counts, decode_topo, density_scores};

/// Order statistics with linear interpolation between closest ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    /// Returns `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: sorted[0],
            p25: q(0.25),
            p50: q(0.5),
            p75: q(0.75),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

/// Histogram and summary of an integer-valued measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub histogram: BTreeMap<usize, usize>,
    pub summary: Summary,
}

impl Distribution {
    fn of(values: &[usize]) -> Option<Self> {
        let mut histogram = BTreeMap::new();
        for &v in values {
            *histogram.entry(v).or_insert(0) += 1;
        }
        let floats: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        Some(Self {
            histogram,
            summary: Summary::of(&floats)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyStats {
    pub count: usize,
    pub nodes: Distribution,
    pub edges: Distribution,
    pub steps: Distribution,
    pub s_complex: Summary,
}

/// Per-difficulty statistics keyed by level. Levels absent from the data
/// have no entry.
pub type CorpusStats = BTreeMap<u8, DifficultyStats>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("record `{id}` does not decode: {detail}")]
pub struct StatsError {
    pub id: String,
    pub detail: String,
}

#[derive(Default)]
struct Samples {
    nodes: Vec<usize>,
    edges: Vec<usize>,
    steps: Vec<usize>,
    s_complex: Vec<f64>,
}

/// Distribution of `|V|`, `|E|`, `s` and `s_complex` per difficulty level.
pub fn corpus_stats(records: &[CorpusRecord], dsl: &DslConfig) -> Result<CorpusStats, StatsError> {
    let mut samples: BTreeMap<u8, Samples> = BTreeMap::new();
    for record in records {
        let doc = filter::parse_record(record, dsl).map_err(|e| StatsError {
            id: record.id.clone(),
            detail: e.to_string(),
        })?;
        let dag = decode_topo(&doc, None);
        let c = counts(&dag);
        let report = density_scores(&dag, record.difficulty);
        let entry = samples.entry(record.difficulty.level()).or_default();
        entry.nodes.push(c.v_count);
        entry.edges.push(c.e_count);
        entry.steps.push(c.s);
        entry.s_complex.push(report.s_complex);
    }
    Ok(samples
        .into_iter()
        .map(|(level, s)| {
            let stats = DifficultyStats {
                count: s.nodes.len(),
                nodes: Distribution::of(&s.nodes).expect("non-empty"),
                edges: Distribution::of(&s.edges).expect("non-empty"),
                steps: Distribution::of(&s.steps).expect("non-empty"),
                s_complex: Summary::of(&s.s_complex).expect("non-empty"),
            };
            (level, stats)
        })
        .collect())
}
