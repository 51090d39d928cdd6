//! Quality filtering and statistics for topology corpora stored as JSONL.

mod filter;
mod stats;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dsl::Difficulty;

pub use filter::{
    filter_corpus, CommandValidator, ComplexityBand, FilterConfig, FilterOutput, FilterReport, RecordOutcome,
    RecordValidator, RejectReason,
};
pub use stats::{corpus_stats, CorpusStats, DifficultyStats, Distribution, StatsError, Summary};

/// One topology sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub problem_id: String,
    pub difficulty: Difficulty,
    pub turn: usize,
    /// Bare YAML, or text holding a fenced YAML block.
    pub yaml: String,
    /// Record holding the previous turn of the same episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_id: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads one record per non-blank line.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<'a>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
