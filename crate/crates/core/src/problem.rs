use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::Difficulty;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub expected_output: String,
}

/// A programming task with its judge tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub description: String,
    pub tests: Vec<TestCase>,
    pub time_limit_ms: u64,
    pub memory_limit_mb: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl ProblemSpec {
    /// Loads either a single problem object or an array of them.
    pub fn load_all(path: &Path) -> Result<Vec<ProblemSpec>, ProblemError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: display.clone(),
            source,
        })?;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany {
            Many(Vec<ProblemSpec>),
            One(Box<ProblemSpec>),
        }
        let parsed: OneOrMany = serde_json::from_str(&text).map_err(|source| ProblemError::Json {
            path: display,
            source,
        })?;
        Ok(match parsed {
            OneOrMany::Many(v) => v,
            OneOrMany::One(p) => vec![*p],
        })
    }
}
