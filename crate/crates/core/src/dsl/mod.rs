//! The YAML interaction-topology DSL.
//!
//! A policy completion is checked in four stages, each owning one error
//! class: fenced-block extraction ([`YamlErrorClass::NoYamlFound`]), YAML
//! syntax ([`YamlErrorClass::ParseError`]), document shape
//! ([`YamlErrorClass::SchemaInvalid`]) and referential rules
//! ([`YamlErrorClass::LogicInvalid`]). The first failing stage wins.
//!
//! Wire shape:
//!
//! ```yaml
//! difficulty: 1
//! steps:
//!   - step: 1
//!     agents:
//!       - {id: planner_1, role: planner, ref: []}
//!   - step: 2
//!     agents:
//!       - {id: coder_1, role: coder, ref: [planner_1]}
//! ```

mod canonical;
mod extract;
mod parse;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::roles::RolePool;

pub use canonical::canonicalize;
pub use extract::extract_yaml_block;
pub use parse::parse_topology;
pub use validate::{validate_logic, LogicRule};

/// Task difficulty level `l` in `{1, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Difficulty(u8);

impl Difficulty {
    pub const EASY: Difficulty = Difficulty(1);
    pub const MEDIUM: Difficulty = Difficulty(2);
    pub const HARD: Difficulty = Difficulty(3);

    pub fn new(level: u8) -> Option<Self> {
        (1..=3).contains(&level).then_some(Difficulty(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    /// Per-turn node cap `N_max(l)`.
    pub fn n_max(self) -> usize {
        match self.0 {
            1 => 4,
            2 => 7,
            _ => 10,
        }
    }
}

impl TryFrom<u8> for Difficulty {
    type Error = String;

    fn try_from(level: u8) -> Result<Self, Self::Error> {
        Difficulty::new(level).ok_or_else(|| format!("difficulty must be 1, 2 or 3, got {level}"))
    }
}

impl From<Difficulty> for u8 {
    fn from(d: Difficulty) -> u8 {
        d.0
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub role: String,
    #[serde(rename = "ref")]
    pub refs: Vec<String>,
}

impl AgentSpec {
    pub fn new<I, S>(id: impl Into<String>, role: impl Into<String>, refs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            role: role.into(),
            refs: refs.into_iter().map(Into::into).collect(),
        }
    }
}

/// One layer of the topology. `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "step")]
    pub index: usize,
    pub agents: Vec<AgentSpec>,
}

/// A parsed, schema-valid turn plan.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub difficulty: Difficulty,
    pub steps: Vec<Step>,
}

impl TopologyDoc {
    /// Builds a doc from per-layer agent lists, numbering steps from 1.
    pub fn from_layers(difficulty: Difficulty, layers: Vec<Vec<AgentSpec>>) -> Self {
        let steps = layers
            .into_iter()
            .enumerate()
            .map(|(i, agents)| Step {
                index: i + 1,
                agents,
            })
            .collect();
        Self { difficulty, steps }
    }

    pub fn agents(&self) -> impl Iterator<Item = (&Step, &AgentSpec)> {
        self.steps
            .iter()
            .flat_map(|step| step.agents.iter().map(move |a| (step, a)))
    }

    pub fn agent_ids(&self) -> BTreeSet<String> {
        self.agents().map(|(_, a)| a.id.clone()).collect()
    }

    pub fn agent_count(&self) -> usize {
        self.steps.iter().map(|s| s.agents.len()).sum()
    }

    /// Serializes in the wire shape accepted by [`parse_topology`].
    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("topology docs always serialize")
    }
}

/// The four topology error classes, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum YamlErrorClass {
    NoYamlFound,
    #[serde(rename = "YAML_PARSE_ERROR")]
    ParseError,
    #[serde(rename = "YAML_SCHEMA_INVALID")]
    SchemaInvalid,
    #[serde(rename = "YAML_LOGIC_INVALID")]
    LogicInvalid,
}

impl YamlErrorClass {
    pub const ALL: [YamlErrorClass; 4] = [
        YamlErrorClass::NoYamlFound,
        YamlErrorClass::ParseError,
        YamlErrorClass::SchemaInvalid,
        YamlErrorClass::LogicInvalid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            YamlErrorClass::NoYamlFound => "NO_YAML_FOUND",
            YamlErrorClass::ParseError => "YAML_PARSE_ERROR",
            YamlErrorClass::SchemaInvalid => "YAML_SCHEMA_INVALID",
            YamlErrorClass::LogicInvalid => "YAML_LOGIC_INVALID",
        }
    }
}

impl fmt::Display for YamlErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where in a document a problem was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("[{class}] {detail}")]
pub struct ValidationError {
    pub class: YamlErrorClass,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<LogicRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl ValidationError {
    pub(crate) fn new(class: YamlErrorClass, detail: impl Into<String>) -> Self {
        Self {
            class,
            detail: detail.into(),
            rule: None,
            location: None,
        }
    }

    pub(crate) fn at(mut self, step: Option<usize>, agent: Option<&str>) -> Self {
        self.location = Some(Location {
            step,
            agent: agent.map(str::to_owned),
        });
        self
    }
}

/// Serializable classification of a check: `"ok"` or an error class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<LogicRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl ValidationReport {
    pub const OK: &'static str = "ok";

    pub fn ok() -> Self {
        Self {
            class: Self::OK.to_owned(),
            detail: None,
            rule: None,
            location: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.class == Self::OK
    }
}

impl From<&ValidationError> for ValidationReport {
    fn from(e: &ValidationError) -> Self {
        Self {
            class: e.class.as_str().to_owned(),
            detail: Some(e.detail.clone()),
            rule: e.rule,
            location: e.location.clone(),
        }
    }
}

impl<T> From<&Result<T, ValidationError>> for ValidationReport {
    fn from(r: &Result<T, ValidationError>) -> Self {
        match r {
            Ok(_) => ValidationReport::ok(),
            Err(e) => e.into(),
        }
    }
}

/// Settings shared by parsing and logic validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DslConfig {
    #[serde(default)]
    pub roles: RolePool,
    /// Used when a document omits `difficulty`. Without it, a missing
    /// header is a schema error.
    #[serde(default)]
    pub difficulty_fallback: Option<Difficulty>,
}

/// Runs the full check on a raw policy completion: extraction, parse,
/// schema, then logic against the previous turn's agent ids.
pub fn check_policy_output(
    text: &str,
    prior_ids: &BTreeSet<String>,
    config: &DslConfig,
) -> Result<TopologyDoc, ValidationError> {
    let yaml = extract_yaml_block(text)?;
    check_yaml(yaml, prior_ids, config)
}

/// Like [`check_policy_output`] but for bare YAML with no fences.
pub fn check_yaml(
    yaml: &str,
    prior_ids: &BTreeSet<String>,
    config: &DslConfig,
) -> Result<TopologyDoc, ValidationError> {
    let doc = parse_topology(yaml, config)?;
    validate_logic(&doc, prior_ids, &config.roles)?;
    Ok(doc)
}
