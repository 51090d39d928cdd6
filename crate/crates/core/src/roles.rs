//! The agent role pool.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six agent kinds an orchestrator may instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleName {
    Retrieval,
    Planning,
    Algorithmic,
    Coding,
    Debugging,
    Testing,
}

impl RoleName {
    pub const ALL: [RoleName; 6] = [
        RoleName::Retrieval,
        RoleName::Planning,
        RoleName::Algorithmic,
        RoleName::Coding,
        RoleName::Debugging,
        RoleName::Testing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleName::Retrieval => "retrieval",
            RoleName::Planning => "planning",
            RoleName::Algorithmic => "algorithmic",
            RoleName::Coding => "coding",
            RoleName::Debugging => "debugging",
            RoleName::Testing => "testing",
        }
    }

    /// Agent-noun spellings accepted by the default pool.
    fn aliases(self) -> &'static [&'static str] {
        match self {
            RoleName::Retrieval => &["retriever"],
            RoleName::Planning => &["planner"],
            RoleName::Algorithmic => &["algorithm", "algorithmist"],
            RoleName::Coding => &["coder"],
            RoleName::Debugging => &["debugger"],
            RoleName::Testing => &["tester"],
        }
    }
}

impl fmt::Display for RoleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// Maps the role names a topology may use onto agent kinds.
///
/// The default pool accepts each kind's canonical name plus its agent-noun
/// alias (`planner`, `coder`, ...). Custom pools may restrict or extend it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RolePool {
    names: BTreeMap<String, RoleName>,
}

impl RolePool {
    pub fn empty() -> Self {
        Self {
            names: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, role: RoleName) -> Self {
        self.names.insert(name.into(), role);
        self
    }

    pub fn resolve(&self, name: &str) -> Option<RoleName> {
        self.names.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.keys().map(String::as_str)
    }
}

impl Default for RolePool {
    fn default() -> Self {
        let mut pool = RolePool::empty();
        for role in RoleName::ALL {
            pool = pool.with(role.as_str(), role);
            for alias in role.aliases() {
                pool = pool.with(*alias, role);
            }
        }
        pool
    }
}
