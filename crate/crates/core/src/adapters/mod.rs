//! Backends the orchestrator talks to: the topology policy, the role
//! agents and the code sandbox. Each has a scripted implementation for
//! deterministic runs and a real one (chat-completion HTTP, local
//! subprocess executor).

mod local;
mod remote;
mod scripted;
mod wire;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::problem::{ProblemSpec, TestCase};
use crate::roles::RoleName;
use crate::verdict::ExecOutcome;

pub use local::{ExecutorConfig, LanguageConfig, LocalExecutor};
pub use remote::{RemotePolicy, RemoteRoles};
pub use scripted::{DelayFn, ScriptedPolicy, ScriptedRoles, ScriptedSandbox, NO_RETRIEVAL_CONTEXT};
pub use wire::{ChatClient, ChatMessage, EndpointConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    /// Whitespace-token estimate used by scripted backends.
    pub fn estimate(prompt: &str, completion: &str) -> Self {
        Self {
            prompt_tokens: prompt.split_whitespace().count() as u64,
            completion_tokens: completion.split_whitespace().count() as u64,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct PolicyRequest<'a> {
    pub problem: &'a ProblemSpec,
    pub turn: usize,
    /// Rendered history of earlier turns; empty on turn 1.
    pub history_prompt: String,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResponse {
    pub content: String,
    pub usage: TokenUsage,
}

/// A source-tagged input message for a role agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub source: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub agent_id: String,
    pub role: RoleName,
    pub turn: usize,
    pub system_prompt: String,
    pub messages: Vec<Message>,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub content: String,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone)]
pub struct Submission<'a> {
    pub source: &'a str,
    pub language: &'a str,
    pub tests: &'a [TestCase],
    pub time_limit_ms: u64,
    pub memory_limit_mb: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdapterError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("script exhausted after {0} call(s)")]
    ScriptExhausted(usize),
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SandboxError {
    #[error("sandbox infrastructure failure: {0}")]
    Infrastructure(String),
    #[error("invalid submission: {0}")]
    Usage(String),
}

/// Emits the raw topology text for a turn.
pub trait Policy: Send + Sync {
    fn generate(&self, request: &PolicyRequest<'_>) -> Result<PolicyResponse, AdapterError>;
}

/// Runs one role agent. Must tolerate concurrent calls.
pub trait RoleBackend: Send + Sync {
    fn respond(&self, request: &AgentRequest) -> Result<AgentResponse, AdapterError>;
}

/// Compiles and judges a candidate program.
pub trait Sandbox: Send + Sync {
    fn execute(&self, submission: &Submission<'_>) -> Result<ExecOutcome, SandboxError>;
}
