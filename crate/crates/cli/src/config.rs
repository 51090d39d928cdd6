//! Run configuration loaded from TOML.

use std::path::Path;

use layerflow_core::adapters::{EndpointConfig, ExecutorConfig};
use layerflow_core::orchestrator::PromptTemplates;
use layerflow_core::reward::{KlEstimator, SurrogateConfig};
use layerflow_core::{Difficulty, DslConfig, EpisodeConfig, ExecVerdict, RewardWeights, RolePool};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SandboxKind {
    Local,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub kind: BackendKind,
    /// JSON array of completions, one per turn, for the scripted policy.
    pub script: Option<String>,
    pub system_prompt: String,
    pub endpoint: EndpointConfig,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Remote,
            script: None,
            system_prompt: "You design the collaboration topology for a team of role agents solving a \
                            programming problem. Reply with one ```yaml block holding `difficulty` (1-3) and \
                            `steps`, each step listing agents as {id, role, ref}. Step 1 agents have empty refs; \
                            later agents may reference agents of earlier steps or of the previous turn. Roles: \
                            retrieval, planning, algorithmic, coding, debugging, testing."
                .into(),
            endpoint: EndpointConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolesSection {
    pub kind: BackendKind,
    /// Language label used by scripted coding agents.
    pub language: String,
    /// Programs returned by scripted coding agents, one per turn.
    pub solutions: Vec<String>,
    /// Defaults to the policy endpoint.
    pub endpoint: Option<EndpointConfig>,
}

impl Default for RolesSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Remote,
            language: "python".into(),
            solutions: Vec::new(),
            endpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxSection {
    pub kind: SandboxKind,
    /// Verdicts replayed by the scripted sandbox.
    pub verdicts: Vec<ExecVerdict>,
    pub executor: ExecutorConfig,
}

impl Default for SandboxSection {
    fn default() -> Self {
        Self {
            kind: SandboxKind::Local,
            verdicts: Vec::new(),
            executor: ExecutorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Turn budget `K`.
    pub max_turns: usize,
    pub gamma: f64,
    pub weights: RewardWeights,
    pub eps_clip: f64,
    pub beta: f64,
    pub kl: KlEstimator,
    /// GRPO group size `G`.
    pub group_size: usize,
    /// Used when neither the problem nor the topology states a difficulty.
    pub difficulty: Option<Difficulty>,
    pub default_language: String,
    pub log_cap: usize,
    pub role_pool: Option<RolePool>,
    pub prompts: PromptTemplates,
    pub policy: PolicySection,
    pub roles: RolesSection,
    pub sandbox: SandboxSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let episode = EpisodeConfig::default();
        let surrogate = SurrogateConfig::default();
        Self {
            max_turns: episode.max_turns,
            gamma: episode.gamma,
            weights: episode.weights,
            eps_clip: surrogate.eps_clip,
            beta: surrogate.beta,
            kl: surrogate.kl,
            group_size: 8,
            difficulty: None,
            default_language: episode.default_language,
            log_cap: episode.log_cap,
            role_pool: None,
            prompts: episode.prompts,
            policy: PolicySection::default(),
            roles: RolesSection::default(),
            sandbox: SandboxSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_turns < 1 {
            return Err("max_turns must be at least 1".into());
        }
        if self.group_size < 2 {
            return Err("group_size must be at least 2".into());
        }
        if !(self.gamma.is_finite() && (0.0..=1.0).contains(&self.gamma)) {
            return Err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.eps_clip.is_finite() && self.eps_clip > 0.0) {
            return Err(format!("eps_clip must be positive, got {}", self.eps_clip));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.weights.w_e.is_finite() && self.weights.w_g.is_finite()) {
            return Err("weights must be finite".into());
        }
        if self.log_cap == 0 {
            return Err("log_cap must be positive".into());
        }
        let exec = &self.sandbox.executor;
        if exec.workers == 0 || exec.time_limit_ms == 0 || exec.memory_limit_mb == 0 || exec.max_output_bytes == 0 {
            return Err("executor limits and worker count must be positive".into());
        }
        Ok(())
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            max_turns: self.max_turns,
            gamma: self.gamma,
            weights: self.weights,
            dsl: DslConfig {
                roles: self.role_pool.clone().unwrap_or_default(),
                difficulty_fallback: self.difficulty,
            },
            default_language: self.default_language.clone(),
            prompts: self.prompts.clone(),
            log_cap: self.log_cap,
            policy_params: Default::default(),
            agent_params: Default::default(),
        }
    }

    pub fn surrogate(&self) -> SurrogateConfig {
        SurrogateConfig {
            eps_clip: self.eps_clip,
            beta: self.beta,
            kl: self.kl,
        }
    }
}
