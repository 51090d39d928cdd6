//! The multi-turn episode loop: ask the policy for a topology, validate and
//! decode it, run its agents layer by layer, judge the extracted code and
//! feed the verdict back until the code passes or the turn budget runs out.

mod exec;
mod observation;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adapters::{GenerationParams, Policy, PolicyRequest, RoleBackend, Sandbox, TokenUsage};
use crate::dsl::{check_policy_output, DslConfig, ValidationReport};
use crate::graph::{decode_topo, density_scores, DensityReport, LayeredDag};
use crate::problem::ProblemSpec;
use crate::reward::{trajectory_return, turn_reward, RewardBreakdown, RewardWeights, TurnOutcome};
use crate::roles::RoleName;
use crate::verdict::ExecOutcome;

pub use exec::{
    exec_run, extract_code, AgentMessage, CodeCandidate, ExecFailure, ExecInputs, Memories, PreviousTurn,
    TurnExecution,
};
pub use observation::{
    build_observation, cap_text, invalid_yaml_feedback, render, render_history, HistoryEntry, Observation,
};

/// Prompt text shipped to the policy and the role agents.
///
/// `observation` understands `{turn}`, `{verdict}`, `{time_limit_ms}`,
/// `{memory_limit_mb}`, `{logs}` and `{topology}`. `invalid_yaml`
/// understands `{turn}`, `{error_class}`, `{detail}` and `{output}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplates {
    pub roles: BTreeMap<RoleName, String>,
    pub observation: String,
    pub invalid_yaml: String,
}

const GENERIC_ROLE_PROMPT: &str = "You are one agent in a team solving a programming problem.";

impl Default for PromptTemplates {
    fn default() -> Self {
        let roles = [
            (
                RoleName::Retrieval,
                "You retrieve reference material relevant to the problem. Summarize only what helps solve it.",
            ),
            (
                RoleName::Planning,
                "You are a planner. Break the problem into concrete steps for the agents that follow you.",
            ),
            (
                RoleName::Algorithmic,
                "You design the algorithm. State the approach, its complexity and the tricky cases.",
            ),
            (
                RoleName::Coding,
                "You write the solution. Read standard input, write standard output, and return the complete \
                 program in a single fenced code block labeled with its language.",
            ),
            (
                RoleName::Debugging,
                "You fix the solution using the feedback and the code you were shown. Return the complete \
                 corrected program in a single fenced code block labeled with its language.",
            ),
            (
                RoleName::Testing,
                "You review the solution against the problem and list inputs likely to break it.",
            ),
        ]
        .into_iter()
        .map(|(r, p)| (r, p.to_owned()))
        .collect();
        Self {
            roles,
            observation: "Turn {turn} result: [{verdict}]\n\
                          Limits: {time_limit_ms} ms, {memory_limit_mb} MB.\n\
                          Execution logs:\n{logs}\n\
                          Topology used:\n```yaml\n{topology}```"
                .into(),
            invalid_yaml: "Turn {turn} result: [{error_class}] {detail}\n\
                           The output was rejected before execution. Reply with a single ```yaml block \
                           describing the topology.\n\
                           Rejected output:\n{output}"
                .into(),
        }
    }
}

impl PromptTemplates {
    pub fn role_prompt(&self, role: RoleName) -> &str {
        self.roles.get(&role).map_or(GENERIC_ROLE_PROMPT, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Turn budget `K`.
    pub max_turns: usize,
    pub gamma: f64,
    pub weights: RewardWeights,
    pub dsl: DslConfig,
    /// Language assumed for unlabeled code blocks.
    pub default_language: String,
    pub prompts: PromptTemplates,
    /// Byte cap for logs and echoed policy output in feedback.
    pub log_cap: usize,
    pub policy_params: GenerationParams,
    pub agent_params: GenerationParams,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_turns: 2,
            gamma: 1.0,
            weights: RewardWeights::default(),
            dsl: DslConfig::default(),
            default_language: "python".into(),
            prompts: PromptTemplates::default(),
            log_cap: 4096,
            policy_params: GenerationParams::default(),
            agent_params: GenerationParams::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_turns == 0 {
            return Err("max_turns must be at least 1".into());
        }
        if !self.gamma.is_finite() || !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !self.weights.w_e.is_finite() || !self.weights.w_g.is_finite() {
            return Err("reward weights must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorKind {
    Config,
    Policy,
    /// A role agent failed mid-turn.
    Runtime,
    Sandbox,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?} failure on turn {turn}: {message}")]
pub struct EpisodeError {
    pub kind: ErrorKind,
    pub turn: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EpisodeStatus {
    Passed,
    /// The turn budget ran out without a passing submission.
    Exhausted,
    Aborted,
}

/// Everything that happened in one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub policy_text: String,
    pub validation: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dag: Option<LayeredDag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityReport>,
    pub messages: Vec<AgentMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<ExecOutcome>,
    /// Absent when the turn was aborted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
    pub policy_usage: TokenUsage,
    pub agent_usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub problem_id: String,
    pub gamma: f64,
    pub turns: Vec<TurnRecord>,
    /// `r_phi` of every completed turn.
    pub rewards: Vec<f64>,
    pub return_value: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub policy: TokenUsage,
    pub agents: TokenUsage,
    pub total: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub status: EpisodeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<EpisodeError>,
    pub trajectory: Trajectory,
    pub history: Vec<HistoryEntry>,
    pub usage: UsageTotals,
    pub sandbox_calls: usize,
}

struct EpisodeState {
    history: Vec<HistoryEntry>,
    memories: Memories,
    previous: Option<PreviousTurn>,
    latest_observation: Option<String>,
    turns: Vec<TurnRecord>,
    usage: UsageTotals,
    sandbox_calls: usize,
}

/// Runs one episode on `problem`.
///
/// Adapter failures end the episode with [`EpisodeStatus::Aborted`]; turns
/// completed before the failure, and the partial record of the failing
/// turn, are kept.
pub fn run_episode(
    problem: &ProblemSpec,
    policy: &dyn Policy,
    roles: &dyn RoleBackend,
    sandbox: &dyn Sandbox,
    config: &EpisodeConfig,
) -> EpisodeResult {
    let mut state = EpisodeState {
        history: Vec::new(),
        memories: Memories::new(),
        previous: None,
        latest_observation: None,
        turns: Vec::new(),
        usage: UsageTotals::default(),
        sandbox_calls: 0,
    };
    let finish = |state: EpisodeState, status, error| finish(problem, config, state, status, error);

    if let Err(message) = config.validate() {
        let error = EpisodeError {
            kind: ErrorKind::Config,
            turn: 0,
            message,
        };
        return finish(state, EpisodeStatus::Aborted, Some(error));
    }

    let mut dsl = config.dsl.clone();
    dsl.difficulty_fallback = problem.difficulty.or(config.dsl.difficulty_fallback);

    for k in 1..=config.max_turns {
        let request = PolicyRequest {
            problem,
            turn: k,
            history_prompt: render_history(&state.history),
            params: config.policy_params.clone(),
        };
        let response = match policy.generate(&request) {
            Ok(r) => r,
            Err(e) => {
                let error = EpisodeError {
                    kind: ErrorKind::Policy,
                    turn: k,
                    message: e.to_string(),
                };
                return finish(state, EpisodeStatus::Aborted, Some(error));
            }
        };
        state.usage.policy += response.usage;

        let prior_ids: BTreeSet<String> = state
            .previous
            .as_ref()
            .map(|p| p.dag.nodes.keys().cloned().collect())
            .unwrap_or_default();
        let checked = check_policy_output(&response.content, &prior_ids, &dsl);
        let validation = ValidationReport::from(&checked);
        let mut record = TurnRecord {
            turn: k,
            policy_text: response.content,
            validation,
            dag: None,
            density: None,
            messages: Vec::new(),
            code: None,
            outcome: None,
            reward: None,
            policy_usage: response.usage,
            agent_usage: TokenUsage::default(),
        };

        let doc = match checked {
            Ok(doc) => doc,
            Err(error) => {
                record.reward = Some(turn_reward(TurnOutcome::InvalidYaml(error.class), config.weights));
                let feedback = invalid_yaml_feedback(k, &error, &record.policy_text, &config.prompts, config.log_cap);
                state.history.push(HistoryEntry::InvalidYaml {
                    turn: k,
                    error: ValidationReport::from(&error),
                    feedback,
                });
                state.turns.push(record);
                continue;
            }
        };

        let mut dag = decode_topo(&doc, state.previous.as_ref().map(|p| &p.dag));
        dag.turn = k;
        let density = density_scores(&dag, dag.difficulty);

        let inputs = ExecInputs {
            problem,
            config,
            roles,
            sandbox,
            previous: state.previous.as_ref(),
            memories: &state.memories,
            feedback: state.latest_observation.as_deref(),
        };
        let execution = match exec_run(&inputs, &dag) {
            Ok(x) => x,
            Err(failure) => {
                state.usage.agents += failure.usage;
                record.agent_usage = failure.usage;
                record.messages = failure.messages;
                record.dag = Some(dag);
                record.density = Some(density);
                state.turns.push(record);
                return finish(state, EpisodeStatus::Aborted, Some(failure.error));
            }
        };

        state.usage.agents += execution.usage;
        if execution.sandbox_called {
            state.sandbox_calls += 1;
        }
        for m in &execution.messages {
            state.memories.entry(m.agent_id.clone()).or_default().push(m.clone());
        }

        let verdict = execution.outcome.verdict;
        let reward = turn_reward(
            TurnOutcome::Executed {
                report: &density,
                verdict,
            },
            config.weights,
        );
        let observation = (!verdict.is_passed())
            .then(|| build_observation(&execution.outcome, &dag, problem, &config.prompts, config.log_cap));
        state.latest_observation = observation.as_ref().map(|o| o.prompt.clone());
        state.history.push(HistoryEntry::Executed {
            turn: k,
            topology: dag.to_doc().to_yaml(),
            verdict,
            observation,
        });

        record.agent_usage = execution.usage;
        record.reward = Some(reward);
        record.code = execution.code;
        record.outcome = Some(execution.outcome);
        record.messages = execution.messages.clone();
        record.density = Some(density);
        record.dag = Some(dag.clone());
        state.turns.push(record);
        state.previous = Some(PreviousTurn {
            dag,
            messages: execution
                .messages
                .into_iter()
                .map(|m| (m.agent_id.clone(), m))
                .collect(),
        });

        if verdict.is_passed() {
            return finish(state, EpisodeStatus::Passed, None);
        }
    }

    finish(state, EpisodeStatus::Exhausted, None)
}

fn finish(
    problem: &ProblemSpec,
    config: &EpisodeConfig,
    mut state: EpisodeState,
    status: EpisodeStatus,
    error: Option<EpisodeError>,
) -> EpisodeResult {
    let rewards: Vec<f64> = state.turns.iter().filter_map(|t| t.reward.map(|r| r.r_phi)).collect();
    state.usage.total = state.usage.policy + state.usage.agents;
    EpisodeResult {
        status,
        error,
        trajectory: Trajectory {
            problem_id: problem.id.clone(),
            gamma: config.gamma,
            return_value: trajectory_return(&rewards, config.gamma),
            rewards,
            turns: state.turns,
        },
        history: state.history,
        usage: state.usage,
        sandbox_calls: state.sandbox_calls,
    }
}
