//! Per-turn rewards, trajectory returns and GRPO quantities.

mod grpo;

use serde::{Deserialize, Serialize};

use crate::dsl::YamlErrorClass;
use crate::graph::DensityReport;
use crate::verdict::ExecVerdict;

pub use grpo::{
    grpo_advantages, grpo_surrogate, GrpoError, KlEstimator, SurrogateConfig, TrajectoryLogProbs,
    DEFAULT_EPS_STD,
};

/// Penalty for a topology that failed validation.
pub fn yaml_error_reward(class: YamlErrorClass) -> f64 {
    match class {
        YamlErrorClass::NoYamlFound => -2.0,
        YamlErrorClass::ParseError => -1.5,
        YamlErrorClass::SchemaInvalid => -1.0,
        YamlErrorClass::LogicInvalid => -0.5,
    }
}

/// Reward for a sandbox verdict.
pub fn exec_reward(verdict: ExecVerdict) -> f64 {
    match verdict {
        ExecVerdict::Passed => 1.5,
        ExecVerdict::WrongAnswer => 1.0,
        ExecVerdict::TimeLimitExceeded => 0.9,
        ExecVerdict::MemoryLimitExceeded => 0.8,
        ExecVerdict::RuntimeError => 0.7,
        ExecVerdict::CompilationError => 0.6,
    }
}

/// Graph-density reward: `s_complex` while `|V| <= N_max(l)`, otherwise
/// `tanh((N_max - |V|) / N_max)`.
pub fn graph_reward(report: &DensityReport) -> f64 {
    if report.v_count <= report.n_max {
        report.s_complex
    } else {
        let n_max = report.n_max as f64;
        ((n_max - report.v_count as f64) / n_max).tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_e: f64,
    pub w_g: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { w_e: 1.0, w_g: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_e: f64,
    pub r_g: f64,
    pub r_phi: f64,
    pub weights: RewardWeights,
}

/// What a turn produced, as far as the reward is concerned.
#[derive(Debug, Clone, Copy)]
pub enum TurnOutcome<'a> {
    InvalidYaml(YamlErrorClass),
    Executed {
        report: &'a DensityReport,
        verdict: ExecVerdict,
    },
}

/// `r_phi = w_e r_e + w_g r_g`. Invalid topologies get the YAML penalty as
/// `r_e` and no graph term.
pub fn turn_reward(outcome: TurnOutcome<'_>, weights: RewardWeights) -> RewardBreakdown {
    let (r_e, r_g) = match outcome {
        TurnOutcome::InvalidYaml(class) => (yaml_error_reward(class), 0.0),
        TurnOutcome::Executed { report, verdict } => (exec_reward(verdict), graph_reward(report)),
    };
    RewardBreakdown {
        r_e,
        r_g,
        r_phi: weights.w_e * r_e + weights.w_g * r_g,
        weights,
    }
}

/// `sum_k gamma^k r_k`, `k` from 0.
pub fn trajectory_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}
