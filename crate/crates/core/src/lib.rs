//! Difficulty-aware topology generation for multi-agent code synthesis.
//!
//! A policy emits a YAML plan describing which role agents run in which
//! step and whose output each one reads. The plan is validated into a
//! strict layered DAG, scored for density, executed layer by layer, and
//! judged in a sandbox; rewards combine the verdict with the density score.

pub mod adapters;
pub mod corpus;
pub mod dsl;
pub mod graph;
pub mod orchestrator;
pub mod problem;
pub mod reward;
pub mod roles;
pub mod text;
pub mod verdict;

pub use dsl::{
    check_policy_output, check_yaml, AgentSpec, Difficulty, DslConfig, Step, TopologyDoc, ValidationError,
    ValidationReport, YamlErrorClass,
};
pub use graph::{cost_estimate, counts, decode_topo, density_scores, CostEstimate, DensityReport, LayeredDag};
pub use orchestrator::{run_episode, EpisodeConfig, EpisodeResult, EpisodeStatus, Trajectory};
pub use problem::{ProblemSpec, TestCase};
pub use reward::{
    grpo_advantages, grpo_surrogate, trajectory_return, turn_reward, RewardBreakdown, RewardWeights,
};
pub use roles::{RoleName, RolePool};
pub use verdict::{ExecOutcome, ExecVerdict};
