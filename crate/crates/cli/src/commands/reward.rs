use std::collections::BTreeSet;

use layerflow_core::graph::{decode_topo, density_from_counts, density_scores, Counts, DensityReport};
use layerflow_core::reward::TurnOutcome;
use layerflow_core::{
    check_policy_output, check_yaml, trajectory_return, turn_reward, Difficulty, DslConfig, ExecVerdict,
    RewardBreakdown, RewardWeights, YamlErrorClass,
};
use serde::{Deserialize, Serialize};

use super::{emit, parse_json, read_input};
use crate::{CliError, RewardArgs};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardInput {
    #[serde(default)]
    weights: RewardWeights,
    #[serde(default = "one")]
    gamma: f64,
    turns: Vec<TurnInput>,
}

fn one() -> f64 {
    1.0
}

/// Either `yaml_error`, or `verdict` with one of `topology` / `counts`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnInput {
    yaml_error: Option<YamlErrorClass>,
    verdict: Option<ExecVerdict>,
    /// Bare YAML or text holding a fenced YAML block.
    topology: Option<String>,
    counts: Option<Counts>,
    difficulty: Option<Difficulty>,
}

#[derive(Serialize)]
struct TurnOutput {
    #[serde(flatten)]
    reward: RewardBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<DensityReport>,
}

#[derive(Serialize)]
struct RewardOutput {
    turns: Vec<TurnOutput>,
    rewards: Vec<f64>,
    #[serde(rename = "return")]
    return_value: f64,
}

pub fn reward(args: &RewardArgs) -> Result<u8, CliError> {
    let input: RewardInput = parse_json(&read_input(&args.input)?, "reward description")?;
    if !(input.gamma.is_finite() && (0.0..=1.0).contains(&input.gamma)) {
        return Err(CliError::Usage(format!("gamma must lie in [0, 1], got {}", input.gamma)));
    }
    let mut prior = BTreeSet::new();
    let mut turns = Vec::with_capacity(input.turns.len());
    for (i, turn) in input.turns.iter().enumerate() {
        let n = i + 1;
        let output = match (turn.yaml_error, turn.verdict) {
            (Some(class), None) => TurnOutput {
                reward: turn_reward(TurnOutcome::InvalidYaml(class), input.weights),
                density: None,
            },
            (None, Some(verdict)) => {
                let (report, ids) = turn_density(turn, &prior, n)?;
                if let Some(ids) = ids {
                    prior = ids;
                }
                TurnOutput {
                    reward: turn_reward(
                        TurnOutcome::Executed {
                            report: &report,
                            verdict,
                        },
                        input.weights,
                    ),
                    density: Some(report),
                }
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "turn {n}: give exactly one of `yaml_error` and `verdict`"
                )))
            }
        };
        turns.push(output);
    }
    let rewards: Vec<f64> = turns.iter().map(|t| t.reward.r_phi).collect();
    emit(&RewardOutput {
        return_value: trajectory_return(&rewards, input.gamma),
        rewards,
        turns,
    })?;
    Ok(0)
}

fn topology(
    text: &str,
    prior: &BTreeSet<String>,
    fallback: Option<Difficulty>,
) -> Result<layerflow_core::TopologyDoc, layerflow_core::ValidationError> {
    let dsl = DslConfig {
        difficulty_fallback: fallback,
        ..DslConfig::default()
    };
    if text.contains("```") {
        check_policy_output(text, prior, &dsl)
    } else {
        check_yaml(text, prior, &dsl)
    }
}

/// Density of an executed turn, plus its agent ids when a topology was given.
fn turn_density(
    turn: &TurnInput,
    prior: &BTreeSet<String>,
    n: usize,
) -> Result<(DensityReport, Option<BTreeSet<String>>), CliError> {
    match (&turn.topology, turn.counts) {
        (Some(text), None) => {
            let doc = topology(text, prior, turn.difficulty)
                .map_err(|e| CliError::Usage(format!("turn {n}: topology is invalid: {e}")))?;
            let difficulty = turn.difficulty.unwrap_or(doc.difficulty);
            Ok((density_scores(&decode_topo(&doc, None), difficulty), Some(doc.agent_ids())))
        }
        (None, Some(c)) => {
            let difficulty = turn
                .difficulty
                .ok_or_else(|| CliError::Usage(format!("turn {n}: `counts` needs `difficulty`")))?;
            if c.v_count == 0 {
                return Err(CliError::Usage(format!("turn {n}: v_count must be positive")));
            }
            Ok((density_from_counts(c.v_count, c.e_count, c.s, difficulty), None))
        }
        _ => Err(CliError::Usage(format!(
            "turn {n}: an executed turn needs exactly one of `topology` and `counts`"
        ))),
    }
}
