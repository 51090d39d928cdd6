use layerflow_core::reward::{self, grpo_advantages, KlEstimator, SurrogateConfig, TrajectoryLogProbs};
use serde::{Deserialize, Serialize};

use super::{emit, parse_json, read_input};
use crate::config::RunConfig;
use crate::{AdvArgs, CliError, SurrogateArgs};

pub fn grpo_adv(args: &AdvArgs) -> Result<u8, CliError> {
    let returns: Vec<f64> = parse_json(&args.returns, "returns array")?;
    let advantages = grpo_advantages(&returns, args.eps_std).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&advantages)?;
    Ok(0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SurrogateInput {
    batch: Vec<TrajectoryLogProbs>,
    eps_clip: Option<f64>,
    beta: Option<f64>,
    kl: Option<KlEstimator>,
}

#[derive(Serialize)]
struct SurrogateOutput {
    objective: f64,
    config: SurrogateConfig,
}

pub fn grpo_surrogate(args: &SurrogateArgs) -> Result<u8, CliError> {
    let input: SurrogateInput = parse_json(&read_input(&args.input)?, "surrogate input")?;
    let defaults = match &args.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?.surrogate(),
        None => SurrogateConfig::default(),
    };
    let config = SurrogateConfig {
        eps_clip: input.eps_clip.unwrap_or(defaults.eps_clip),
        beta: input.beta.unwrap_or(defaults.beta),
        kl: input.kl.unwrap_or(defaults.kl),
    };
    let objective = reward::grpo_surrogate(&input.batch, &config).map_err(|e| CliError::Usage(e.to_string()))?;
    emit(&SurrogateOutput { objective, config })?;
    Ok(0)
}
