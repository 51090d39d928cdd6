use std::collections::BTreeSet;
use std::path::Path;

use layerflow_core::graph::{cost_estimate, decode_topo, density_scores, CostEstimate, DensityReport};
use layerflow_core::{check_policy_output, check_yaml, DslConfig, TopologyDoc, ValidationError, ValidationReport};
use serde::Serialize;

use super::{difficulty_arg, emit, read_input};
use crate::{CliError, InputKind, ScoreArgs, TopologyInput, ValidateArgs};

fn kind_for(path: &Path, explicit: Option<InputKind>) -> InputKind {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("yaml" | "yml") => InputKind::Yaml,
        _ => InputKind::Text,
    })
}

fn check(
    text: &str,
    kind: InputKind,
    prior: &BTreeSet<String>,
    dsl: &DslConfig,
) -> Result<TopologyDoc, ValidationError> {
    match kind {
        InputKind::Yaml => check_yaml(text, prior, dsl),
        InputKind::Text => check_policy_output(text, prior, dsl),
    }
}

/// Reads and checks the input. The outer error is a usage problem; the
/// inner one is the topology's own classification.
fn load(input: &TopologyInput) -> Result<Result<TopologyDoc, ValidationError>, CliError> {
    let dsl = DslConfig {
        difficulty_fallback: difficulty_arg(input.fallback_difficulty)?,
        ..DslConfig::default()
    };
    let prior = match &input.prior {
        None => BTreeSet::new(),
        Some(path) => {
            let text = read_input(path)?;
            let doc = check(&text, kind_for(path, input.kind), &BTreeSet::new(), &dsl)
                .map_err(|e| CliError::Usage(format!("prior topology {} is invalid: {e}", path.display())))?;
            doc.agent_ids()
        }
    };
    let text = read_input(&input.file)?;
    Ok(check(&text, kind_for(&input.file, input.kind), &prior, &dsl))
}

pub fn validate(args: &ValidateArgs) -> Result<u8, CliError> {
    let checked = load(&args.input)?;
    emit(&ValidationReport::from(&checked))?;
    Ok(if checked.is_ok() { 0 } else { 1 })
}

#[derive(Serialize)]
struct ScoreOutput {
    #[serde(flatten)]
    density: DensityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostEstimate>,
}

pub fn score(args: &ScoreArgs) -> Result<u8, CliError> {
    let doc = match load(&args.input)? {
        Ok(doc) => doc,
        Err(e) => {
            emit(&ValidationReport::from(&e))?;
            return Ok(1);
        }
    };
    let difficulty = difficulty_arg(args.difficulty)?.unwrap_or(doc.difficulty);
    let dag = decode_topo(&doc, None);
    emit(&ScoreOutput {
        density: density_scores(&dag, difficulty),
        cost: args.message_tokens.map(|m| cost_estimate(&dag, args.prev_nodes, m)),
    })?;
    Ok(0)
}
