use serde::{Deserialize, Serialize};

use crate::dsl::{ValidationError, ValidationReport};
use crate::graph::LayeredDag;
use crate::problem::ProblemSpec;
use crate::text::truncate_bytes;
use crate::verdict::{ExecOutcome, ExecVerdict};

use super::PromptTemplates;

/// Feedback produced by a failed turn, fed to the next policy call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub errors: Vec<ExecVerdict>,
    /// Execution logs after truncation.
    pub logs: String,
    pub logs_truncated: bool,
    /// The turn's topology serialized back to YAML.
    pub topology_trace: String,
    /// Rendered prompt text.
    pub prompt: String,
}

/// One entry of the episode history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryEntry {
    /// The policy output failed validation; no agents ran.
    InvalidYaml {
        turn: usize,
        error: ValidationReport,
        feedback: String,
    },
    /// The topology was executed and judged.
    Executed {
        turn: usize,
        topology: String,
        verdict: ExecVerdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation: Option<Observation>,
    },
}

impl HistoryEntry {
    pub fn turn(&self) -> usize {
        match self {
            HistoryEntry::InvalidYaml { turn, .. } | HistoryEntry::Executed { turn, .. } => *turn,
        }
    }

    /// Prompt text this entry contributes, if any.
    pub fn feedback(&self) -> Option<&str> {
        match self {
            HistoryEntry::InvalidYaml { feedback, .. } => Some(feedback),
            HistoryEntry::Executed { observation, .. } => observation.as_ref().map(|o| o.prompt.as_str()),
        }
    }
}

/// Renders the failed-turn observation for `outcome`.
pub fn build_observation(
    outcome: &ExecOutcome,
    dag: &LayeredDag,
    problem: &ProblemSpec,
    templates: &PromptTemplates,
    log_cap: usize,
) -> Observation {
    let (logs, logs_truncated) = cap_text(&outcome.logs, log_cap);
    let topology_trace = dag.to_doc().to_yaml();
    let turn = dag.turn.to_string();
    let time_limit = problem.time_limit_ms.to_string();
    let memory_limit = problem.memory_limit_mb.to_string();
    let prompt = render(
        &templates.observation,
        &[
            ("turn", &turn),
            ("verdict", outcome.verdict.as_str()),
            ("time_limit_ms", &time_limit),
            ("memory_limit_mb", &memory_limit),
            ("logs", &logs),
            ("topology", &topology_trace),
        ],
    );
    Observation {
        errors: vec![outcome.verdict],
        logs,
        logs_truncated,
        topology_trace,
        prompt,
    }
}

/// Renders the feedback for a turn whose output failed validation.
pub fn invalid_yaml_feedback(
    turn: usize,
    error: &ValidationError,
    policy_text: &str,
    templates: &PromptTemplates,
    log_cap: usize,
) -> String {
    let (output, _) = cap_text(policy_text, log_cap);
    render(
        &templates.invalid_yaml,
        &[
            ("turn", &turn.to_string()),
            ("error_class", error.class.as_str()),
            ("detail", &error.detail),
            ("output", &output),
        ],
    )
}

/// Concatenates the feedback of all history entries, oldest first.
pub fn render_history(history: &[HistoryEntry]) -> String {
    history
        .iter()
        .filter_map(HistoryEntry::feedback)
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Truncates to `cap` bytes and appends a marker when anything was dropped.
pub fn cap_text(text: &str, cap: usize) -> (String, bool) {
    let (kept, cut) = truncate_bytes(text, cap);
    if cut {
        (
            format!("{kept}\n[truncated: {} of {} bytes shown]", kept.len(), text.len()),
            true,
        )
    } else {
        (kept.to_owned(), false)
    }
}

/// Single-pass `{name}` substitution. Unknown placeholders and braces in
/// substituted values are left as they are.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (*v, close))
        });
        match hit {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
