use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adapters::{AgentRequest, Message, RoleBackend, Sandbox, Submission, TokenUsage};
use crate::graph::{EdgeKind, LayeredDag};
use crate::problem::ProblemSpec;
use crate::roles::RoleName;
use crate::text::fenced_blocks;
use crate::verdict::ExecOutcome;

use super::{EpisodeConfig, EpisodeError, ErrorKind};

/// Output of one agent in one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMessage {
    pub agent_id: String,
    pub turn: usize,
    pub role: RoleName,
    pub content: String,
}

/// Per-agent append-only message log, keyed by agent id.
pub type Memories = BTreeMap<String, Vec<AgentMessage>>;

/// The most recent executed turn, as seen by cross-turn edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviousTurn {
    pub dag: LayeredDag,
    pub messages: BTreeMap<String, AgentMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCandidate {
    pub agent_id: String,
    pub language: String,
    pub source: String,
}

/// What [`exec_run`] needs besides the DAG.
pub struct ExecInputs<'a> {
    pub problem: &'a ProblemSpec,
    pub config: &'a EpisodeConfig,
    pub roles: &'a dyn RoleBackend,
    pub sandbox: &'a dyn Sandbox,
    pub previous: Option<&'a PreviousTurn>,
    pub memories: &'a Memories,
    /// Feedback of the most recent failed turn.
    pub feedback: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnExecution {
    /// `z_roles`, in layer order then document order.
    pub messages: Vec<AgentMessage>,
    pub code: Option<CodeCandidate>,
    /// `z_code`.
    pub outcome: ExecOutcome,
    pub sandbox_called: bool,
    pub usage: TokenUsage,
}

/// A turn aborted by an adapter failure. Messages of layers that finished
/// are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecFailure {
    pub error: EpisodeError,
    pub messages: Vec<AgentMessage>,
    pub usage: TokenUsage,
}

/// Runs every layer of `dag` in order, then judges the extracted code.
///
/// Agents of one layer run on separate threads; their messages are merged
/// in document order, so scheduling never changes the result.
pub fn exec_run(inputs: &ExecInputs<'_>, dag: &LayeredDag) -> Result<TurnExecution, ExecFailure> {
    let mut current: BTreeMap<String, AgentMessage> = BTreeMap::new();
    let mut messages = Vec::with_capacity(dag.node_count());
    let mut usage = TokenUsage::default();

    for layer in &dag.layers {
        let requests = layer
            .iter()
            .map(|id| agent_request(inputs, dag, id, &current))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|error| ExecFailure {
                error,
                messages: messages.clone(),
                usage,
            })?;

        let results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = requests
                .iter()
                .map(|req| scope.spawn(move || inputs.roles.respond(req)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("role backend panicked"))
                .collect()
        });

        let mut failure = None;
        for (req, result) in requests.into_iter().zip(results) {
            match result {
                Ok(resp) => {
                    usage += resp.usage;
                    let msg = AgentMessage {
                        agent_id: req.agent_id,
                        turn: dag.turn,
                        role: req.role,
                        content: resp.content,
                    };
                    current.insert(msg.agent_id.clone(), msg.clone());
                    messages.push(msg);
                }
                Err(e) if failure.is_none() => {
                    failure = Some(EpisodeError {
                        kind: ErrorKind::Runtime,
                        turn: dag.turn,
                        message: format!("agent `{}`: {e}", req.agent_id),
                    });
                }
                Err(_) => {}
            }
        }
        if let Some(error) = failure {
            return Err(ExecFailure {
                error,
                messages,
                usage,
            });
        }
    }

    let code = extract_code(&messages, &inputs.config.default_language);
    let (outcome, sandbox_called) = match &code {
        None => (
            ExecOutcome::compilation_error("no fenced code block found in agent messages"),
            false,
        ),
        Some(candidate) => {
            let submission = Submission {
                source: &candidate.source,
                language: &candidate.language,
                tests: &inputs.problem.tests,
                time_limit_ms: inputs.problem.time_limit_ms,
                memory_limit_mb: inputs.problem.memory_limit_mb,
            };
            let outcome = inputs.sandbox.execute(&submission).map_err(|e| ExecFailure {
                error: EpisodeError {
                    kind: ErrorKind::Sandbox,
                    turn: dag.turn,
                    message: e.to_string(),
                },
                messages: messages.clone(),
                usage,
            })?;
            (outcome, true)
        }
    };

    Ok(TurnExecution {
        messages,
        code,
        outcome,
        sandbox_called,
        usage,
    })
}

/// Builds the input of one agent.
///
/// Order: problem, latest feedback, previous-turn messages of cross-turn
/// sources, the agent's own memory, then in-neighbor messages of this turn
/// in layer order.
fn agent_request(
    inputs: &ExecInputs<'_>,
    dag: &LayeredDag,
    id: &str,
    current: &BTreeMap<String, AgentMessage>,
) -> Result<AgentRequest, EpisodeError> {
    let node = &dag.nodes[id];
    let role = inputs.config.dsl.roles.resolve(&node.role).ok_or_else(|| EpisodeError {
        kind: ErrorKind::Runtime,
        turn: dag.turn,
        message: format!("agent `{id}` has unknown role `{}`", node.role),
    })?;

    let mut messages = vec![Message {
        source: "problem".into(),
        content: inputs.problem.description.clone(),
    }];
    if let Some(feedback) = inputs.feedback {
        messages.push(Message {
            source: "feedback".into(),
            content: feedback.to_owned(),
        });
    }
    if let Some(prev) = inputs.previous {
        for edge in dag.in_edges(id).filter(|e| e.kind == EdgeKind::CrossTurn) {
            if let Some(m) = prev.messages.get(&edge.src) {
                messages.push(Message {
                    source: format!("{}@turn{}", m.agent_id, m.turn),
                    content: m.content.clone(),
                });
            }
        }
    }
    for m in inputs.memories.get(id).into_iter().flatten() {
        messages.push(Message {
            source: format!("memory@turn{}", m.turn),
            content: m.content.clone(),
        });
    }
    let mut neighbors: Vec<&AgentMessage> = dag
        .in_edges(id)
        .filter(|e| e.kind == EdgeKind::IntraTurn)
        .filter_map(|e| current.get(&e.src))
        .collect();
    neighbors.sort_by_key(|m| position(dag, &m.agent_id));
    for m in neighbors {
        messages.push(Message {
            source: format!("{} ({})", m.agent_id, m.role),
            content: m.content.clone(),
        });
    }

    Ok(AgentRequest {
        agent_id: id.to_owned(),
        role,
        turn: dag.turn,
        system_prompt: inputs.config.prompts.role_prompt(role).to_owned(),
        messages,
        params: inputs.config.agent_params.clone(),
    })
}

fn position(dag: &LayeredDag, id: &str) -> usize {
    dag.ordered_ids().position(|x| x == id).unwrap_or(usize::MAX)
}

/// Last fenced code block across `messages`, scanning messages from last
/// to first and blocks from last to first. YAML blocks are skipped.
pub fn extract_code(messages: &[AgentMessage], default_language: &str) -> Option<CodeCandidate> {
    messages.iter().rev().find_map(|m| {
        fenced_blocks(&m.content)
            .into_iter()
            .rev()
            .find(|b| !is_yaml_label(b.label))
            .map(|b| CodeCandidate {
                agent_id: m.agent_id.clone(),
                language: match b.label.split_whitespace().next() {
                    Some(tag) => tag.to_ascii_lowercase(),
                    None => default_language.to_owned(),
                },
                source: b.body,
            })
    })
}

fn is_yaml_label(label: &str) -> bool {
    label.eq_ignore_ascii_case("yaml") || label.eq_ignore_ascii_case("yml")
}
