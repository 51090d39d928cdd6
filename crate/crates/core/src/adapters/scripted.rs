use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{
    AdapterError, AgentRequest, AgentResponse, Policy, PolicyRequest, PolicyResponse, RoleBackend, Sandbox,
    SandboxError, Submission, TokenUsage,
};
use crate::roles::RoleName;
use crate::verdict::{ExecOutcome, ExecVerdict, TestResult, TestStatus};

pub const NO_RETRIEVAL_CONTEXT: &str = "no retrieval context available";

/// Replays a fixed list of completions, one per call.
#[derive(Debug)]
pub struct ScriptedPolicy {
    script: Vec<String>,
    state: Mutex<PolicyLog>,
}

#[derive(Debug, Default)]
struct PolicyLog {
    calls: usize,
    prompts: Vec<String>,
}

impl ScriptedPolicy {
    pub fn new<I, S>(script: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            script: script.into_iter().map(Into::into).collect(),
            state: Mutex::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.state.lock().unwrap().calls
    }

    /// History prompts received so far, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().unwrap().prompts.clone()
    }
}

impl Policy for ScriptedPolicy {
    fn generate(&self, request: &PolicyRequest<'_>) -> Result<PolicyResponse, AdapterError> {
        let mut state = self.state.lock().unwrap();
        let Some(content) = self.script.get(state.calls).cloned() else {
            return Err(AdapterError::ScriptExhausted(state.calls));
        };
        state.calls += 1;
        state.prompts.push(request.history_prompt.clone());
        let prompt = format!("{}\n{}", request.problem.description, request.history_prompt);
        Ok(PolicyResponse {
            usage: TokenUsage::estimate(&prompt, &content),
            content,
        })
    }
}

/// Computes an artificial latency for a request; used to shuffle
/// completion order inside a layer.
pub type DelayFn = Arc<dyn Fn(&AgentRequest) -> Duration + Send + Sync>;

/// Deterministic role agents.
///
/// Coding and debugging agents return the solution configured for the
/// current turn inside a fenced block (the last entry repeats for later
/// turns). Retrieval agents return [`NO_RETRIEVAL_CONTEXT`]. Other roles
/// return a note listing the sources they were shown. Exact messages can be
/// pinned per `(agent id, turn)`.
pub struct ScriptedRoles {
    language: String,
    solutions: Vec<String>,
    overrides: BTreeMap<(String, usize), String>,
    delay: Option<DelayFn>,
    seen: Mutex<Vec<AgentRequest>>,
}

impl ScriptedRoles {
    pub fn new<I, S>(language: impl Into<String>, solutions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            language: language.into(),
            solutions: solutions.into_iter().map(Into::into).collect(),
            overrides: BTreeMap::new(),
            delay: None,
            seen: Mutex::default(),
        }
    }

    pub fn with_message(mut self, agent_id: impl Into<String>, turn: usize, content: impl Into<String>) -> Self {
        self.overrides.insert((agent_id.into(), turn), content.into());
        self
    }

    pub fn with_delay(mut self, delay: DelayFn) -> Self {
        self.delay = Some(delay);
        self
    }

    /// Every request received, in arrival order.
    pub fn requests(&self) -> Vec<AgentRequest> {
        self.seen.lock().unwrap().clone()
    }

    fn solution_for(&self, turn: usize) -> Option<&str> {
        self.solutions
            .get(turn.saturating_sub(1))
            .or(self.solutions.last())
            .map(String::as_str)
    }

    fn compose(&self, request: &AgentRequest) -> String {
        if let Some(text) = self.overrides.get(&(request.agent_id.clone(), request.turn)) {
            return text.clone();
        }
        match request.role {
            RoleName::Retrieval => NO_RETRIEVAL_CONTEXT.to_owned(),
            RoleName::Coding | RoleName::Debugging => match self.solution_for(request.turn) {
                Some(code) => format!(
                    "{} ({}) solution for turn {}:\n```{}\n{}\n```",
                    request.agent_id, request.role, request.turn, self.language, code
                ),
                None => format!("{} ({}) has no solution to offer.", request.agent_id, request.role),
            },
            role => {
                let sources: Vec<&str> = request.messages.iter().map(|m| m.source.as_str()).collect();
                format!(
                    "{} ({role}) notes for turn {}; inputs: {}",
                    request.agent_id,
                    request.turn,
                    sources.join(", ")
                )
            }
        }
    }
}

impl RoleBackend for ScriptedRoles {
    fn respond(&self, request: &AgentRequest) -> Result<AgentResponse, AdapterError> {
        if let Some(delay) = &self.delay {
            std::thread::sleep(delay(request));
        }
        let content = self.compose(request);
        let prompt: String = request.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n");
        self.seen.lock().unwrap().push(request.clone());
        Ok(AgentResponse {
            usage: TokenUsage::estimate(&format!("{}\n{prompt}", request.system_prompt), &content),
            content,
        })
    }
}

/// Returns queued verdicts in order and records every submitted source.
#[derive(Debug)]
pub struct ScriptedSandbox {
    verdicts: Vec<ExecVerdict>,
    submitted: Mutex<Vec<String>>,
}

impl ScriptedSandbox {
    pub fn new(verdicts: impl IntoIterator<Item = ExecVerdict>) -> Self {
        Self {
            verdicts: verdicts.into_iter().collect(),
            submitted: Mutex::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.submitted.lock().unwrap().len()
    }

    pub fn submitted(&self) -> Vec<String> {
        self.submitted.lock().unwrap().clone()
    }
}

impl Sandbox for ScriptedSandbox {
    fn execute(&self, submission: &Submission<'_>) -> Result<ExecOutcome, SandboxError> {
        let mut submitted = self.submitted.lock().unwrap();
        let Some(&verdict) = self.verdicts.get(submitted.len()) else {
            return Err(SandboxError::Usage(format!(
                "scripted sandbox has no verdict for call {}",
                submitted.len() + 1
            )));
        };
        submitted.push(submission.source.to_owned());
        if verdict == ExecVerdict::CompilationError {
            return Ok(ExecOutcome::compilation_error("scripted COMPILATION_ERROR"));
        }
        let status = match verdict {
            ExecVerdict::WrongAnswer => TestStatus::WrongAnswer,
            ExecVerdict::TimeLimitExceeded => TestStatus::TimeLimitExceeded,
            ExecVerdict::MemoryLimitExceeded => TestStatus::MemoryLimitExceeded,
            ExecVerdict::RuntimeError => TestStatus::RuntimeError,
            _ => TestStatus::Pass,
        };
        let per_test = (0..submission.tests.len().max(1))
            .map(|index| TestResult {
                index,
                status: if index == 0 { status } else { TestStatus::Pass },
                actual_prefix: String::new(),
                time_ms: 0,
            })
            .collect();
        Ok(ExecOutcome::from_tests(per_test, format!("scripted {verdict}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::{GenerationParams, Message};
    use crate::problem::ProblemSpec;

    fn problem() -> ProblemSpec {
        ProblemSpec {
            id: "echo".into(),
            description: "Echo the input.".into(),
            tests: vec![],
            time_limit_ms: 1000,
            memory_limit_mb: 64,
            difficulty: None,
        }
    }

    fn request(role: RoleName, turn: usize) -> AgentRequest {
        AgentRequest {
            agent_id: format!("{role}_1"),
            role,
            turn,
            system_prompt: String::new(),
            messages: vec![Message {
                source: "problem".into(),
                content: "Echo the input.".into(),
            }],
            params: GenerationParams::default(),
        }
    }

    #[test]
    fn policy_replays_then_exhausts() {
        let policy = ScriptedPolicy::new(["first", "second"]);
        let p = problem();
        let req = PolicyRequest {
            problem: &p,
            turn: 1,
            history_prompt: String::new(),
            params: GenerationParams::default(),
        };
        assert_eq!(policy.generate(&req).unwrap().content, "first");
        assert_eq!(policy.generate(&req).unwrap().content, "second");
        assert_eq!(policy.generate(&req), Err(AdapterError::ScriptExhausted(2)));
    }

    #[test]
    fn coding_role_wraps_solution() {
        let roles = ScriptedRoles::new("python", ["import sys\nprint(sys.stdin.read(), end='')"]);
        let out = roles.respond(&request(RoleName::Coding, 1)).unwrap().content;
        assert!(out.contains("```python\nimport sys\nprint(sys.stdin.read(), end='')\n```"));
        // last solution repeats
        let later = roles.respond(&request(RoleName::Coding, 3)).unwrap().content;
        assert!(later.contains("```python"));
    }

    #[test]
    fn retrieval_is_a_stub() {
        let roles = ScriptedRoles::new("python", Vec::<String>::new());
        assert_eq!(
            roles.respond(&request(RoleName::Retrieval, 1)).unwrap().content,
            NO_RETRIEVAL_CONTEXT
        );
    }

    #[test]
    fn overrides_take_precedence() {
        let roles = ScriptedRoles::new("python", ["x"]).with_message("coding_1", 2, "pinned");
        assert_eq!(roles.respond(&request(RoleName::Coding, 2)).unwrap().content, "pinned");
        assert_ne!(roles.respond(&request(RoleName::Coding, 1)).unwrap().content, "pinned");
    }

    #[test]
    fn sandbox_replays_verdicts() {
        let sandbox = ScriptedSandbox::new([ExecVerdict::WrongAnswer, ExecVerdict::Passed]);
        let sub = Submission {
            source: "print(1)",
            language: "python",
            tests: &[],
            time_limit_ms: 1000,
            memory_limit_mb: 64,
        };
        assert_eq!(sandbox.execute(&sub).unwrap().verdict, ExecVerdict::WrongAnswer);
        assert_eq!(sandbox.execute(&sub).unwrap().verdict, ExecVerdict::Passed);
        assert!(sandbox.execute(&sub).is_err());
        assert_eq!(sandbox.calls(), 2);
    }
}
