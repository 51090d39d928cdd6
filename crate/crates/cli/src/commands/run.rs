use std::fs::OpenOptions;
use std::io::Write;

use layerflow_core::adapters::{
    ChatClient, LocalExecutor, Policy, RemotePolicy, RemoteRoles, RoleBackend, Sandbox, ScriptedPolicy,
    ScriptedRoles, ScriptedSandbox,
};
use layerflow_core::orchestrator::ErrorKind;
use layerflow_core::{run_episode, EpisodeResult, EpisodeStatus, ProblemSpec};
use rayon::prelude::*;

use super::{json_line, parse_json, read_input};
use crate::config::{BackendKind, RunConfig, SandboxKind};
use crate::{CliError, RunArgs};

/// Backends shared by every episode of a run. Scripted backends keep
/// per-episode state, so they are rebuilt for each episode instead.
struct Shared {
    script: Option<Vec<String>>,
    remote_policy: Option<RemotePolicy>,
    remote_roles: Option<RemoteRoles>,
    executor: Option<LocalExecutor>,
}

fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(spec) = &args.policy {
        if spec == "remote" {
            config.policy.kind = BackendKind::Remote;
        } else if let Some(path) = spec.strip_prefix("scripted:") {
            config.policy.kind = BackendKind::Scripted;
            config.policy.script = Some(path.to_owned());
        } else {
            return Err(CliError::Usage(format!(
                "--policy must be `remote` or `scripted:FILE`, got `{spec}`"
            )));
        }
    }
    if let Some(kind) = args.roles {
        config.roles.kind = kind;
    }
    if let Some(kind) = args.sandbox {
        config.sandbox.kind = kind;
    }
    if let Some(k) = args.max_turns {
        config.max_turns = k;
    }
    if let Some(g) = args.gamma {
        config.gamma = g;
    }
    config.validate().map_err(CliError::Usage)?;
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    Ok(config)
}

fn build_shared(config: &RunConfig) -> Result<Shared, CliError> {
    let adapter = |e: layerflow_core::adapters::AdapterError| match e {
        layerflow_core::adapters::AdapterError::Config(m) => CliError::Usage(m),
        other => CliError::Adapter(other.to_string()),
    };
    let script = match (config.policy.kind, &config.policy.script) {
        (BackendKind::Scripted, Some(path)) => {
            Some(parse_json::<Vec<String>>(&read_input(path.as_ref())?, "policy script")?)
        }
        (BackendKind::Scripted, None) => {
            return Err(CliError::Usage("a scripted policy needs a script file".into()))
        }
        (BackendKind::Remote, _) => None,
    };
    let remote_policy = match config.policy.kind {
        BackendKind::Remote => Some(RemotePolicy::new(
            ChatClient::new(config.policy.endpoint.clone()).map_err(adapter)?,
            config.policy.system_prompt.clone(),
        )),
        BackendKind::Scripted => None,
    };
    let remote_roles = match config.roles.kind {
        BackendKind::Remote => {
            let endpoint = config.roles.endpoint.clone().unwrap_or_else(|| config.policy.endpoint.clone());
            Some(RemoteRoles::new(ChatClient::new(endpoint).map_err(adapter)?))
        }
        BackendKind::Scripted => None,
    };
    let executor = match config.sandbox.kind {
        SandboxKind::Local => Some(LocalExecutor::new(config.sandbox.executor.clone())),
        SandboxKind::Scripted => None,
    };
    Ok(Shared {
        script,
        remote_policy,
        remote_roles,
        executor,
    })
}

fn episode(problem: &ProblemSpec, shared: &Shared, config: &RunConfig) -> EpisodeResult {
    let scripted_policy = shared.script.as_ref().map(|s| ScriptedPolicy::new(s.iter().cloned()));
    let policy: &dyn Policy = match (&scripted_policy, &shared.remote_policy) {
        (Some(p), _) => p,
        (None, Some(p)) => p,
        (None, None) => unreachable!("a policy backend is always built"),
    };
    let scripted_roles = shared
        .remote_roles
        .is_none()
        .then(|| ScriptedRoles::new(config.roles.language.clone(), config.roles.solutions.iter().cloned()));
    let roles: &dyn RoleBackend = match (&scripted_roles, &shared.remote_roles) {
        (Some(r), _) => r,
        (None, Some(r)) => r,
        (None, None) => unreachable!("a role backend is always built"),
    };
    let scripted_sandbox = shared
        .executor
        .is_none()
        .then(|| ScriptedSandbox::new(config.sandbox.verdicts.iter().copied()));
    let sandbox: &dyn Sandbox = match (&scripted_sandbox, &shared.executor) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) => unreachable!("a sandbox is always built"),
    };
    run_episode(problem, policy, roles, sandbox, &config.episode())
}

pub fn run(args: &RunArgs) -> Result<u8, CliError> {
    let config = resolve(args)?;
    let problems = ProblemSpec::load_all(&args.problem).map_err(|e| CliError::Usage(e.to_string()))?;
    let shared = build_shared(&config)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("starting workers: {e}")))?;
    let results: Vec<EpisodeResult> =
        pool.install(|| problems.par_iter().map(|p| episode(p, &shared, &config)).collect());

    let mut lines = Vec::new();
    for r in &results {
        lines.extend(json_line(r)?);
    }
    match &args.out {
        Some(path) => {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| CliError::Usage(format!("opening {}: {e}", path.display())))?;
            file.write_all(&lines)
                .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&lines)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Usage(format!("writing output: {e}")))?;
        }
    }

    let mut code = 0;
    for r in &results {
        let id = &r.trajectory.problem_id;
        match (&r.status, &r.error) {
            (EpisodeStatus::Aborted, Some(e)) => {
                eprintln!("{id}: aborted: {e}");
                code = code.max(if e.kind == ErrorKind::Config { 2 } else { 3 });
            }
            (status, _) => eprintln!(
                "{id}: {status:?} after {} turn(s), return {}",
                r.trajectory.turns.len(),
                r.trajectory.return_value
            ),
        }
    }
    Ok(code)
}
