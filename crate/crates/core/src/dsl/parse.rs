use serde_yaml::{Mapping, Value};

use super::{AgentSpec, Difficulty, DslConfig, Step, TopologyDoc, ValidationError, YamlErrorClass};

type SchemaResult<T> = Result<T, ValidationError>;

fn schema(detail: impl Into<String>) -> ValidationError {
    ValidationError::new(YamlErrorClass::SchemaInvalid, detail)
}

/// Parses YAML text into a [`TopologyDoc`].
///
/// Malformed markup is a parse error; anything that parses but does not fit
/// the topology shape (missing or unknown keys, wrong types, empty lists,
/// non-contiguous step numbers, difficulty outside 1..=3) is a schema error.
pub fn parse_topology(yaml: &str, config: &DslConfig) -> Result<TopologyDoc, ValidationError> {
    let value: Value = serde_yaml::from_str(yaml).map_err(|e| {
        ValidationError::new(YamlErrorClass::ParseError, format!("YAML parse failed: {e}"))
    })?;
    map_document(&value, config)
}

fn map_document(value: &Value, config: &DslConfig) -> SchemaResult<TopologyDoc> {
    let root = value
        .as_mapping()
        .ok_or_else(|| schema(format!("top level must be a mapping, found {}", kind(value))))?;
    check_keys(root, &["difficulty", "steps"], &["steps"], "top level")?;

    let difficulty = match root.get("difficulty") {
        Some(v) => parse_difficulty(v)?,
        None => match config.difficulty_fallback {
            Some(fallback) => {
                log::warn!("topology has no `difficulty`; using fallback {fallback}");
                fallback
            }
            None => return Err(schema("missing required key `difficulty`")),
        },
    };

    let steps_value = &root["steps"];
    let raw_steps = steps_value
        .as_sequence()
        .ok_or_else(|| schema(format!("`steps` must be a list, found {}", kind(steps_value))))?;
    if raw_steps.is_empty() {
        return Err(schema("`steps` must contain at least one step"));
    }

    let steps = raw_steps
        .iter()
        .enumerate()
        .map(|(pos, v)| map_step(v, pos + 1))
        .collect::<SchemaResult<Vec<_>>>()?;
    Ok(TopologyDoc { difficulty, steps })
}

fn parse_difficulty(v: &Value) -> SchemaResult<Difficulty> {
    v.as_u64()
        .and_then(|n| u8::try_from(n).ok())
        .and_then(Difficulty::new)
        .ok_or_else(|| schema(format!("`difficulty` must be 1, 2 or 3, found {}", describe(v))))
}

fn map_step(value: &Value, expected: usize) -> SchemaResult<Step> {
    let at = |e: ValidationError| e.at(Some(expected), None);
    let map = value
        .as_mapping()
        .ok_or_else(|| at(schema(format!("step must be a mapping, found {}", kind(value)))))?;
    check_keys(map, &["step", "agents"], &["step", "agents"], "step").map_err(at)?;

    let index = map["step"]
        .as_u64()
        .ok_or_else(|| at(schema(format!("`step` must be an integer, found {}", describe(&map["step"])))))?;
    if index != expected as u64 {
        return Err(at(schema(format!(
            "step numbers must be contiguous from 1: expected {expected}, found {index}"
        ))));
    }

    let agents = map["agents"].as_sequence().ok_or_else(|| {
        at(schema(format!("`agents` must be a list, found {}", kind(&map["agents"]))))
    })?;
    if agents.is_empty() {
        return Err(at(schema("a step must contain at least one agent")));
    }
    let agents = agents
        .iter()
        .map(|a| map_agent(a, expected))
        .collect::<SchemaResult<Vec<_>>>()?;
    Ok(Step {
        index: expected,
        agents,
    })
}

fn map_agent(value: &Value, step: usize) -> SchemaResult<AgentSpec> {
    let map = value.as_mapping().ok_or_else(|| {
        schema(format!("agent must be a mapping, found {}", kind(value))).at(Some(step), None)
    })?;
    let id = map.get("id").and_then(Value::as_str);
    let at = |e: ValidationError| e.at(Some(step), id);
    check_keys(map, &["id", "role", "ref"], &["id", "role", "ref"], "agent").map_err(at)?;

    let id = id.ok_or_else(|| at(schema(format!("`id` must be a string, found {}", describe(&map["id"])))))?;
    if id.trim().is_empty() {
        return Err(at(schema("`id` must not be empty")));
    }
    let role = map["role"]
        .as_str()
        .ok_or_else(|| at(schema(format!("`role` must be a string, found {}", describe(&map["role"])))))?;
    let refs = map["ref"]
        .as_sequence()
        .ok_or_else(|| at(schema(format!("`ref` must be a list, found {}", kind(&map["ref"])))))?
        .iter()
        .map(|r| {
            r.as_str()
                .map(str::to_owned)
                .ok_or_else(|| at(schema(format!("`ref` entries must be strings, found {}", describe(r)))))
        })
        .collect::<SchemaResult<Vec<_>>>()?;

    Ok(AgentSpec {
        id: id.to_owned(),
        role: role.to_owned(),
        refs,
    })
}

fn check_keys(map: &Mapping, allowed: &[&str], required: &[&str], what: &str) -> SchemaResult<()> {
    for key in map.keys() {
        match key.as_str() {
            Some(k) if allowed.contains(&k) => {}
            Some(k) => return Err(schema(format!("unknown key `{k}` in {what}"))),
            None => return Err(schema(format!("non-string key {} in {what}", describe(key)))),
        }
    }
    for key in required {
        if !map.contains_key(*key) {
            return Err(schema(format!("missing required key `{key}` in {what}")));
        }
    }
    Ok(())
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Sequence(_) => "a list",
        Value::Mapping(_) => "a mapping",
        Value::Tagged(_) => "a tagged value",
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => format!("{s:?}"),
        Value::Bool(b) => b.to_string(),
        other => kind(other).to_owned(),
    }
}
