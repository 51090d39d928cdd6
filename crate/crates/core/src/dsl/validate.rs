use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{TopologyDoc, ValidationError, YamlErrorClass};
use crate::roles::RolePool;

/// Referential rules, checked in declaration order. The first rule with any
/// violation is the one reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogicRule {
    /// Agents of step 1 reference nothing.
    FirstStepRefsEmpty,
    /// Every ref names an agent of an earlier step or of the previous turn.
    DanglingRef,
    /// Agent ids are unique within a turn.
    DuplicateId,
    /// No agent references itself.
    SelfRef,
    /// Every role is in the configured pool.
    UnknownRole,
    /// No ref is listed twice by the same agent.
    DuplicateRef,
}

impl LogicRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LogicRule::FirstStepRefsEmpty => "first-step-refs-empty",
            LogicRule::DanglingRef => "dangling-ref",
            LogicRule::DuplicateId => "duplicate-id",
            LogicRule::SelfRef => "self-ref",
            LogicRule::UnknownRole => "unknown-role",
            LogicRule::DuplicateRef => "duplicate-ref",
        }
    }
}

impl fmt::Display for LogicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn violation(rule: LogicRule, step: usize, agent: &str, detail: String) -> ValidationError {
    let mut err = ValidationError::new(YamlErrorClass::LogicInvalid, format!("{rule}: {detail}"))
        .at(Some(step), Some(agent));
    err.rule = Some(rule);
    err
}

/// Checks the referential rules of a schema-valid doc. `prior_ids` are the
/// agent ids of the previous turn (empty on turn 1).
pub fn validate_logic(
    doc: &TopologyDoc,
    prior_ids: &BTreeSet<String>,
    roles: &RolePool,
) -> Result<(), ValidationError> {
    if let Some(first) = doc.steps.first() {
        if let Some(agent) = first.agents.iter().find(|a| !a.refs.is_empty()) {
            return Err(violation(
                LogicRule::FirstStepRefsEmpty,
                first.index,
                &agent.id,
                format!("step-1 agent `{}` has refs {:?}", agent.id, agent.refs),
            ));
        }
    }

    let mut earlier: HashSet<&str> = HashSet::new();
    for step in &doc.steps {
        for agent in &step.agents {
            let dangling = agent
                .refs
                .iter()
                .find(|r| **r != agent.id && !earlier.contains(r.as_str()) && !prior_ids.contains(*r));
            if let Some(r) = dangling {
                return Err(violation(
                    LogicRule::DanglingRef,
                    step.index,
                    &agent.id,
                    format!("`{}` references `{r}`, which no earlier step or previous turn defines", agent.id),
                ));
            }
        }
        earlier.extend(step.agents.iter().map(|a| a.id.as_str()));
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for (step, agent) in doc.agents() {
        if !seen.insert(&agent.id) {
            return Err(violation(
                LogicRule::DuplicateId,
                step.index,
                &agent.id,
                format!("agent id `{}` is used more than once", agent.id),
            ));
        }
    }

    if let Some((step, agent)) = doc.agents().find(|(_, a)| a.refs.contains(&a.id)) {
        return Err(violation(
            LogicRule::SelfRef,
            step.index,
            &agent.id,
            format!("`{}` references itself", agent.id),
        ));
    }

    if let Some((step, agent)) = doc.agents().find(|(_, a)| !roles.contains(&a.role)) {
        return Err(violation(
            LogicRule::UnknownRole,
            step.index,
            &agent.id,
            format!("role `{}` is not in the role pool", agent.role),
        ));
    }

    for (step, agent) in doc.agents() {
        let mut refs = HashSet::new();
        if let Some(r) = agent.refs.iter().find(|r| !refs.insert(r.as_str())) {
            return Err(violation(
                LogicRule::DuplicateRef,
                step.index,
                &agent.id,
                format!("`{}` lists ref `{r}` twice", agent.id),
            ));
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{AgentSpec, Difficulty};

    fn doc(layers: Vec<Vec<AgentSpec>>) -> TopologyDoc {
        TopologyDoc::from_layers(Difficulty::EASY, layers)
    }

    fn rule_of(d: &TopologyDoc, prior: &[&str]) -> Option<LogicRule> {
        let prior = prior.iter().map(|s| s.to_string()).collect();
        validate_logic(d, &prior, &RolePool::default())
            .err()
            .map(|e| {
                assert_eq!(e.class, YamlErrorClass::LogicInvalid);
                e.rule.unwrap()
            })
    }

    fn two_step() -> TopologyDoc {
        doc(vec![
            vec![AgentSpec::new("planner_1", "planner", Vec::<String>::new())],
            vec![AgentSpec::new("coder_1", "coder", ["planner_1"])],
        ])
    }

    #[test]
    fn valid_two_step_passes() {
        assert_eq!(rule_of(&two_step(), &[]), None);
    }

    #[test]
    fn first_step_refs_must_be_empty() {
        let d = doc(vec![vec![AgentSpec::new("a", "coder", ["x"])]]);
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::FirstStepRefsEmpty));
        // even when the ref would resolve to the previous turn
        assert_eq!(rule_of(&d, &["x"]), Some(LogicRule::FirstStepRefsEmpty));
    }

    #[test]
    fn dangling_ref() {
        let mut d = two_step();
        d.steps[1].agents[0].refs = vec!["ghost_agent".into()];
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::DanglingRef));
        assert_eq!(rule_of(&d, &["ghost_agent"]), None);
    }

    #[test]
    fn same_step_ref_is_dangling() {
        let d = doc(vec![
            vec![AgentSpec::new("p", "planner", Vec::<String>::new())],
            vec![
                AgentSpec::new("a", "coder", ["p"]),
                AgentSpec::new("b", "coder", ["a"]),
            ],
        ]);
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::DanglingRef));
    }

    #[test]
    fn duplicate_ids() {
        let d = doc(vec![
            vec![AgentSpec::new("a", "planner", Vec::<String>::new())],
            vec![AgentSpec::new("a", "coder", Vec::<String>::new())],
        ]);
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::DuplicateId));
    }

    #[test]
    fn self_reference() {
        let d = doc(vec![
            vec![AgentSpec::new("p", "planner", Vec::<String>::new())],
            vec![AgentSpec::new("a", "coder", ["a"])],
        ]);
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::SelfRef));
        assert_eq!(rule_of(&d, &["a"]), Some(LogicRule::SelfRef));
    }

    #[test]
    fn unknown_role() {
        let mut d = two_step();
        d.steps[1].agents[0].role = "manager".into();
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::UnknownRole));
    }

    #[test]
    fn duplicate_ref() {
        let mut d = two_step();
        d.steps[1].agents[0].refs = vec!["planner_1".into(), "planner_1".into()];
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::DuplicateRef));
    }

    #[test]
    fn rule_precedence_follows_declaration_order() {
        // dangling ref and unknown role together: dangling is reported
        let d = doc(vec![
            vec![AgentSpec::new("p", "wizard", Vec::<String>::new())],
            vec![AgentSpec::new("a", "coder", ["ghost"])],
        ]);
        assert_eq!(rule_of(&d, &[]), Some(LogicRule::DanglingRef));
    }
}
