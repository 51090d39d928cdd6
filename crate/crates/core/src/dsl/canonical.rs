use super::TopologyDoc;

/// Deterministic byte form of a doc: steps in index order, agents in
/// document order, refs sorted. Two docs that differ only in ref order
/// canonicalize identically. Output is UTF-8 with LF line endings.
pub fn canonicalize(doc: &TopologyDoc) -> Vec<u8> {
    let mut doc = doc.clone();
    doc.steps.sort_by_key(|s| s.index);
    for agent in doc.steps.iter_mut().flat_map(|s| s.agents.iter_mut()) {
        agent.refs.sort();
    }
    doc.to_yaml().into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_topology, AgentSpec, Difficulty, DslConfig};

    fn base() -> TopologyDoc {
        TopologyDoc::from_layers(
            Difficulty::EASY,
            vec![
                vec![
                    AgentSpec::new("a", "planner", Vec::<String>::new()),
                    AgentSpec::new("b", "retrieval", Vec::<String>::new()),
                ],
                vec![AgentSpec::new("c", "coder", ["b", "a"])],
            ],
        )
    }

    #[test]
    fn refs_are_sorted() {
        let text = String::from_utf8(canonicalize(&base())).unwrap();
        let back = parse_topology(&text, &DslConfig::default()).unwrap();
        assert_eq!(back.steps[1].agents[0].refs, vec!["a", "b"]);
    }

    #[test]
    fn whitespace_insensitive() {
        let cfg = DslConfig::default();
        let a = parse_topology(
            "difficulty: 1\nsteps:\n- step: 1\n  agents:\n  - id: x\n    role: coder\n    ref: []\n",
            &cfg,
        )
        .unwrap();
        let b = parse_topology(
            "difficulty:   1\n\nsteps: [ {step: 1, agents: [ {id: x,   role: coder, ref: [ ]} ]} ]\n",
            &cfg,
        )
        .unwrap();
        assert_eq!(canonicalize(&a), canonicalize(&b));
    }

    #[test]
    fn role_is_part_of_identity() {
        let mut other = base();
        other.steps[1].agents[0].role = "coding".into();
        assert_ne!(canonicalize(&base()), canonicalize(&other));
    }

    #[test]
    fn idempotent() {
        let once = canonicalize(&base());
        let reparsed = parse_topology(std::str::from_utf8(&once).unwrap(), &DslConfig::default()).unwrap();
        assert_eq!(canonicalize(&reparsed), once);
    }
}
