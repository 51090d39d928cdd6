use super::{ValidationError, YamlErrorClass};

/// Returns the body of the first fenced block labeled `yaml` (or `yml`),
/// falling back to the first fenced block of any label.
pub fn extract_yaml_block(text: &str) -> Result<&str, ValidationError> {
    let blocks = fenced_block_spans(text);
    blocks
        .iter()
        .find(|(label, _)| label.eq_ignore_ascii_case("yaml") || label.eq_ignore_ascii_case("yml"))
        .or_else(|| blocks.first())
        .map(|(_, body)| *body)
        .ok_or_else(|| ValidationError::new(YamlErrorClass::NoYamlFound, "No YAML block found."))
}

/// Same scan as [`crate::text::fenced_blocks`] but borrowing bodies from `text`.
fn fenced_block_spans(text: &str) -> Vec<(&str, &str)> {
    let mut spans = Vec::new();
    let mut offset = 0;
    let mut open: Option<(&str, usize)> = None;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);
        match open {
            None => {
                if let Some(info) = content.trim_start().strip_prefix("```") {
                    open = Some((info.trim(), offset));
                }
            }
            Some((label, body_start)) => {
                if content.trim() == "```" {
                    spans.push((label, trim_newline(&text[body_start..start])));
                    open = None;
                }
            }
        }
    }
    if let Some((label, body_start)) = open {
        spans.push((label, trim_newline(&text[body_start.min(text.len())..])));
    }
    spans
}

fn trim_newline(s: &str) -> &str {
    let s = s.strip_suffix('\n').unwrap_or(s);
    s.strip_suffix('\r').unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_labeled_block() {
        assert_eq!(
            extract_yaml_block("plan:\n```yaml\nsteps: []\n```").unwrap(),
            "steps: []"
        );
    }

    #[test]
    fn prose_has_no_yaml() {
        let err = extract_yaml_block("I will think step by step.").unwrap_err();
        assert_eq!(err.class, YamlErrorClass::NoYamlFound);
        assert_eq!(err.detail, "No YAML block found.");
    }

    #[test]
    fn first_yaml_block_wins() {
        let text = "```yaml\nfirst: 1\n```\n```yaml\nsecond: 2\n```";
        assert_eq!(extract_yaml_block(text).unwrap(), "first: 1");
    }

    #[test]
    fn yaml_label_preferred_over_earlier_unlabeled() {
        let text = "```\nnot this\n```\n```yaml\nthis: 1\n```";
        assert_eq!(extract_yaml_block(text).unwrap(), "this: 1");
    }

    #[test]
    fn falls_back_to_any_label() {
        let text = "```json\n{\"steps\": []}\n```";
        assert_eq!(extract_yaml_block(text).unwrap(), "{\"steps\": []}");
    }

    #[test]
    fn crlf_and_empty_bodies() {
        assert_eq!(extract_yaml_block("```yaml\r\na: 1\r\n```\r\n").unwrap(), "a: 1");
        assert_eq!(extract_yaml_block("```yaml\n```").unwrap(), "");
    }
}
