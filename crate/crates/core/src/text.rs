//! Fenced-block scanning shared by YAML extraction and code extraction.

/// One triple-backtick fenced block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FencedBlock<'a> {
    /// Info string after the opening fence, trimmed. Empty when unlabeled.
    pub label: &'a str,
    pub body: String,
}

/// Scans `text` for triple-backtick fences in document order.
///
/// An opening fence is any line whose leading-trimmed form starts with
/// three backticks; the block closes at the next line that trims to exactly
/// three backticks. An unterminated block runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    let mut blocks = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let trimmed = line.trim_start();
        let Some(info) = trimmed.strip_prefix("```") else {
            continue;
        };
        let label = info.trim();
        let mut body: Vec<&str> = Vec::new();
        for inner in lines.by_ref() {
            if inner.trim() == "```" {
                break;
            }
            body.push(inner);
        }
        blocks.push(FencedBlock {
            label,
            body: body.join("\n"),
        });
    }
    blocks
}

/// Truncates `text` to at most `cap` bytes on a char boundary.
/// Returns the kept prefix and whether anything was dropped.
pub fn truncate_bytes(text: &str, cap: usize) -> (&str, bool) {
    if text.len() <= cap {
        return (text, false);
    }
    let mut end = cap;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    (&text[..end], true)
}
