//! Helpers for the structured-output contract: the bot answers inside fenced code blocks
//! tagged with the record type (` ```asr `, ` ```plantuml `, ` ```trace `, ` ```scenarios `).

/// Body of the first fenced block whose info string is `tag`, without the fences.
pub fn fenced_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let mut offset = 0;
    let mut open: Option<usize> = None;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        match open {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    if info.trim().eq_ignore_ascii_case(tag) {
                        open = Some(offset + line.len());
                    }
                }
            }
            Some(start) => {
                if trimmed == "```" {
                    return Some(&text[start..offset]);
                }
            }
        }
        offset += line.len();
    }
    None
}

/// Non-blank lines of a block with their 1-based position inside the block.
pub fn record_lines(block: &str) -> impl Iterator<Item = (usize, &str)> {
    block.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Splits a `a | b | c` record into trimmed columns.
pub fn columns(line: &str) -> Vec<&str> {
    line.split('|').map(str::trim).collect()
}

/// Splits a comma separated list, dropping empty items.
pub fn list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}
