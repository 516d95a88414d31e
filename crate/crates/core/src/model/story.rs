//! Architecture stories: the narrated problem plus its scenario sketches.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSketch {
    pub title: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureStory {
    pub id: String,
    pub narrative: String,
    pub scenarios: Vec<ScenarioSketch>,
    #[serde(default)]
    pub domain_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "defect", content = "detail")]
pub enum StoryDefect {
    EmptyId,
    EmptyNarrative,
    EmptyScenarioTitle(usize),
    DuplicateScenarioTitle(String),
}

impl fmt::Display for StoryDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoryDefect::EmptyId => write!(f, "story id is empty"),
            StoryDefect::EmptyNarrative => write!(f, "narrative is empty"),
            StoryDefect::EmptyScenarioTitle(i) => write!(f, "scenario #{} has an empty title", i + 1),
            StoryDefect::DuplicateScenarioTitle(t) => write!(f, "scenario title {t:?} appears more than once"),
        }
    }
}

/// Returns every invariant violation of `story`; an empty list means the story is valid.
pub fn validate_story(story: &ArchitectureStory) -> Vec<StoryDefect> {
    let mut defects = Vec::new();
    if story.id.trim().is_empty() {
        defects.push(StoryDefect::EmptyId);
    }
    if story.narrative.trim().is_empty() {
        defects.push(StoryDefect::EmptyNarrative);
    }
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for (i, s) in story.scenarios.iter().enumerate() {
        if s.title.trim().is_empty() {
            defects.push(StoryDefect::EmptyScenarioTitle(i));
            continue;
        }
        if !seen.insert(s.title.as_str()) && reported.insert(s.title.as_str()) {
            defects.push(StoryDefect::DuplicateScenarioTitle(s.title.clone()));
        }
    }
    defects
}

impl ArchitectureStory {
    /// Renders the story in the markdown layout read back by [`ArchitectureStory::from_markdown`].
    pub fn to_markdown(&self) -> String {
        let mut out = format!("# {}\n\n", self.id);
        if !self.domain_tags.is_empty() {
            out.push_str(&format!("tags: {}\n\n", self.domain_tags.join(", ")));
        }
        out.push_str(self.narrative.trim());
        out.push_str("\n\n## Scenarios\n\n");
        for s in &self.scenarios {
            out.push_str(&format!("- {}: {}\n", s.title, s.description));
        }
        out
    }

    /// Parses the story markdown layout:
    ///
    /// ```text
    /// # <id>
    ///
    /// tags: a, b        (optional)
    ///
    /// narrative paragraphs ...
    ///
    /// ## Scenarios
    ///
    /// - <title>: <description>
    /// ```
    pub fn from_markdown(text: &str) -> Result<Self, StoryFormatError> {
        let mut lines = text.lines().enumerate().peekable();
        let id = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((_, l)) if l.starts_with("# ") => break l[2..].trim().to_string(),
                Some((n, _)) => return Err(StoryFormatError { line: n + 1, message: "expected `# <story id>` heading".into() }),
                None => return Err(StoryFormatError { line: 1, message: "empty story document".into() }),
            }
        };

        let mut domain_tags = Vec::new();
        let mut narrative_lines: Vec<&str> = Vec::new();
        let mut scenarios = Vec::new();
        let mut in_scenarios = false;
        for (n, line) in lines {
            let trimmed = line.trim();
            if !in_scenarios {
                if trimmed.eq_ignore_ascii_case("## scenarios") {
                    in_scenarios = true;
                } else if narrative_lines.iter().all(|l| l.trim().is_empty()) && trimmed.starts_with("tags:") {
                    domain_tags = trimmed["tags:".len()..]
                        .split(',')
                        .map(|t| t.trim().to_string())
                        .filter(|t| !t.is_empty())
                        .collect();
                } else {
                    narrative_lines.push(line);
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let Some(item) = trimmed.strip_prefix("- ") else {
                return Err(StoryFormatError { line: n + 1, message: "expected `- <title>: <description>`".into() });
            };
            let (title, description) = match item.split_once(':') {
                Some((t, d)) => (t.trim(), d.trim()),
                None => (item.trim(), ""),
            };
            scenarios.push(ScenarioSketch { title: title.to_string(), description: description.to_string() });
        }

        Ok(ArchitectureStory {
            id,
            narrative: narrative_lines.join("\n").trim().to_string(),
            scenarios,
            domain_tags,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("story document line {line}: {message}")]
pub struct StoryFormatError {
    pub line: usize,
    pub message: String,
}
