//! Prompt templates, one per architecting activity, shipped as versioned data files.
//!
//! A template file starts with a small header terminated by a `---` line:
//!
//! ```text
//! activity: Analysis
//! required: story
//! ---
//! Template text with {{story}} placeholders.
//! ```
//!
//! Placeholders are `{{name}}`. Required placeholders must be bound; optional ones render empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Activity, GatewayError};

pub type Bindings = BTreeMap<String, String>;

pub const PROMPT_REGISTRY_VERSION: &str = "v1";

const BUILTIN: &[(&str, &str)] = &[
    ("story_feed", include_str!("../../prompts/story_feed.txt")),
    ("analysis", include_str!("../../prompts/analysis.txt")),
    ("synthesis", include_str!("../../prompts/synthesis.txt")),
    ("evaluation", include_str!("../../prompts/evaluation.txt")),
    ("reask", include_str!("../../prompts/reask.txt")),
    ("summarize", include_str!("../../prompts/summarize.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub activity: Activity,
    pub template_text: String,
    pub required_placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn parse(name: &str, source: &str) -> Result<Self, GatewayError> {
        let invalid = |m: &str| GatewayError::InvalidTemplate(format!("{name}: {m}"));
        let (header, body) = source.split_once("\n---\n").ok_or_else(|| invalid("missing `---` header separator"))?;
        let mut activity = None;
        let mut required = BTreeSet::new();
        for line in header.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) = line.split_once(':').ok_or_else(|| invalid("header lines are `key: value`"))?;
            match key.trim() {
                "activity" => {
                    activity = Some(match value.trim() {
                        "StoryFeed" => Activity::StoryFeed,
                        "Analysis" => Activity::Analysis,
                        "Synthesis" => Activity::Synthesis,
                        "Evaluation" => Activity::Evaluation,
                        "Freeform" => Activity::Freeform,
                        other => return Err(invalid(&format!("unknown activity {other:?}"))),
                    })
                }
                "required" => {
                    required.extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()))
                }
                other => return Err(invalid(&format!("unknown header key {other:?}"))),
            }
        }
        let template = PromptTemplate {
            name: name.to_string(),
            activity: activity.ok_or_else(|| invalid("missing activity"))?,
            template_text: body.to_string(),
            required_placeholders: required,
        };
        let present = template.placeholders();
        if let Some(missing) = template.required_placeholders.iter().find(|r| !present.contains(*r)) {
            return Err(invalid(&format!("required placeholder {missing:?} does not occur in the text")));
        }
        Ok(template)
    }

    /// Every placeholder name that occurs in the text.
    pub fn placeholders(&self) -> BTreeSet<String> {
        scan(&self.template_text).into_iter().map(|(_, _, name)| name.to_string()).collect()
    }

    pub fn render(&self, bindings: &Bindings) -> Result<String, GatewayError> {
        if let Some(missing) = self.required_placeholders.iter().find(|p| !bindings.contains_key(*p)) {
            return Err(GatewayError::MissingPlaceholder(missing.clone()));
        }
        let text = &self.template_text;
        let mut out = String::with_capacity(text.len());
        let mut cursor = 0;
        for (start, end, name) in scan(text) {
            out.push_str(&text[cursor..start]);
            if let Some(value) = bindings.get(name) {
                out.push_str(value);
            }
            cursor = end;
        }
        out.push_str(&text[cursor..]);
        Ok(out)
    }
}

/// Byte ranges and names of `{{name}}` markers.
fn scan(text: &str) -> Vec<(usize, usize, &str)> {
    let mut found = Vec::new();
    let mut from = 0;
    while let Some(open) = text[from..].find("{{").map(|i| i + from) {
        let Some(close) = text[open + 2..].find("}}").map(|i| i + open + 2) else { break };
        let name = &text[open + 2..close];
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            found.push((open, close + 2, name));
            from = close + 2;
        } else {
            from = open + 2;
        }
    }
    found
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptRegistry {
    templates: BTreeMap<String, PromptTemplate>,
    hash: String,
}

impl PromptRegistry {
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN.iter().map(|(n, s)| (n.to_string(), s.to_string())))
            .expect("builtin prompt templates are valid")
    }

    /// Loads every `*.txt` file of `dir`; the file stem is the template name.
    pub fn load_dir(dir: &Path) -> Result<Self, GatewayError> {
        let entries = fs::read_dir(dir)
            .map_err(|e| GatewayError::InvalidTemplate(format!("cannot read {}: {e}", dir.display())))?;
        let mut sources = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| GatewayError::InvalidTemplate(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = fs::read_to_string(&path)
                .map_err(|e| GatewayError::InvalidTemplate(format!("cannot read {}: {e}", path.display())))?;
            sources.push((name, text));
        }
        Self::from_sources(sources)
    }

    pub fn from_sources(sources: impl IntoIterator<Item = (String, String)>) -> Result<Self, GatewayError> {
        let mut templates = BTreeMap::new();
        let mut hasher = Sha256::new();
        hasher.update(PROMPT_REGISTRY_VERSION.as_bytes());
        let mut raw: Vec<(String, String)> = sources.into_iter().collect();
        raw.sort();
        for (name, source) in raw {
            // normalize CRLF checkouts so the hash is platform independent
            let source = source.replace("\r\n", "\n");
            hasher.update([0u8]);
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
            hasher.update(source.as_bytes());
            let t = PromptTemplate::parse(&name, &source)?;
            templates.insert(name, t);
        }
        Ok(PromptRegistry { templates, hash: hex::encode(hasher.finalize()) })
    }

    /// SHA-256 over the version tag and every (name, source) pair in name order.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, GatewayError> {
        self.templates.get(name).ok_or_else(|| GatewayError::UnknownTemplate(name.to_string()))
    }

    pub fn render(&self, name: &str, bindings: &Bindings) -> Result<String, GatewayError> {
        self.get(name)?.render(bindings)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

/// Free-function form of [`PromptTemplate::render`].
pub fn render_prompt(template: &PromptTemplate, bindings: &Bindings) -> Result<String, GatewayError> {
    template.render(bindings)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn analysis_template_embeds_story_verbatim() {
        let reg = PromptRegistry::builtin();
        let story = "... as a step towards maintaining a 'Green Campus' - minimising the carbon footprint ...";
        let out = reg.render("analysis", &bind(&[("story", story)])).unwrap();
        assert!(out.contains(story));
        assert!(!out.contains("{{"));
    }

    #[test]
    fn missing_required_placeholder() {
        let reg = PromptRegistry::builtin();
        assert_eq!(
            reg.render("analysis", &Bindings::new()),
            Err(GatewayError::MissingPlaceholder("story".into()))
        );
    }

    #[test]
    fn optional_placeholder_renders_empty() {
        let t = PromptTemplate::parse("t", "activity: Freeform\n---\nfocus=[{{focus}}]").unwrap();
        assert_eq!(t.render(&Bindings::new()).unwrap(), "focus=[]");
    }

    #[test]
    fn builtin_templates_cover_every_activity() {
        let reg = PromptRegistry::builtin();
        for name in ["story_feed", "analysis", "synthesis", "evaluation", "reask", "summarize"] {
            reg.get(name).unwrap();
        }
        assert_eq!(reg.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_template_changes() {
        let a = PromptRegistry::from_sources([("x".to_string(), "activity: Freeform\n---\nhello".to_string())]).unwrap();
        let b = PromptRegistry::from_sources([("x".to_string(), "activity: Freeform\n---\nhello!".to_string())]).unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn required_placeholder_must_occur() {
        assert!(PromptTemplate::parse("t", "activity: Freeform\nrequired: story\n---\nno marker").is_err());
    }

    proptest! {
        #[test]
        fn repeated_placeholders_match_naive_replace(
            pieces in proptest::collection::vec("[a-z .,]{0,8}", 1..6),
            value in "[A-Za-z0-9 ]{0,12}",
        ) {
            let text = pieces.join("{{story}}");
            let t = PromptTemplate::parse("t", &format!("activity: Analysis\nrequired: story\n---\n{text}"));
            prop_assume!(t.is_ok());
            let t = t.unwrap();
            let rendered = t.render(&bind(&[("story", &value)])).unwrap();
            prop_assert_eq!(rendered, text.replace("{{story}}", &value));
        }
    }
}
