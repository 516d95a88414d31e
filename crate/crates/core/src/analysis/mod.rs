//! Architectural analysis: requirements drawn from the story by the bot, then tightened by the
//! architect through add/remove/update refinements.

mod lint;
mod refine;

pub use lint::*;
pub use refine::*;

use crate::contract::{columns, fenced_block, record_lines};
use crate::gateway::{Activity, Bindings, Conversation, GatewayError};
use crate::model::{
    new_asr_id, validate_story, ArchitectureStory, ArtifactKind, ArtifactRef, Asr, AsrKind, AsrStatus, Origin,
    ProvenanceEvent, QuantifiedCriterion, StoryDefect,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("story is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidStory(Vec<StoryDefect>),
    #[error("bot response violates the requirement format: {0}")]
    UnparseableResponse(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no requirement with id {0}")]
    UnknownAsr(String),
    #[error("invalid refinement payload: {0}")]
    InvalidPayload(String),
    #[error("{asr_id}: {reason}")]
    InvariantViolation { asr_id: String, reason: String },
}

/// One record of the ` ```asr ` block before ids are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposedAsr {
    pub kind: AsrKind,
    pub statement: String,
    pub criterion: Option<QuantifiedCriterion>,
}

/// Parses `KIND | statement | optional criterion` records from the ` ```asr ` block.
pub fn parse_asr_response(text: &str) -> Result<Vec<ProposedAsr>, String> {
    let block = fenced_block(text, "asr").ok_or("no ```asr fenced block found")?;
    let mut out = Vec::new();
    for (n, line) in record_lines(block) {
        let cols = columns(line);
        if !(2..=3).contains(&cols.len()) {
            return Err(format!("record {n}: expected `KIND | statement | criterion`, got {line:?}"));
        }
        let kind: AsrKind = cols[0].parse().map_err(|e| format!("record {n}: {e}"))?;
        if cols[1].is_empty() {
            return Err(format!("record {n}: empty statement"));
        }
        let criterion = match cols.get(2) {
            Some(c) if !c.is_empty() => Some(c.parse().map_err(|e| format!("record {n}: {e}"))?),
            _ => None,
        };
        out.push(ProposedAsr { kind, statement: cols[1].to_string(), criterion });
    }
    if out.is_empty() {
        return Err("the ```asr block holds no requirements".into());
    }
    Ok(out)
}

pub fn story_bindings(story: &ArchitectureStory) -> Bindings {
    let mut b = Bindings::new();
    b.insert("story".into(), story.to_markdown());
    b
}

/// Sends the story to the bot as the opening StoryFeed turn.
pub fn feed_story(story: &ArchitectureStory, conv: &mut Conversation<'_>) -> Result<u64, AnalysisError> {
    let defects = validate_story(story);
    if !defects.is_empty() {
        return Err(AnalysisError::InvalidStory(defects));
    }
    let turn = conv.ask_template_as("story_feed", &story_bindings(story), Activity::StoryFeed)?;
    Ok(turn.id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub asrs: Vec<Asr>,
    pub events: Vec<ProvenanceEvent>,
    /// Bot turn the requirements were parsed from.
    pub turn_id: u64,
}

/// Asks the bot for the story's ASRs. Ids continue after those in `existing`.
pub fn extract_asrs(
    story: &ArchitectureStory,
    existing: &[Asr],
    conv: &mut Conversation<'_>,
) -> Result<Extraction, AnalysisError> {
    let defects = validate_story(story);
    if !defects.is_empty() {
        return Err(AnalysisError::InvalidStory(defects));
    }
    let (proposed, turn_id) = ask_with_reask(conv, "analysis", &story_bindings(story), Activity::Analysis, |reply| {
        parse_asr_response(reply)
    })
    .map_err(|e| match e {
        ReaskError::Gateway(g) => AnalysisError::Gateway(g),
        ReaskError::Unparseable(m) => AnalysisError::UnparseableResponse(m),
    })?;

    let mut ids: Vec<String> = existing.iter().map(|a| a.id.clone()).collect();
    let mut asrs = Vec::with_capacity(proposed.len());
    let mut events = Vec::with_capacity(proposed.len());
    for p in proposed {
        let id = new_asr_id(ids.iter().map(String::as_str));
        ids.push(id.clone());
        events.push(ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Asr, &id), Origin::Bot).with_turn(Some(turn_id)));
        asrs.push(Asr {
            id,
            kind: p.kind,
            statement: p.statement,
            criterion: p.criterion,
            tags: Vec::new(),
            status: AsrStatus::Proposed,
        });
    }
    Ok(Extraction { asrs, events, turn_id })
}

#[derive(Debug)]
pub(crate) enum ReaskError {
    Gateway(GatewayError),
    Unparseable(String),
}

/// Sends `template`, parses the reply with `parse`, and on failure re-asks exactly once with
/// the parse error quoted.
pub(crate) fn ask_with_reask<T>(
    conv: &mut Conversation<'_>,
    template: &str,
    bindings: &Bindings,
    activity: Activity,
    mut parse: impl FnMut(&str) -> Result<T, String>,
) -> Result<(T, u64), ReaskError> {
    let first = conv.ask_template_as(template, bindings, activity).map_err(ReaskError::Gateway)?;
    let error = match parse(&first.content) {
        Ok(v) => return Ok((v, first.id)),
        Err(e) => e,
    };
    let mut reask = Bindings::new();
    reask.insert("error".into(), error);
    let second = conv.ask_template_as("reask", &reask, activity).map_err(ReaskError::Gateway)?;
    parse(&second.content).map(|v| (v, second.id)).map_err(ReaskError::Unparseable)
}

#[cfg(test)]
mod tests;
