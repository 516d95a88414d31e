//! Conversational backend access.
//!
//! A [`SessionTranscript`] is the single source of conversational context: every request to a
//! [`ChatBackend`] is built from it, so the bot always sees the full prior dialog. When the
//! backend rejects the context as too large, all but the last [`KEPT_TURNS_ON_SUMMARY`] turns are
//! folded into a System summary turn produced by the same backend.

mod fixture;
mod live;
mod scripted;
mod template;
mod variance;

pub use fixture::*;
pub use live::*;
pub use scripted::*;
pub use template::*;
pub use variance::*;

use std::fmt;

use serde::{Deserialize, Serialize};

/// Turns kept verbatim when the context is summarized.
pub const KEPT_TURNS_ON_SUMMARY: usize = 6;

pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Architect,
    Bot,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    StoryFeed,
    Analysis,
    Synthesis,
    Evaluation,
    Freeform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub id: u64,
    pub role: Role,
    pub content: String,
    pub activity: Activity,
    /// Logical clock of the transcript (wall-clock time lives only in the ledger).
    pub created_at: u64,
    /// Set on System turns that summarize every earlier turn up to and including this id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_of: Option<u64>,
}

impl Turn {
    pub fn is_summary(&self) -> bool {
        self.role == Role::System && self.summary_of.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub session_id: String,
    pub turns: Vec<Turn>,
    pub backend_descriptor: String,
    pub temperature: f64,
    pub prompt_registry_hash: Option<String>,
}

impl SessionTranscript {
    pub fn new(session_id: impl Into<String>, backend_descriptor: impl Into<String>) -> Self {
        SessionTranscript {
            session_id: session_id.into(),
            turns: Vec::new(),
            backend_descriptor: backend_descriptor.into(),
            temperature: DEFAULT_TEMPERATURE,
            prompt_registry_hash: None,
        }
    }

    /// Adds a leading System turn. Only allowed before the first Architect turn.
    pub fn push_system(&mut self, content: impl Into<String>) -> Result<(), GatewayError> {
        if self.turns.iter().any(|t| t.role != Role::System) {
            return Err(GatewayError::AlternationViolated(
                "system turns may only precede the first architect turn".into(),
            ));
        }
        let id = self.next_id();
        self.turns.push(Turn {
            id,
            role: Role::System,
            content: content.into(),
            activity: Activity::Freeform,
            created_at: id,
            summary_of: None,
        });
        Ok(())
    }

    pub fn next_id(&self) -> u64 {
        self.turns.last().map_or(1, |t| t.id + 1)
    }

    pub fn last_bot_turn(&self) -> Option<&Turn> {
        self.turns.iter().rev().find(|t| t.role == Role::Bot)
    }

    /// Checks id ordering and role alternation.
    pub fn validate(&self) -> Result<(), GatewayError> {
        let mut last_id = 0;
        let mut expect = Role::Architect;
        let mut seen_architect = false;
        for t in &self.turns {
            if t.id <= last_id {
                return Err(GatewayError::InvalidTranscript(format!("turn id {} is not increasing", t.id)));
            }
            last_id = t.id;
            match t.role {
                Role::System if !seen_architect && t.summary_of.is_none() => {}
                Role::System if t.is_summary() && seen_architect && expect == Role::Architect => {
                    if t.summary_of.is_some_and(|s| s >= t.id) {
                        return Err(GatewayError::InvalidTranscript(format!(
                            "summary turn {} must summarize earlier turns",
                            t.id
                        )));
                    }
                }
                Role::System => {
                    return Err(GatewayError::AlternationViolated(format!(
                        "system turn {} appears after the dialog started",
                        t.id
                    )))
                }
                role if role == expect => {
                    seen_architect = true;
                    expect = if role == Role::Architect { Role::Bot } else { Role::Architect };
                }
                role => {
                    return Err(GatewayError::AlternationViolated(format!(
                        "turn {} has role {role:?} but {expect:?} was expected",
                        t.id
                    )))
                }
            }
        }
        Ok(())
    }

    /// The turns the backend sees: everything, or the latest summary plus the turns it kept.
    pub fn context_turns(&self) -> Vec<&Turn> {
        match self.turns.iter().rposition(Turn::is_summary) {
            None => self.turns.iter().collect(),
            Some(idx) => {
                let summary = &self.turns[idx];
                let through = summary.summary_of.unwrap_or(0);
                std::iter::once(summary)
                    .chain(self.turns.iter().filter(|t| t.id > through && !t.is_summary()))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestPurpose {
    /// A dialog turn; the last message is the architect's new input.
    Turn,
    /// Fold older context into a summary.
    Summarize,
    /// Context-free single shot used by the variance probe.
    Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub purpose: RequestPurpose,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn last_content(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

pub trait ChatBackend {
    /// Model name, or `replay:<fixture>` for recorded sessions.
    fn descriptor(&self) -> String;

    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("replay fixture has no further responses")]
    ReplayExhausted,
    #[error("backend rejected the conversation context as too large")]
    ContextTooLarge,
    #[error("architect input diverges from the recording at turn {turn_id}")]
    InputMismatch { turn_id: u64, expected: String, actual: String },
    #[error("corrupt fixture at line {line}: {message}")]
    CorruptFixture { line: usize, message: String },
    #[error("role alternation violated: {0}")]
    AlternationViolated(String),
    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),
    #[error("missing placeholder {0:?}")]
    MissingPlaceholder(String),
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::BackendUnavailable(_))
    }
}

fn to_messages<'a>(turns: impl IntoIterator<Item = &'a Turn>) -> Vec<ChatMessage> {
    turns.into_iter().map(|t| ChatMessage { role: t.role, content: t.content.clone() }).collect()
}

/// Appends an Architect turn with `content` and the backend's reply as a Bot turn.
///
/// The transcript is left untouched on error.
pub fn send_turn(
    transcript: &mut SessionTranscript,
    backend: &mut dyn ChatBackend,
    prompts: &PromptRegistry,
    content: &str,
    activity: Activity,
) -> Result<Turn, GatewayError> {
    transcript.validate()?;
    if transcript.turns.iter().rev().find(|t| !t.is_summary()).is_some_and(|t| t.role == Role::Architect) {
        return Err(GatewayError::AlternationViolated("the last turn is already an architect turn".into()));
    }

    let mut working = transcript.clone();
    let reply = match request_reply(&working, backend, content) {
        Err(GatewayError::ContextTooLarge) => {
            summarize(&mut working, backend, prompts)?;
            request_reply(&working, backend, content)?
        }
        other => other?,
    };

    let architect_id = working.next_id();
    working.turns.push(Turn {
        id: architect_id,
        role: Role::Architect,
        content: content.to_string(),
        activity,
        created_at: architect_id,
        summary_of: None,
    });
    let bot = Turn {
        id: architect_id + 1,
        role: Role::Bot,
        content: reply,
        activity,
        created_at: architect_id + 1,
        summary_of: None,
    };
    working.turns.push(bot.clone());
    *transcript = working;
    Ok(bot)
}

fn request_reply(
    transcript: &SessionTranscript,
    backend: &mut dyn ChatBackend,
    content: &str,
) -> Result<String, GatewayError> {
    let mut messages = to_messages(transcript.context_turns());
    messages.push(ChatMessage { role: Role::Architect, content: content.to_string() });
    backend.complete(&ChatRequest { purpose: RequestPurpose::Turn, messages, temperature: transcript.temperature })
}

fn summarize(
    transcript: &mut SessionTranscript,
    backend: &mut dyn ChatBackend,
    prompts: &PromptRegistry,
) -> Result<(), GatewayError> {
    let context = transcript.context_turns();
    let dialog: Vec<&Turn> = context.iter().copied().filter(|t| !t.is_summary()).collect();
    if dialog.len() <= KEPT_TURNS_ON_SUMMARY {
        return Err(GatewayError::ContextTooLarge);
    }
    let replaced_dialog = &dialog[..dialog.len() - KEPT_TURNS_ON_SUMMARY];
    let through = replaced_dialog.last().map(|t| t.id).unwrap_or(0);

    let mut rendered = String::new();
    for t in context.iter().filter(|t| t.is_summary() || t.id <= through) {
        rendered.push_str(&format!("[{}] {}\n", role_label(t.role), t.content));
    }
    let mut bindings = Bindings::new();
    bindings.insert("conversation".into(), rendered);
    let prompt = prompts.render("summarize", &bindings)?;
    let summary = backend.complete(&ChatRequest {
        purpose: RequestPurpose::Summarize,
        messages: vec![ChatMessage { role: Role::Architect, content: prompt }],
        temperature: transcript.temperature,
    })?;

    let id = transcript.next_id();
    transcript.turns.push(Turn {
        id,
        role: Role::System,
        content: summary,
        activity: Activity::Freeform,
        created_at: id,
        summary_of: Some(through),
    });
    Ok(())
}

fn role_label(role: Role) -> &'static str {
    match role {
        Role::Architect => "architect",
        Role::Bot => "bot",
        Role::System => "system",
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A transcript, a backend and the prompt registry, bundled for the engines.
pub struct Conversation<'a> {
    pub transcript: &'a mut SessionTranscript,
    pub backend: &'a mut dyn ChatBackend,
    pub prompts: &'a PromptRegistry,
}

impl<'a> Conversation<'a> {
    pub fn new(
        transcript: &'a mut SessionTranscript,
        backend: &'a mut dyn ChatBackend,
        prompts: &'a PromptRegistry,
    ) -> Self {
        Conversation { transcript, backend, prompts }
    }

    pub fn ask(&mut self, content: &str, activity: Activity) -> Result<Turn, GatewayError> {
        send_turn(self.transcript, self.backend, self.prompts, content, activity)
    }

    pub fn ask_template(&mut self, template: &str, bindings: &Bindings) -> Result<Turn, GatewayError> {
        let t = self.prompts.get(template)?;
        let prompt = t.render(bindings)?;
        let activity = t.activity;
        self.ask(&prompt, activity)
    }

    pub fn ask_template_as(
        &mut self,
        template: &str,
        bindings: &Bindings,
        activity: Activity,
    ) -> Result<Turn, GatewayError> {
        let prompt = self.prompts.render(template, bindings)?;
        self.ask(&prompt, activity)
    }
}
