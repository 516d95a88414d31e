//! Transcript recordings and the replay backend.
//!
//! A fixture is JSON lines: a header line followed by one [`Turn`] per line. The same format is
//! used for transcripts persisted in a project, so any live session doubles as a fixture.

use serde::{Deserialize, Serialize};

use super::{
    send_turn, ChatBackend, ChatRequest, GatewayError, PromptRegistry, RequestPurpose, Role, SessionTranscript, Turn,
};
use crate::model::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureHeader {
    pub schema_version: String,
    pub session_id: String,
    pub backend_descriptor: String,
    pub prompt_registry_hash: Option<String>,
    pub temperature: f64,
}

/// Serializes a transcript to fixture bytes.
pub fn record(transcript: &SessionTranscript) -> Vec<u8> {
    let header = FixtureHeader {
        schema_version: SCHEMA_VERSION.to_string(),
        session_id: transcript.session_id.clone(),
        backend_descriptor: transcript.backend_descriptor.clone(),
        prompt_registry_hash: transcript.prompt_registry_hash.clone(),
        temperature: transcript.temperature,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for t in &transcript.turns {
        out.push_str(&serde_json::to_string(t).expect("turn serializes"));
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses fixture bytes back into the recorded transcript.
pub fn parse_fixture(bytes: &[u8]) -> Result<SessionTranscript, GatewayError> {
    let corrupt = |line: usize, message: String| GatewayError::CorruptFixture { line, message };
    let text = std::str::from_utf8(bytes).map_err(|e| corrupt(0, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| corrupt(1, "missing header line".into()))?;
    let header: FixtureHeader = serde_json::from_str(first).map_err(|e| corrupt(1, e.to_string()))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(corrupt(1, format!("unsupported schema_version {:?}", header.schema_version)));
    }
    let mut turns = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let turn: Turn = serde_json::from_str(line).map_err(|e| corrupt(i + 1, e.to_string()))?;
        turns.push(turn);
    }
    let transcript = SessionTranscript {
        session_id: header.session_id,
        turns,
        backend_descriptor: header.backend_descriptor,
        temperature: header.temperature,
        prompt_registry_hash: header.prompt_registry_hash,
    };
    transcript.validate().map_err(|e| corrupt(0, e.to_string()))?;
    Ok(transcript)
}

/// Serves the Bot (and summary) turns of a recording in order, checking that the architect's
/// inputs match the recorded ones.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    name: String,
    recording: SessionTranscript,
    cursor: usize,
}

impl ReplayBackend {
    pub fn new(name: impl Into<String>, recording: SessionTranscript) -> Self {
        ReplayBackend { name: name.into(), recording, cursor: 0 }
    }

    pub fn from_bytes(name: impl Into<String>, bytes: &[u8]) -> Result<Self, GatewayError> {
        Ok(Self::new(name, parse_fixture(bytes)?))
    }

    pub fn recording(&self) -> &SessionTranscript {
        &self.recording
    }

    /// Number of recorded turns not yet consumed.
    pub fn remaining(&self) -> usize {
        self.recording.turns.len().saturating_sub(self.cursor)
    }

    /// Positions the cursor after the turns `transcript` already holds, so a session persisted by
    /// an earlier process continues where it stopped.
    pub fn resume(&mut self, transcript: &SessionTranscript) -> Result<(), GatewayError> {
        for (i, turn) in transcript.turns.iter().enumerate() {
            let Some(recorded) = self.recording.turns.get(i) else {
                return Err(GatewayError::ReplayExhausted);
            };
            if recorded.role != turn.role || recorded.content != turn.content {
                return Err(GatewayError::InputMismatch {
                    turn_id: recorded.id,
                    expected: recorded.content.clone(),
                    actual: turn.content.clone(),
                });
            }
        }
        self.cursor = transcript.turns.len();
        Ok(())
    }

    fn skip_leading_system(&mut self) {
        while let Some(t) = self.recording.turns.get(self.cursor) {
            if t.role == Role::System && !t.is_summary() {
                self.cursor += 1;
            } else {
                break;
            }
        }
    }
}

impl ChatBackend for ReplayBackend {
    fn descriptor(&self) -> String {
        format!("replay:{}", self.name)
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.skip_leading_system();
        let turns = &self.recording.turns;
        let Some(next) = turns.get(self.cursor) else {
            return Err(GatewayError::ReplayExhausted);
        };
        match request.purpose {
            RequestPurpose::Summarize => {
                if !next.is_summary() {
                    return Err(GatewayError::InputMismatch {
                        turn_id: next.id,
                        expected: next.content.clone(),
                        actual: request.last_content().to_string(),
                    });
                }
                self.cursor += 1;
                Ok(next.content.clone())
            }
            RequestPurpose::Turn | RequestPurpose::Probe => {
                if next.is_summary() {
                    // the recorded session overflowed its context here
                    return Err(GatewayError::ContextTooLarge);
                }
                if next.role != Role::Architect || next.content != request.last_content() {
                    return Err(GatewayError::InputMismatch {
                        turn_id: next.id,
                        expected: next.content.clone(),
                        actual: request.last_content().to_string(),
                    });
                }
                let reply = turns.get(self.cursor + 1).filter(|t| t.role == Role::Bot).ok_or(GatewayError::ReplayExhausted)?;
                self.cursor += 2;
                Ok(reply.content.clone())
            }
        }
    }
}

/// Re-drives the architect inputs of `fixture` through a replay of itself and returns the
/// reproduced transcript.
pub fn replay_transcript(
    name: &str,
    fixture: &[u8],
    prompts: &PromptRegistry,
) -> Result<SessionTranscript, GatewayError> {
    let recording = parse_fixture(fixture)?;
    replay_inputs(name, &recording, &recording, prompts)
}

/// Replays the architect inputs of `inputs` against the recording `fixture`.
pub fn replay_inputs(
    name: &str,
    fixture: &SessionTranscript,
    inputs: &SessionTranscript,
    prompts: &PromptRegistry,
) -> Result<SessionTranscript, GatewayError> {
    let mut backend = ReplayBackend::new(name, fixture.clone());
    let mut out = SessionTranscript {
        session_id: inputs.session_id.clone(),
        turns: Vec::new(),
        backend_descriptor: backend.descriptor(),
        temperature: inputs.temperature,
        prompt_registry_hash: inputs.prompt_registry_hash.clone(),
    };
    for t in inputs.turns.iter().take_while(|t| t.role == Role::System && !t.is_summary()) {
        out.push_system(t.content.clone())?;
    }
    for t in inputs.turns.iter().filter(|t| t.role == Role::Architect) {
        send_turn(&mut out, &mut backend, prompts, &t.content, t.activity)?;
    }
    Ok(out)
}

/// Bytes of the turn lines only (the header carries the backend descriptor, which differs
/// between a recording and its replay).
pub fn turn_lines(fixture: &[u8]) -> &[u8] {
    match fixture.iter().position(|b| *b == b'\n') {
        Some(i) => &fixture[i + 1..],
        None => &[],
    }
}

/// Fixtures shipped with the crate, addressed by name as in `replay:<name>`.
pub const BUILTIN_FIXTURES: [(&str, &[u8]); 3] = [
    ("campusbike", include_bytes!("../../fixtures/campusbike.jsonl")),
    ("styles", include_bytes!("../../fixtures/styles.jsonl")),
    ("styles-identical", include_bytes!("../../fixtures/styles-identical.jsonl")),
];

pub fn builtin_fixture(name: &str) -> Option<&'static [u8]> {
    BUILTIN_FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, b)| *b)
}
