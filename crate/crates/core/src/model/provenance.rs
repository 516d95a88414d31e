use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArtifactKind {
    Story,
    Asr,
    Model,
    TraceLink,
    Scenario,
    Report,
    Session,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    Architect,
    Bot,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub kind: ArtifactKind,
    pub id: String,
    pub field: Option<String>,
}

impl ArtifactRef {
    pub fn new(kind: ArtifactKind, id: impl Into<String>) -> Self {
        ArtifactRef { kind, id: id.into(), field: None }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

/// What an engine operation wants recorded; the session store assigns `seq` and `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEvent {
    pub artifact_ref: ArtifactRef,
    pub origin: Origin,
    pub turn_ref: Option<u64>,
}

impl ProvenanceEvent {
    pub fn new(artifact_ref: ArtifactRef, origin: Origin) -> Self {
        ProvenanceEvent { artifact_ref, origin, turn_ref: None }
    }

    pub fn with_turn(mut self, turn: Option<u64>) -> Self {
        self.turn_ref = turn;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub seq: u64,
    pub artifact_ref: ArtifactRef,
    pub origin: Origin,
    pub turn_ref: Option<u64>,
    /// RFC 3339, UTC.
    pub timestamp: String,
}
