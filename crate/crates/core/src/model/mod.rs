//! Domain types shared by every engine. Pure values: no I/O and no knowledge of the bot.
//!
//! Every persisted document is wrapped in [`Document`], which adds the top-level
//! `"schema_version": "1"` field to the canonical JSON encoding.

mod asr;
mod graph;
mod provenance;
mod saam;
mod story;

pub use asr::*;
pub use graph::*;
pub use provenance::*;
pub use saam::*;
pub use story::*;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: String,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("invalid document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0:?}")]
    Version(String),
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn encode_document<T: Serialize>(body: &T) -> String {
    let doc = Document { schema_version: SCHEMA_VERSION.to_string(), body };
    let mut s = serde_json::to_string_pretty(&doc).expect("domain types always serialize");
    s.push('\n');
    s
}

pub fn decode_document<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let doc: Document<T> = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocumentError::Version(doc.schema_version));
    }
    Ok(doc.body)
}

/// Single-line form used for JSON-lines files.
pub fn encode_line<T: Serialize>(body: &T) -> String {
    let doc = Document { schema_version: SCHEMA_VERSION.to_string(), body };
    serde_json::to_string(&doc).expect("domain types always serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrList {
    pub asrs: Vec<Asr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioList {
    pub scenarios: Vec<SaamScenario>,
}
