//! Append-only provenance ledger, one JSON line per record, hash-chained with SHA-256.
//!
//! `digest = sha256(canonical JSON of the line without its "digest" member)`, hex encoded, where
//! canonical JSON is compact with object keys sorted by byte order. The
//! first record chains to [`GENESIS_DIGEST`]. Verification re-encodes every parsed line and
//! requires the bytes to match exactly, so edits that still parse are caught as well.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SessionError;
use crate::model::{ArtifactKind, ArtifactRef, Origin, ProvenanceRecord, SCHEMA_VERSION};

pub const GENESIS_DIGEST: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub record: ProvenanceRecord,
    pub prev_digest: String,
    pub digest: String,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    schema_version: &'a str,
    seq: u64,
    artifact_ref: &'a ArtifactRef,
    origin: Origin,
    turn_ref: Option<u64>,
    timestamp: &'a str,
    prev_digest: &'a str,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    schema_version: String,
    seq: u64,
    artifact_ref: ArtifactRef,
    origin: Origin,
    turn_ref: Option<u64>,
    timestamp: String,
    prev_digest: String,
    digest: String,
}

fn digest_of(record: &ProvenanceRecord, prev_digest: &str) -> String {
    let input = DigestInput {
        schema_version: SCHEMA_VERSION,
        seq: record.seq,
        artifact_ref: &record.artifact_ref,
        origin: record.origin,
        turn_ref: record.turn_ref,
        timestamp: &record.timestamp,
        prev_digest,
    };
    let value = serde_json::to_value(&input).expect("ledger records serialize");
    let mut canonical = String::new();
    write_canonical(&value, &mut canonical);
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn write_canonical(v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_seq(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.record.seq)
    }

    pub fn head_digest(&self) -> &str {
        self.entries.last().map_or(GENESIS_DIGEST, |e| e.digest.as_str())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn records(&self) -> Vec<ProvenanceRecord> {
        self.entries.iter().map(|e| e.record.clone()).collect()
    }

    /// Appends `record`, which must carry `last_seq + 1`.
    pub fn append_provenance(&mut self, record: ProvenanceRecord) -> Result<&LedgerEntry, SessionError> {
        let expected = self.last_seq() + 1;
        if record.seq != expected {
            return Err(SessionError::SequenceViolation { expected, got: record.seq });
        }
        let prev_digest = self.head_digest().to_string();
        let digest = digest_of(&record, &prev_digest);
        self.entries.push(LedgerEntry { record, prev_digest, digest });
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn encode_entry(entry: &LedgerEntry) -> String {
        let line = Line {
            schema_version: SCHEMA_VERSION.to_string(),
            seq: entry.record.seq,
            artifact_ref: entry.record.artifact_ref.clone(),
            origin: entry.record.origin,
            turn_ref: entry.record.turn_ref,
            timestamp: entry.record.timestamp.clone(),
            prev_digest: entry.prev_digest.clone(),
            digest: entry.digest.clone(),
        };
        serde_json::to_string(&line).expect("ledger records serialize")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&Self::encode_entry(e));
            out.push('\n');
        }
        out.into_bytes()
    }

    /// Parses and verifies ledger bytes: canonical encoding, consecutive sequence numbers and
    /// an unbroken digest chain.
    pub fn verify(bytes: &[u8]) -> Result<Ledger, SessionError> {
        let corrupt = |line: usize, reason: String| SessionError::LedgerCorrupt { line, reason };
        let text = std::str::from_utf8(bytes).map_err(|e| corrupt(0, format!("not UTF-8: {e}")))?;
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(corrupt(text.lines().count(), "missing final newline".into()));
        }
        let mut ledger = Ledger::new();
        for (i, raw) in text.split_terminator('\n').enumerate() {
            let n = i + 1;
            let line: Line = serde_json::from_str(raw).map_err(|e| corrupt(n, e.to_string()))?;
            if line.schema_version != SCHEMA_VERSION {
                return Err(corrupt(n, format!("unsupported schema_version {:?}", line.schema_version)));
            }
            let record = ProvenanceRecord {
                seq: line.seq,
                artifact_ref: line.artifact_ref,
                origin: line.origin,
                turn_ref: line.turn_ref,
                timestamp: line.timestamp,
            };
            if line.prev_digest != ledger.head_digest() {
                return Err(corrupt(n, "previous-record digest does not match".into()));
            }
            let expected = ledger.last_seq() + 1;
            if record.seq != expected {
                return Err(corrupt(n, format!("sequence {} where {expected} was expected", record.seq)));
            }
            let digest = digest_of(&record, &line.prev_digest);
            if digest != line.digest {
                return Err(corrupt(n, "record digest does not match its contents".into()));
            }
            let entry = LedgerEntry { record, prev_digest: line.prev_digest, digest };
            if Self::encode_entry(&entry) != raw {
                return Err(corrupt(n, "record is not in canonical encoding".into()));
            }
            ledger.entries.push(entry);
        }
        Ok(ledger)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginCounts {
    pub architect: usize,
    pub bot: usize,
    pub merged: usize,
}

impl OriginCounts {
    pub fn total(&self) -> usize {
        self.architect + self.bot + self.merged
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceSummary {
    pub by_kind: BTreeMap<ArtifactKind, OriginCounts>,
    pub total: usize,
    /// Every artifact in the ledger has at least one Architect record. False for an empty ledger.
    pub human_reviewed: bool,
}

pub fn provenance_summary(records: &[ProvenanceRecord]) -> ProvenanceSummary {
    use ArtifactKind::*;
    let mut by_kind: BTreeMap<ArtifactKind, OriginCounts> =
        [Story, Asr, Model, TraceLink, Scenario, Report, Session].into_iter().map(|k| (k, OriginCounts::default())).collect();
    let mut artifacts: BTreeSet<(ArtifactKind, &str)> = BTreeSet::new();
    let mut reviewed: BTreeSet<(ArtifactKind, &str)> = BTreeSet::new();
    for r in records {
        let c = by_kind.entry(r.artifact_ref.kind).or_default();
        match r.origin {
            Origin::Architect => c.architect += 1,
            Origin::Bot => c.bot += 1,
            Origin::Merged => c.merged += 1,
        }
        let key = (r.artifact_ref.kind, r.artifact_ref.id.as_str());
        artifacts.insert(key);
        if r.origin == Origin::Architect {
            reviewed.insert(key);
        }
    }
    ProvenanceSummary {
        by_kind,
        total: records.len(),
        human_reviewed: !artifacts.is_empty() && artifacts == reviewed,
    }
}

/// Ledger bytes with `timestamp`, `prev_digest` and `digest` blanked, for comparing the
/// content of two ledgers written at different times.
pub fn mask_ledger(bytes: &[u8]) -> String {
    let mut out = String::new();
    for raw in String::from_utf8_lossy(bytes).lines() {
        match serde_json::from_str::<Line>(raw) {
            Ok(mut line) => {
                line.timestamp.clear();
                line.prev_digest.clear();
                line.digest.clear();
                out.push_str(&serde_json::to_string(&line).expect("ledger records serialize"));
            }
            Err(_) => out.push_str(raw),
        }
        out.push('\n');
    }
    out
}
