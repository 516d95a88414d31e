//! Architectural synthesis: diagram scripts from the bot, parsed into model graphs, checked for
//! pattern and tactic application, and linked back to the requirements they realize.

mod tactics;
mod uml;

pub use tactics::*;
pub use uml::*;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::{ask_with_reask, ReaskError};
use crate::contract::{fenced_block, list, record_lines};
use crate::gateway::{Activity, Bindings, Conversation, GatewayError};
use crate::model::{ArtifactKind, ArtifactRef, Asr, AsrStatus, DiagramKind, ModelGraph, Origin, ProvenanceEvent};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("synthesis needs at least one accepted requirement")]
    NoAcceptedAsrs,
    #[error("bot script is not valid: {0}")]
    UnparseableScript(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no requirement with id {0}")]
    UnknownAsr(String),
    #[error("no element named {0:?} in the model")]
    UnknownElement(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraceLink {
    pub asr_id: String,
    pub element: String,
}

impl TraceLink {
    pub fn new(asr_id: impl Into<String>, element: impl Into<String>) -> Self {
        TraceLink { asr_id: asr_id.into(), element: element.into() }
    }

    pub fn ref_id(&self) -> String {
        format!("{}->{}", self.asr_id, self.element)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceabilityMatrix {
    pub links: Vec<TraceLink>,
    pub uncovered_asrs: Vec<String>,
    pub unmotivated_elements: Vec<String>,
}

impl TraceabilityMatrix {
    pub fn links_per_asr(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for l in &self.links {
            *m.entry(l.asr_id.as_str()).or_default() += 1;
        }
        m
    }

    pub fn links_per_element(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for l in &self.links {
            *m.entry(l.element.as_str()).or_default() += 1;
        }
        m
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| ASR | Element |\n|---|---|\n");
        for l in &self.links {
            out.push_str(&format!("| {} | {} |\n", l.asr_id, l.element));
        }
        if !self.uncovered_asrs.is_empty() {
            out.push_str(&format!("\nUncovered requirements: {}\n", self.uncovered_asrs.join(", ")));
        }
        if !self.unmotivated_elements.is_empty() {
            out.push_str(&format!("\nUnmotivated elements: {}\n", self.unmotivated_elements.join(", ")));
        }
        out
    }
}

/// Links are deduplicated and sorted by (asr id, element). Removed requirements cannot be linked.
pub fn build_traceability<'a>(
    asrs: &[Asr],
    model: &ModelGraph,
    links: impl IntoIterator<Item = &'a TraceLink>,
) -> Result<TraceabilityMatrix, SynthesisError> {
    let mut set = BTreeSet::new();
    for l in links {
        if !asrs.iter().any(|a| a.id == l.asr_id && a.status != AsrStatus::Rejected) {
            return Err(SynthesisError::UnknownAsr(l.asr_id.clone()));
        }
        if !model.contains(&l.element) {
            return Err(SynthesisError::UnknownElement(l.element.clone()));
        }
        set.insert(l.clone());
    }
    let links: Vec<TraceLink> = set.into_iter().collect();
    let uncovered_asrs = asrs
        .iter()
        .filter(|a| a.status == AsrStatus::Accepted && !links.iter().any(|l| l.asr_id == a.id))
        .map(|a| a.id.clone())
        .collect();
    let unmotivated_elements = model
        .elements
        .iter()
        .filter(|e| !links.iter().any(|l| l.element == e.name))
        .map(|e| e.name.clone())
        .collect();
    Ok(TraceabilityMatrix { links, uncovered_asrs, unmotivated_elements })
}

/// Accepted requirements rendered for the synthesis prompt, one per line.
pub fn asr_bindings_text(asrs: &[&Asr]) -> String {
    let mut out = String::new();
    for a in asrs {
        out.push_str(&format!("{} | {:?} | {}", a.id, a.kind, a.statement));
        if let Some(c) = &a.criterion {
            out.push_str(&format!(" | {c}"));
        }
        out.push('\n');
    }
    out
}

/// `ASR-001 -> A, B` records from the ` ```trace ` block.
pub fn parse_trace_block(text: &str) -> Result<Vec<TraceLink>, String> {
    let Some(block) = fenced_block(text, "trace") else {
        return Ok(Vec::new());
    };
    let mut links = Vec::new();
    for (n, line) in record_lines(block) {
        let (asr, elements) =
            line.split_once("->").ok_or_else(|| format!("trace record {n}: expected `ASR-001 -> Element, ...`"))?;
        let asr = asr.trim();
        if asr.is_empty() {
            return Err(format!("trace record {n}: missing requirement id"));
        }
        for e in list(elements) {
            links.push(TraceLink::new(asr, e));
        }
    }
    Ok(links)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub script: UmlScript,
    pub model: ModelGraph,
    pub trace: TraceabilityMatrix,
    /// Bot turn the script was taken from.
    pub turn_id: u64,
}

impl Synthesis {
    /// Provenance for the stored model revision and each trace link.
    pub fn events(&self, model_id: &str) -> Vec<ProvenanceEvent> {
        let turn = Some(self.turn_id);
        let mut events = vec![ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Model, model_id), Origin::Bot).with_turn(turn)];
        events.extend(self.trace.links.iter().map(|l| {
            ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::TraceLink, l.ref_id()), Origin::Bot).with_turn(turn)
        }));
        events
    }
}

/// Asks the bot for a diagram of the Accepted requirements. A reply whose ` ```plantuml ` block
/// does not parse, or whose trace links name unknown ids, is re-asked once with the error quoted.
pub fn synthesize_script(
    asrs: &[Asr],
    diagram_kind: DiagramKind,
    conv: &mut Conversation<'_>,
) -> Result<Synthesis, SynthesisError> {
    let accepted: Vec<&Asr> = asrs.iter().filter(|a| a.status == AsrStatus::Accepted).collect();
    if accepted.is_empty() {
        return Err(SynthesisError::NoAcceptedAsrs);
    }
    let mut bindings = Bindings::new();
    bindings.insert("diagram_kind".into(), diagram_kind.short_name().into());
    bindings.insert("asrs".into(), asr_bindings_text(&accepted));

    let parse = |reply: &str| -> Result<(UmlScript, ModelGraph, TraceabilityMatrix), String> {
        let text = fenced_block(reply, "plantuml").ok_or("no ```plantuml fenced block found")?;
        let script = UmlScript::new(text, diagram_kind);
        let model = parse_uml_script(&script).map_err(|e| e.to_string())?;
        let links = parse_trace_block(reply)?;
        let trace = build_traceability(asrs, &model, &links).map_err(|e| format!("trace block: {e}"))?;
        Ok((script, model, trace))
    };
    let ((script, model, trace), turn_id) =
        ask_with_reask(conv, "synthesis", &bindings, Activity::Synthesis, parse).map_err(|e| match e {
            ReaskError::Gateway(g) => SynthesisError::Gateway(g),
            ReaskError::Unparseable(m) => SynthesisError::UnparseableScript(m),
        })?;
    Ok(Synthesis { script, model, trace, turn_id })
}
