//! SAAM evaluation: scenarios elicited from the bot, classified against the model, folded into
//! a scenario-interaction matrix and a per-requirement verdict report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{ask_with_reask, story_bindings, ReaskError};
use crate::contract::{columns, fenced_block, list, record_lines};
use crate::gateway::{Activity, Conversation, GatewayError};
use crate::model::{
    format_scenario_id, ArchitectureStory, ArtifactKind, ArtifactRef, Asr, AsrStatus, Classification,
    EvaluationReport, Marker, MatrixCell, ModelGraph, Origin, ProvenanceEvent, SaamScenario, ScenarioKind, Verdict,
};
use crate::synthesis::asr_bindings_text;

pub const DEFAULT_HOTSPOT_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluationError {
    #[error("bot response violates the scenario format: {0}")]
    UnparseableResponse(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no element named {0:?} in the model")]
    UnknownElement(String),
    #[error("scenario {0} has not been classified")]
    UnclassifiedScenario(String),
    #[error("scenario {scenario_id} cites unknown requirement {asr_id}")]
    DanglingAsrReference { scenario_id: String, asr_id: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// One record of the ` ```scenarios ` block before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposedScenario {
    pub kind: ScenarioKind,
    pub text: String,
    pub affected_elements: Vec<String>,
    pub source_asrs: Vec<String>,
}

/// Parses `KIND | scenario | elements | requirement ids` records and checks them against the
/// model, the live requirements and the focus element.
pub fn parse_scenario_response(
    text: &str,
    model: &ModelGraph,
    asrs: &[Asr],
    focus: Option<&str>,
) -> Result<Vec<ProposedScenario>, String> {
    let block = fenced_block(text, "scenarios").ok_or("no ```scenarios fenced block found")?;
    let mut out = Vec::new();
    for (n, line) in record_lines(block) {
        let cols = columns(line);
        if cols.len() != 4 {
            return Err(format!("record {n}: expected `KIND | scenario | elements | requirement ids`, got {line:?}"));
        }
        let kind = match cols[0].to_ascii_uppercase().as_str() {
            "INDIVIDUAL" => ScenarioKind::Individual,
            "INTERACTING" => ScenarioKind::Interacting,
            other => return Err(format!("record {n}: unknown scenario kind {other:?}")),
        };
        if cols[1].is_empty() {
            return Err(format!("record {n}: empty scenario text"));
        }
        let affected_elements = list(cols[2]);
        if let Some(e) = affected_elements.iter().find(|e| !model.contains(e)) {
            return Err(format!("record {n}: {e:?} is not an element of the architecture"));
        }
        let distinct: BTreeSet<&String> = affected_elements.iter().collect();
        if distinct.len() != affected_elements.len() {
            return Err(format!("record {n}: affected elements repeat"));
        }
        match kind {
            ScenarioKind::Individual if affected_elements.len() != 1 => {
                return Err(format!("record {n}: an INDIVIDUAL scenario names exactly one element"))
            }
            ScenarioKind::Interacting if affected_elements.len() < 2 => {
                return Err(format!("record {n}: an INTERACTING scenario names at least two elements"))
            }
            _ => {}
        }
        let source_asrs = list(cols[3]);
        if source_asrs.is_empty() {
            return Err(format!("record {n}: cite at least one requirement id"));
        }
        if let Some(id) = source_asrs.iter().find(|id| !asrs.iter().any(|a| &a.id == *id && a.status != AsrStatus::Rejected)) {
            return Err(format!("record {n}: unknown requirement id {id}"));
        }
        out.push(ProposedScenario { kind, text: cols[1].to_string(), affected_elements, source_asrs });
    }
    if out.is_empty() {
        return Err("the ```scenarios block holds no scenarios".into());
    }
    if let Some(f) = focus {
        let individual =
            out.iter().any(|s| s.kind == ScenarioKind::Individual && s.affected_elements.first().is_some_and(|e| e == f));
        if !individual {
            return Err(format!("include at least one INDIVIDUAL scenario for {f}"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicitation {
    pub scenarios: Vec<SaamScenario>,
    pub events: Vec<ProvenanceEvent>,
    pub turn_id: u64,
}

/// Asks the bot for SAAM scenarios over `model`; ids continue after `existing`. Returned
/// scenarios are Unclassified.
#[allow(clippy::too_many_arguments)]
pub fn elicit_scenarios(
    asrs: &[Asr],
    story: &ArchitectureStory,
    model: &ModelGraph,
    script: &str,
    focus: Option<&str>,
    existing: &[SaamScenario],
    conv: &mut Conversation<'_>,
) -> Result<Elicitation, EvaluationError> {
    if let Some(f) = focus {
        if !model.contains(f) {
            return Err(EvaluationError::UnknownElement(f.to_string()));
        }
    }
    let live: Vec<&Asr> = asrs.iter().filter(|a| a.status != AsrStatus::Rejected).collect();
    let mut bindings = story_bindings(story);
    bindings.insert("asrs".into(), asr_bindings_text(&live));
    bindings.insert("script".into(), script.to_string());
    if let Some(f) = focus {
        bindings.insert(
            "focus_instruction".into(),
            format!(
                " Focus on the {f} element: give scenarios that evaluate {f} individually and scenarios where it interacts with other elements."
            ),
        );
    }
    let (proposed, turn_id) = ask_with_reask(conv, "evaluation", &bindings, Activity::Evaluation, |reply| {
        parse_scenario_response(reply, model, asrs, focus)
    })
    .map_err(|e| match e {
        ReaskError::Gateway(g) => EvaluationError::Gateway(g),
        ReaskError::Unparseable(m) => EvaluationError::UnparseableResponse(m),
    })?;

    let first = existing
        .iter()
        .filter_map(|s| s.id.strip_prefix("SCN-").and_then(|n| n.parse::<usize>().ok()))
        .max()
        .unwrap_or(0)
        + 1;
    let mut scenarios = Vec::with_capacity(proposed.len());
    let mut events = Vec::with_capacity(proposed.len());
    for (next, p) in (first..).zip(proposed) {
        let id = format_scenario_id(next);
        events.push(ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Scenario, &id), Origin::Bot).with_turn(Some(turn_id)));
        scenarios.push(SaamScenario {
            id,
            text: p.text,
            kind: p.kind,
            classification: Classification::Unclassified,
            affected_elements: p.affected_elements,
            source_asrs: p.source_asrs,
        });
    }
    Ok(Elicitation { scenarios, events, turn_id })
}

/// Direct iff every consecutive pair of affected elements is related in the model (in either
/// direction); a single existing element is Direct.
pub fn classify_scenario(scenario: &SaamScenario, model: &ModelGraph) -> Result<SaamScenario, EvaluationError> {
    if let Some(e) = scenario.affected_elements.iter().find(|e| !model.contains(e)) {
        return Err(EvaluationError::UnknownElement(e.clone()));
    }
    let mut out = scenario.clone();
    out.classification = if out.affected_elements.windows(2).all(|w| model.connected(&w[0], &w[1])) {
        Classification::Direct
    } else {
        Classification::Indirect
    };
    out.check_invariants().map_err(EvaluationError::InvalidScenario)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hotspot {
    pub element: String,
    pub indirect_scenarios: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    /// Sorted by (scenario id, element).
    pub cells: Vec<MatrixCell>,
    /// Descending count, then name.
    pub hotspots: Vec<Hotspot>,
}

/// Marks every (scenario, affected element) and flags elements touched by at least `threshold`
/// Indirect scenarios.
pub fn interaction_matrix(scenarios: &[SaamScenario], threshold: usize) -> Result<InteractionMatrix, EvaluationError> {
    let mut cells = Vec::new();
    let mut indirect: BTreeMap<&str, usize> = BTreeMap::new();
    for s in scenarios {
        let marker = match s.classification {
            Classification::Direct => Marker::Direct,
            Classification::Indirect => Marker::Indirect,
            Classification::Unclassified => return Err(EvaluationError::UnclassifiedScenario(s.id.clone())),
        };
        for e in &s.affected_elements {
            cells.push(MatrixCell { scenario_id: s.id.clone(), element: e.clone(), marker });
            if marker == Marker::Indirect {
                *indirect.entry(e.as_str()).or_default() += 1;
            }
        }
    }
    cells.sort_by(|a, b| (&a.scenario_id, &a.element).cmp(&(&b.scenario_id, &b.element)));
    let mut hotspots: Vec<Hotspot> = indirect
        .into_iter()
        .filter(|(_, n)| *n >= threshold)
        .map(|(e, n)| Hotspot { element: e.to_string(), indirect_scenarios: n })
        .collect();
    hotspots.sort_by(|a, b| b.indirect_scenarios.cmp(&a.indirect_scenarios).then_with(|| a.element.cmp(&b.element)));
    Ok(InteractionMatrix { cells, hotspots })
}

/// Satisfied if all scenarios are Direct, Unsatisfied if all are Indirect, Partial if mixed,
/// Unknown without scenarios.
pub fn verdict(classifications: &[Classification]) -> Result<Verdict, Classification> {
    if let Some(c) = classifications.iter().find(|c| **c == Classification::Unclassified) {
        return Err(*c);
    }
    let direct = classifications.iter().filter(|c| **c == Classification::Direct).count();
    Ok(match (direct, classifications.len() - direct) {
        (0, 0) => Verdict::Unknown,
        (_, 0) => Verdict::Satisfied,
        (0, _) => Verdict::Unsatisfied,
        _ => Verdict::Partial,
    })
}

/// Builds the report over every requirement that has not been removed. Citations of removed
/// requirements are ignored; citations of ids that never existed are errors.
pub fn evaluate(
    asrs: &[Asr],
    scenarios: &[SaamScenario],
    matrix: &InteractionMatrix,
) -> Result<EvaluationReport, EvaluationError> {
    let live: Vec<&Asr> = asrs.iter().filter(|a| a.status != AsrStatus::Rejected).collect();
    let mut by_asr: BTreeMap<&str, Vec<Classification>> = live.iter().map(|a| (a.id.as_str(), Vec::new())).collect();
    for s in scenarios {
        if s.classification == Classification::Unclassified {
            return Err(EvaluationError::UnclassifiedScenario(s.id.clone()));
        }
        for id in &s.source_asrs {
            if !asrs.iter().any(|a| &a.id == id) {
                return Err(EvaluationError::DanglingAsrReference { scenario_id: s.id.clone(), asr_id: id.clone() });
            }
            // removed requirements keep their id but get no verdict
            if let Some(slot) = by_asr.get_mut(id.as_str()) {
                slot.push(s.classification);
            }
        }
    }
    let per_asr_verdicts: BTreeMap<String, Verdict> = by_asr
        .iter()
        .map(|(id, cs)| (id.to_string(), verdict(cs).expect("classified above")))
        .collect();
    let needs_scenarios: Vec<String> = live
        .iter()
        .filter(|a| a.status == AsrStatus::Accepted && by_asr[a.id.as_str()].is_empty())
        .map(|a| a.id.clone())
        .collect();
    let count = |v: Verdict| per_asr_verdicts.values().filter(|x| **x == v).count();
    let hotspots: Vec<String> = matrix.hotspots.iter().map(|h| h.element.clone()).collect();
    let mut summary = format!(
        "{} requirements evaluated over {} scenarios: {} satisfied, {} partial, {} unsatisfied, {} unknown.",
        per_asr_verdicts.len(),
        scenarios.len(),
        count(Verdict::Satisfied),
        count(Verdict::Partial),
        count(Verdict::Unsatisfied),
        count(Verdict::Unknown),
    );
    if !hotspots.is_empty() {
        write!(summary, " Hotspots: {}.", hotspots.join(", ")).unwrap();
    }
    Ok(EvaluationReport {
        per_asr_verdicts,
        interaction_matrix: matrix.cells.clone(),
        hotspots,
        needs_scenarios,
        summary,
    })
}

/// Human-readable report with the verdict table and the interaction matrix as a table.
pub fn report_markdown(report: &EvaluationReport, asrs: &[Asr], scenarios: &[SaamScenario]) -> String {
    let mut out = String::from("# Evaluation report\n\n");
    writeln!(out, "{}\n", report.summary).unwrap();
    out.push_str("## Requirements\n\n| ASR | Kind | Verdict | Statement |\n|---|---|---|---|\n");
    for (id, v) in &report.per_asr_verdicts {
        let asr = asrs.iter().find(|a| &a.id == id);
        let kind = asr.map(|a| format!("{:?}", a.kind)).unwrap_or_default();
        let statement = asr.map(|a| a.statement.replace('|', "\\|")).unwrap_or_default();
        writeln!(out, "| {id} | {kind} | {v:?} | {statement} |").unwrap();
    }
    if !report.needs_scenarios.is_empty() {
        writeln!(out, "\nNeeds scenarios: {}", report.needs_scenarios.join(", ")).unwrap();
    }
    out.push_str("\n## Scenarios\n\n| Id | Kind | Class | Scenario | ASRs |\n|---|---|---|---|---|\n");
    for s in scenarios {
        writeln!(
            out,
            "| {} | {:?} | {:?} | {} | {} |",
            s.id,
            s.kind,
            s.classification,
            s.text.replace('|', "\\|"),
            s.source_asrs.join(", ")
        )
        .unwrap();
    }
    let elements: BTreeSet<&str> = report.interaction_matrix.iter().map(|c| c.element.as_str()).collect();
    let ids: BTreeSet<&str> = report.interaction_matrix.iter().map(|c| c.scenario_id.as_str()).collect();
    out.push_str("\n## Scenario interaction matrix\n\n| Scenario |");
    for e in &elements {
        write!(out, " {e} |").unwrap();
    }
    out.push_str("\n|---|");
    for _ in &elements {
        out.push_str("---|");
    }
    out.push('\n');
    for id in &ids {
        write!(out, "| {id} |").unwrap();
        for e in &elements {
            let mark = report
                .interaction_matrix
                .iter()
                .find(|c| c.scenario_id == *id && c.element == *e)
                .map(|c| match c.marker {
                    Marker::Direct => "D",
                    Marker::Indirect => "I",
                })
                .unwrap_or("");
            write!(out, " {mark} |").unwrap();
        }
        out.push('\n');
    }
    if !report.hotspots.is_empty() {
        writeln!(out, "\nHotspots: {}", report.hotspots.join(", ")).unwrap();
    }
    out
}
