use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::state::{transition, GateFacts, Phase, SessionState};
use super::SessionError;
use crate::analysis::{accept_asrs, apply_refinement, RefinementOp};
use crate::evaluation::{classify_scenario, evaluate, interaction_matrix};
use crate::model::{
    validate_story, ArchitectureStory, ArtifactKind, ArtifactRef, Asr, AsrStatus, Classification, DiagramKind,
    EvaluationReport, ModelGraph, Origin, ProvenanceEvent, SaamScenario,
};
use crate::synthesis::{build_traceability, parse_uml, pretty_print, TraceLink};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRevision {
    pub rev: u32,
    pub diagram_kind: DiagramKind,
    /// Normal form of the script.
    pub script: String,
}

impl ModelRevision {
    pub fn id(&self) -> String {
        format!("{}-{}", self.diagram_kind.short_name(), self.rev)
    }

    pub fn path(&self) -> String {
        format!("models/{}.puml", self.id())
    }

    pub fn graph(&self) -> ModelGraph {
        parse_uml(&self.script, self.diagram_kind).expect("stored scripts are in normal form")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRevision {
    pub rev: u32,
    pub model_rev: u32,
    pub report: EvaluationReport,
}

impl ReportRevision {
    pub fn id(&self) -> String {
        format!("evaluation-{}", self.rev)
    }
}

/// One state change of a project. Replaying a project's events in ledger order from
/// [`Project::empty`] reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProjectEvent {
    Created { project_id: String },
    StoryImported { story: ArchitectureStory },
    Transitioned { to: Phase },
    AsrsProposed { asrs: Vec<Asr>, turn_ref: u64 },
    Refined { op: RefinementOp },
    Accepted { ids: Vec<String> },
    /// The script itself lives in `models/<kind>-<rev>.puml` and is not part of the log line.
    ModelSynthesized {
        rev: u32,
        diagram_kind: DiagramKind,
        #[serde(skip)]
        script: String,
        links: Vec<TraceLink>,
        turn_ref: u64,
    },
    ScenariosElicited { scenarios: Vec<SaamScenario>, focus: Option<String>, turn_ref: u64 },
    Evaluated { rev: u32, hotspot_threshold: usize },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub session: SessionState,
    pub story: Option<ArchitectureStory>,
    pub asrs: Vec<Asr>,
    pub models: Vec<ModelRevision>,
    /// Links for the latest model revision.
    pub trace_links: Vec<TraceLink>,
    pub scenarios: Vec<SaamScenario>,
    pub reports: Vec<ReportRevision>,
}

impl Project {
    pub fn empty() -> Self {
        Project::default()
    }

    pub fn gate_facts(&self) -> GateFacts {
        GateFacts {
            has_story: self.story.is_some(),
            accepted_asrs: self.asrs.iter().filter(|a| a.status == AsrStatus::Accepted).count(),
            model_revisions: self.models.len(),
            reports: self.reports.len(),
        }
    }

    pub fn latest_model(&self) -> Option<&ModelRevision> {
        self.models.last()
    }

    pub fn model(&self, rev: u32) -> Option<&ModelRevision> {
        self.models.iter().find(|m| m.rev == rev)
    }

    pub fn latest_report(&self) -> Option<&ReportRevision> {
        self.reports.last()
    }

    /// Applies `event` and returns the provenance it produces, in ledger order. On error the
    /// project is left unchanged.
    pub fn apply(&mut self, event: &ProjectEvent) -> Result<Vec<ProvenanceEvent>, SessionError> {
        let mut next = self.clone();
        let events = next.apply_in_place(event)?;
        *self = next;
        Ok(events)
    }

    fn session_ref(&self) -> ArtifactRef {
        ArtifactRef::new(ArtifactKind::Session, &self.id).with_field("state")
    }

    fn apply_in_place(&mut self, event: &ProjectEvent) -> Result<Vec<ProvenanceEvent>, SessionError> {
        match event {
            ProjectEvent::Created { project_id } => {
                if !self.id.is_empty() {
                    return Err(SessionError::Invalid("project already created".into()));
                }
                if project_id.trim().is_empty() {
                    return Err(SessionError::Invalid("project id must not be empty".into()));
                }
                // naming the project creates no artifact, so a fresh project has an empty ledger
                self.id = project_id.clone();
                Ok(Vec::new())
            }
            ProjectEvent::StoryImported { story } => {
                if !matches!(self.session.state, Phase::StoryCapture | Phase::Analysis) {
                    return Err(SessionError::GateUnsatisfied(format!(
                        "a story can only be imported during StoryCapture or Analysis, not {}",
                        self.session.state
                    )));
                }
                let defects = validate_story(story);
                if !defects.is_empty() {
                    return Err(crate::analysis::AnalysisError::InvalidStory(defects).into());
                }
                self.story = Some(story.clone());
                Ok(vec![ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Story, &story.id), Origin::Architect)])
            }
            ProjectEvent::Transitioned { to } => {
                self.session = transition(self.session, *to, &self.gate_facts())?;
                Ok(vec![ProvenanceEvent::new(self.session_ref(), Origin::Architect)])
            }
            ProjectEvent::AsrsProposed { asrs, turn_ref } => {
                if asrs.is_empty() {
                    return Err(SessionError::Invalid("no requirements to add".into()));
                }
                let mut events = Vec::new();
                for a in asrs {
                    if self.asrs.iter().any(|x| x.id == a.id) {
                        return Err(SessionError::Invalid(format!("requirement {} already exists", a.id)));
                    }
                    if a.status != AsrStatus::Proposed {
                        return Err(SessionError::Invalid(format!("bot requirement {} must be Proposed", a.id)));
                    }
                    self.asrs.push(a.clone());
                    events.push(
                        ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Asr, &a.id), Origin::Bot).with_turn(Some(*turn_ref)),
                    );
                }
                Ok(events)
            }
            ProjectEvent::Refined { op } => {
                let (asrs, event) = apply_refinement(&self.asrs, op, Origin::Architect)?;
                self.asrs = asrs;
                Ok(vec![event])
            }
            ProjectEvent::Accepted { ids } => {
                if ids.is_empty() {
                    return Err(SessionError::Invalid("no requirement ids to accept".into()));
                }
                let (asrs, events) = accept_asrs(&self.asrs, ids)?;
                self.asrs = asrs;
                Ok(events)
            }
            ProjectEvent::ModelSynthesized { rev, diagram_kind, script, links, turn_ref } => {
                let expected = self.models.len() as u32 + 1;
                if *rev != expected {
                    return Err(SessionError::Invalid(format!("model revision {rev} where {expected} was expected")));
                }
                let graph = parse_uml(script, *diagram_kind)
                    .map_err(|e| SessionError::Invalid(format!("model revision {rev}: {e}")))?;
                if pretty_print(&graph) != *script {
                    return Err(SessionError::Invalid(format!("model revision {rev} is not in normal form")));
                }
                let matrix = build_traceability(&self.asrs, &graph, links)?;
                let revision = ModelRevision { rev: *rev, diagram_kind: *diagram_kind, script: script.clone() };
                let turn = Some(*turn_ref);
                let mut events =
                    vec![ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Model, revision.id()), Origin::Bot).with_turn(turn)];
                events.extend(matrix.links.iter().map(|l| {
                    ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::TraceLink, l.ref_id()), Origin::Bot).with_turn(turn)
                }));
                self.models.push(revision);
                self.trace_links = matrix.links;
                Ok(events)
            }
            ProjectEvent::ScenariosElicited { scenarios, turn_ref, .. } => {
                let model = self
                    .latest_model()
                    .ok_or_else(|| SessionError::GateUnsatisfied("scenarios need a model revision".into()))?
                    .graph();
                let mut ids: BTreeSet<String> = self.scenarios.iter().map(|s| s.id.clone()).collect();
                let mut events = Vec::new();
                for s in scenarios {
                    if !ids.insert(s.id.clone()) {
                        return Err(SessionError::Invalid(format!("scenario {} already exists", s.id)));
                    }
                    s.check_invariants().map_err(SessionError::Invalid)?;
                    if let Some(e) = s.affected_elements.iter().find(|e| !model.contains(e)) {
                        return Err(SessionError::Invalid(format!("scenario {} names unknown element {e}", s.id)));
                    }
                    if let Some(a) = s.source_asrs.iter().find(|a| !self.asrs.iter().any(|x| &x.id == *a)) {
                        return Err(SessionError::Invalid(format!("scenario {} cites unknown requirement {a}", s.id)));
                    }
                    self.scenarios.push(s.clone());
                    events.push(
                        ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Scenario, &s.id), Origin::Bot)
                            .with_turn(Some(*turn_ref)),
                    );
                }
                if events.is_empty() {
                    return Err(SessionError::Invalid("no scenarios to add".into()));
                }
                Ok(events)
            }
            ProjectEvent::Evaluated { rev, hotspot_threshold } => {
                let model_rev = self
                    .latest_model()
                    .ok_or_else(|| SessionError::GateUnsatisfied("evaluation needs a parsed model revision".into()))?;
                let expected = self.reports.len() as u32 + 1;
                if *rev != expected {
                    return Err(SessionError::Invalid(format!("report revision {rev} where {expected} was expected")));
                }
                let model = model_rev.graph();
                let model_rev = model_rev.rev;
                let mut events = Vec::new();
                let mut classified = Vec::with_capacity(self.scenarios.len());
                for s in &self.scenarios {
                    // a scenario naming an element the revised model dropped needs a change
                    let c = if s.affected_elements.iter().all(|e| model.contains(e)) {
                        classify_scenario(s, &model)?
                    } else {
                        SaamScenario { classification: Classification::Indirect, ..s.clone() }
                    };
                    if c.classification != s.classification {
                        events.push(ProvenanceEvent::new(
                            ArtifactRef::new(ArtifactKind::Scenario, &s.id).with_field("classification"),
                            Origin::Merged,
                        ));
                    }
                    classified.push(c);
                }
                debug_assert!(classified.iter().all(|s| s.classification != Classification::Unclassified));
                let matrix = interaction_matrix(&classified, *hotspot_threshold)?;
                let report = evaluate(&self.asrs, &classified, &matrix)?;
                let revision = ReportRevision { rev: *rev, model_rev, report };
                events.push(ProvenanceEvent::new(ArtifactRef::new(ArtifactKind::Report, revision.id()), Origin::Merged));
                self.scenarios = classified;
                self.reports.push(revision);
                Ok(events)
            }
        }
    }

    /// Every artifact id referenced anywhere resolves within the project.
    pub fn check_references(&self) -> Result<(), String> {
        let asr_ids: BTreeSet<&str> = self.asrs.iter().map(|a| a.id.as_str()).collect();
        for l in &self.trace_links {
            if !asr_ids.contains(l.asr_id.as_str()) {
                return Err(format!("trace link cites unknown requirement {}", l.asr_id));
            }
            if !self.latest_model().is_some_and(|m| m.graph().contains(&l.element)) {
                return Err(format!("trace link names unknown element {}", l.element));
            }
        }
        for s in &self.scenarios {
            if let Some(a) = s.source_asrs.iter().find(|a| !asr_ids.contains(a.as_str())) {
                return Err(format!("scenario {} cites unknown requirement {a}", s.id));
            }
        }
        for r in &self.reports {
            if self.model(r.model_rev).is_none() {
                return Err(format!("report {} names unknown model revision {}", r.rev, r.model_rev));
            }
            if let Some(id) = r.report.per_asr_verdicts.keys().find(|id| !asr_ids.contains(id.as_str())) {
                return Err(format!("report {} judges unknown requirement {id}", r.rev));
            }
        }
        Ok(())
    }
}
