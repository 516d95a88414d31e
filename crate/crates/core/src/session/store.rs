//! On-disk project directory and the command-level operations shared by the CLI and the HTTP
//! service.
//!
//! ```text
//! project.json            snapshot index (state, model and report revisions, trace links)
//! story.md                current story
//! asrs.json               current requirements
//! scenarios.json          current scenarios
//! models/<kind>-<rev>.puml  model scripts in normal form
//! models/index.jsonl      log: model revisions and their trace links
//! reports/evaluation-<rev>.json / .md
//! transcripts/main.jsonl  dialog with the bot (fixture format)
//! transitions.jsonl       log: creation, story imports, state transitions
//! refinements.jsonl       log: bot proposals, refinements, acceptances
//! scenarios.jsonl         log: elicited scenarios, evaluations
//! ledger.jsonl            hash-chained provenance ledger
//! ```
//!
//! Every log line carries the ledger seq of the first record its event produced (the next seq
//! when it produced none), so the logs merge into one ordered history.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ledger::Ledger;
use super::project::{ModelRevision, Project, ProjectEvent, ReportRevision};
use super::state::{gate, route, Phase, SessionState};
use super::SessionError;
use crate::analysis::{extract_asrs, feed_story, lint_asrs, Lexicon, LintFinding, RefinementOp};
use crate::evaluation::{elicit_scenarios, report_markdown};
use crate::gateway::{
    parse_fixture, record, Activity, ChatBackend, Conversation, PromptRegistry, Role, SessionTranscript, Turn,
};
use crate::model::{
    decode_document, encode_document, encode_line, AnnotationKey, ArchitectureStory, Asr, AsrList, DiagramKind,
    ProvenanceEvent, ProvenanceRecord, SaamScenario, ScenarioList,
};
use crate::synthesis::{
    build_traceability, check_tactic, pretty_print, synthesize_script, CheckOutcome, SensitiveFields,
    TraceabilityMatrix,
};

pub const PROJECT_FILE: &str = "project.json";
pub const STORY_FILE: &str = "story.md";
pub const ASRS_FILE: &str = "asrs.json";
pub const SCENARIOS_FILE: &str = "scenarios.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const TRANSCRIPT_FILE: &str = "transcripts/main.jsonl";
pub const TRANSITIONS_LOG: &str = "transitions.jsonl";
pub const REFINEMENTS_LOG: &str = "refinements.jsonl";
pub const SCENARIOS_LOG: &str = "scenarios.jsonl";
pub const MODELS_LOG: &str = "models/index.jsonl";
pub const LOCK_FILE: &str = ".lock";

const LOGS: [&str; 4] = [TRANSITIONS_LOG, REFINEMENTS_LOG, MODELS_LOG, SCENARIOS_LOG];

pub trait Clock: Send {
    /// RFC 3339 timestamp for a new ledger record.
    fn now(&self) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
    }
}

#[derive(Debug, Clone)]
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub event: ProjectEvent,
}

fn log_for(event: &ProjectEvent) -> &'static str {
    match event {
        ProjectEvent::Created { .. } | ProjectEvent::StoryImported { .. } | ProjectEvent::Transitioned { .. } => {
            TRANSITIONS_LOG
        }
        ProjectEvent::AsrsProposed { .. } | ProjectEvent::Refined { .. } | ProjectEvent::Accepted { .. } => {
            REFINEMENTS_LOG
        }
        ProjectEvent::ModelSynthesized { .. } => MODELS_LOG,
        ProjectEvent::ScenariosElicited { .. } | ProjectEvent::Evaluated { .. } => SCENARIOS_LOG,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelEntry {
    rev: u32,
    diagram_kind: DiagramKind,
    path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportEntry {
    rev: u32,
    model_rev: u32,
    json: String,
    markdown: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ProjectFile {
    id: String,
    session: SessionState,
    story: Option<String>,
    asrs: String,
    scenarios: String,
    models: Vec<ModelEntry>,
    trace_links: Vec<crate::synthesis::TraceLink>,
    reports: Vec<ReportEntry>,
    transcript: String,
    ledger: String,
}

fn report_paths(rev: u32) -> (String, String) {
    (format!("reports/evaluation-{rev}.json"), format!("reports/evaluation-{rev}.md"))
}

fn io_err(path: &Path, e: std::io::Error) -> SessionError {
    SessionError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn read_text(path: &Path) -> Result<String, SessionError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn corrupt(path: &Path, message: impl ToString) -> SessionError {
    SessionError::CorruptFile { path: path.display().to_string(), message: message.to_string() }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SessionError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn append(path: &Path, text: &str) -> Result<(), SessionError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

/// Advisory single-writer lock, released on drop.
#[derive(Debug)]
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(root: &Path) -> Result<Self, SessionError> {
        let path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(SessionError::Locked(path.display().to_string()))
            }
            Err(e) => Err(io_err(&path, e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// A project's persisted state, read without taking the writer lock.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistedProject {
    pub project: Project,
    pub ledger: Ledger,
    pub transcript: Option<SessionTranscript>,
}

pub fn read_project(root: &Path) -> Result<PersistedProject, SessionError> {
    let index_path = root.join(PROJECT_FILE);
    if !index_path.exists() {
        return Err(SessionError::NotAProject(root.display().to_string()));
    }
    let index: ProjectFile = decode_document(&read_text(&index_path)?).map_err(|e| corrupt(&index_path, e))?;
    let story = match &index.story {
        Some(p) => {
            let path = root.join(p);
            Some(ArchitectureStory::from_markdown(&read_text(&path)?).map_err(|e| corrupt(&path, e))?)
        }
        None => None,
    };
    let asrs_path = root.join(&index.asrs);
    let asrs: AsrList = decode_document(&read_text(&asrs_path)?).map_err(|e| corrupt(&asrs_path, e))?;
    let scenarios_path = root.join(&index.scenarios);
    let scenarios: ScenarioList =
        decode_document(&read_text(&scenarios_path)?).map_err(|e| corrupt(&scenarios_path, e))?;
    let mut models = Vec::new();
    for m in &index.models {
        let script = read_text(&root.join(&m.path))?;
        models.push(ModelRevision { rev: m.rev, diagram_kind: m.diagram_kind, script });
    }
    let mut reports = Vec::new();
    for r in &index.reports {
        let path = root.join(&r.json);
        let report = decode_document(&read_text(&path)?).map_err(|e| corrupt(&path, e))?;
        reports.push(ReportRevision { rev: r.rev, model_rev: r.model_rev, report });
    }
    let ledger_path = root.join(&index.ledger);
    let ledger_bytes = fs::read(&ledger_path).map_err(|e| io_err(&ledger_path, e))?;
    let ledger = Ledger::verify(&ledger_bytes)?;
    let transcript_path = root.join(&index.transcript);
    let transcript = if transcript_path.exists() {
        let bytes = fs::read(&transcript_path).map_err(|e| io_err(&transcript_path, e))?;
        Some(parse_fixture(&bytes).map_err(|e| corrupt(&transcript_path, e))?)
    } else {
        None
    };
    let project = Project {
        id: index.id,
        session: index.session,
        story,
        asrs: asrs.asrs,
        models,
        trace_links: index.trace_links,
        scenarios: scenarios.scenarios,
        reports,
    };
    Ok(PersistedProject { project, ledger, transcript })
}

/// Reads every log, merged in seq order. Model events get their script from the `.puml` file.
pub fn read_logs(root: &Path) -> Result<Vec<LogEntry>, SessionError> {
    let mut entries = Vec::new();
    for log in LOGS {
        let path = root.join(log);
        if !path.exists() {
            continue;
        }
        for (i, line) in read_text(&path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut entry: LogEntry =
                decode_document(line).map_err(|e| corrupt(&path, format!("line {}: {e}", i + 1)))?;
            if let ProjectEvent::ModelSynthesized { rev, diagram_kind, script, .. } = &mut entry.event {
                let m = ModelRevision { rev: *rev, diagram_kind: *diagram_kind, script: String::new() };
                *script = read_text(&root.join(m.path()))?;
            }
            entries.push(entry);
        }
    }
    // stable: equal seqs only occur for a record-less event and its successor, both in order
    entries.sort_by_key(|e| e.seq);
    Ok(entries)
}

/// Provenance with the store-assigned seq but without the timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencedEvent {
    pub seq: u64,
    pub event: ProvenanceEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rebuild {
    pub project: Project,
    pub provenance: Vec<SequencedEvent>,
    pub events: usize,
}

/// Replays the logs from an empty project.
pub fn rebuild_project(root: &Path) -> Result<Rebuild, SessionError> {
    let mut project = Project::empty();
    let mut provenance = Vec::new();
    let entries = read_logs(root)?;
    for entry in &entries {
        let expected = provenance.len() as u64 + 1;
        if entry.seq != expected {
            return Err(SessionError::RebuildMismatch(format!(
                "log entry with seq {} where {expected} was expected",
                entry.seq
            )));
        }
        for event in project.apply(&entry.event)? {
            provenance.push(SequencedEvent { seq: provenance.len() as u64 + 1, event });
        }
    }
    Ok(Rebuild { project, provenance, events: entries.len() })
}

/// Rebuilds from the logs and compares with the persisted state: the project must be equal
/// and the ledger must hold exactly the rebuilt provenance (timestamps aside).
pub fn verify_rebuild(root: &Path) -> Result<Rebuild, SessionError> {
    let persisted = read_project(root)?;
    let rebuilt = rebuild_project(root)?;
    if rebuilt.project != persisted.project {
        return Err(SessionError::RebuildMismatch(describe_difference(&rebuilt.project, &persisted.project)));
    }
    let ledger: Vec<SequencedEvent> = persisted
        .ledger
        .records()
        .into_iter()
        .map(|r| SequencedEvent {
            seq: r.seq,
            event: ProvenanceEvent { artifact_ref: r.artifact_ref, origin: r.origin, turn_ref: r.turn_ref },
        })
        .collect();
    if ledger != rebuilt.provenance {
        return Err(SessionError::RebuildMismatch(format!(
            "ledger holds {} records, replay produced {}",
            ledger.len(),
            rebuilt.provenance.len()
        )));
    }
    Ok(rebuilt)
}

fn describe_difference(a: &Project, b: &Project) -> String {
    let fields = [
        ("id", a.id != b.id),
        ("session", a.session != b.session),
        ("story", a.story != b.story),
        ("asrs", a.asrs != b.asrs),
        ("models", a.models != b.models),
        ("trace_links", a.trace_links != b.trace_links),
        ("scenarios", a.scenarios != b.scenarios),
        ("reports", a.reports != b.reports),
    ];
    let differing: Vec<&str> = fields.iter().filter(|(_, d)| *d).map(|(n, _)| *n).collect();
    format!("rebuilt project differs in {}", differing.join(", "))
}

/// Exclusive handle on a project directory.
pub struct ProjectStore {
    root: PathBuf,
    project: Project,
    ledger: Ledger,
    transcript: SessionTranscript,
    clock: Box<dyn Clock>,
    _lock: LockGuard,
}

impl std::fmt::Debug for ProjectStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectStore").field("root", &self.root).field("project", &self.project.id).finish()
    }
}

impl ProjectStore {
    /// Creates a project in `root`, which must be absent or empty.
    pub fn init(root: &Path, project_id: &str, clock: Box<dyn Clock>) -> Result<Self, SessionError> {
        if root.join(PROJECT_FILE).exists()
            || fs::read_dir(root).map(|mut d| d.next().is_some()).unwrap_or(false)
        {
            return Err(SessionError::AlreadyExists(root.display().to_string()));
        }
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let lock = LockGuard::acquire(root)?;
        let mut store = ProjectStore {
            root: root.to_path_buf(),
            project: Project::empty(),
            ledger: Ledger::new(),
            transcript: SessionTranscript::new(project_id, ""),
            clock,
            _lock: lock,
        };
        store.commit(ProjectEvent::Created { project_id: project_id.to_string() })?;
        Ok(store)
    }

    pub fn open(root: &Path, clock: Box<dyn Clock>) -> Result<Self, SessionError> {
        if !root.join(PROJECT_FILE).exists() {
            return Err(SessionError::NotAProject(root.display().to_string()));
        }
        let lock = LockGuard::acquire(root)?;
        let persisted = read_project(root)?;
        let transcript = persisted.transcript.unwrap_or_else(|| SessionTranscript::new(&persisted.project.id, ""));
        Ok(ProjectStore {
            root: root.to_path_buf(),
            project: persisted.project,
            ledger: persisted.ledger,
            transcript,
            clock,
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn transcript(&self) -> &SessionTranscript {
        &self.transcript
    }

    /// Applies `event`, appends its ledger records and log line, and rewrites the snapshots.
    pub fn commit(&mut self, event: ProjectEvent) -> Result<Vec<ProvenanceRecord>, SessionError> {
        let mut next = self.project.clone();
        let events = next.apply(&event)?;
        let mut ledger = self.ledger.clone();
        let first_seq = ledger.last_seq() + 1;
        let mut records = Vec::with_capacity(events.len());
        let mut ledger_text = String::new();
        for e in events {
            let record = ProvenanceRecord {
                seq: ledger.last_seq() + 1,
                artifact_ref: e.artifact_ref,
                origin: e.origin,
                turn_ref: e.turn_ref,
                timestamp: self.clock.now(),
            };
            let entry = ledger.append_provenance(record.clone())?;
            ledger_text.push_str(&Ledger::encode_entry(entry));
            ledger_text.push('\n');
            records.push(record);
        }

        // artifacts first, then the ledger and the log that make them part of the history
        if let ProjectEvent::ModelSynthesized { .. } = &event {
            let m = next.latest_model().expect("model just applied");
            write_atomic(&self.root.join(m.path()), m.script.as_bytes())?;
        }
        if let ProjectEvent::Evaluated { .. } = &event {
            let r = next.latest_report().expect("report just applied");
            let (json, md) = report_paths(r.rev);
            write_atomic(&self.root.join(json), encode_document(&r.report).as_bytes())?;
            let markdown = report_markdown(&r.report, &next.asrs, &next.scenarios);
            write_atomic(&self.root.join(md), markdown.as_bytes())?;
        }
        append(&self.root.join(LEDGER_FILE), &ledger_text)?;
        let log = self.root.join(log_for(&event));
        if let Some(dir) = log.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        append(&log, &(encode_line(&LogEntry { seq: first_seq, event }) + "\n"))?;
        self.write_snapshots(&next)?;
        self.project = next;
        self.ledger = ledger;
        Ok(records)
    }

    fn write_snapshots(&self, p: &Project) -> Result<(), SessionError> {
        let index = ProjectFile {
            id: p.id.clone(),
            session: p.session,
            story: p.story.as_ref().map(|_| STORY_FILE.to_string()),
            asrs: ASRS_FILE.into(),
            scenarios: SCENARIOS_FILE.into(),
            models: p
                .models
                .iter()
                .map(|m| ModelEntry { rev: m.rev, diagram_kind: m.diagram_kind, path: m.path() })
                .collect(),
            trace_links: p.trace_links.clone(),
            reports: p
                .reports
                .iter()
                .map(|r| {
                    let (json, markdown) = report_paths(r.rev);
                    ReportEntry { rev: r.rev, model_rev: r.model_rev, json, markdown }
                })
                .collect(),
            transcript: TRANSCRIPT_FILE.into(),
            ledger: LEDGER_FILE.into(),
        };
        if let Some(story) = &p.story {
            write_atomic(&self.root.join(STORY_FILE), story.to_markdown().as_bytes())?;
        }
        write_atomic(&self.root.join(ASRS_FILE), encode_document(&AsrList { asrs: p.asrs.clone() }).as_bytes())?;
        write_atomic(
            &self.root.join(SCENARIOS_FILE),
            encode_document(&ScenarioList { scenarios: p.scenarios.clone() }).as_bytes(),
        )?;
        write_atomic(&self.root.join(PROJECT_FILE), encode_document(&index).as_bytes())
    }

    fn save_transcript(&self) -> Result<(), SessionError> {
        write_atomic(&self.root.join(TRANSCRIPT_FILE), &record(&self.transcript))
    }

    /// Checks the gate of `target` and every hop on the way without changing anything.
    fn plan(&self, target: Phase) -> Result<Vec<Phase>, SessionError> {
        gate(target, &self.project.gate_facts()).map_err(SessionError::GateUnsatisfied)?;
        let from = self.project.session.state;
        let hops = route(from, target).ok_or(SessionError::IllegalTransition { from, to: target })?;
        let mut probe = self.project.clone();
        for to in &hops {
            probe.apply(&ProjectEvent::Transitioned { to: *to })?;
        }
        Ok(hops)
    }

    fn enter(&mut self, hops: Vec<Phase>) -> Result<(), SessionError> {
        for to in hops {
            self.commit(ProjectEvent::Transitioned { to })?;
        }
        Ok(())
    }

    /// Runs `f` against the project transcript and persists the transcript if turns were added,
    /// whether or not `f` succeeded.
    fn converse<T>(
        &mut self,
        backend: &mut dyn ChatBackend,
        prompts: &PromptRegistry,
        f: impl FnOnce(&mut Conversation<'_>, &Project) -> T,
    ) -> Result<T, SessionError> {
        if self.transcript.turns.is_empty() {
            self.transcript.backend_descriptor = backend.descriptor();
            self.transcript.prompt_registry_hash = Some(prompts.hash().to_string());
        }
        let before = self.transcript.turns.len();
        let out = {
            let mut conv = Conversation::new(&mut self.transcript, backend, prompts);
            f(&mut conv, &self.project)
        };
        if self.transcript.turns.len() != before {
            self.save_transcript()?;
        }
        Ok(out)
    }

    pub fn import_story(&mut self, story: ArchitectureStory) -> Result<Vec<ProvenanceRecord>, SessionError> {
        self.commit(ProjectEvent::StoryImported { story })
    }

    /// Feeds the story (once per transcript) and asks for requirements.
    pub fn analyze(&mut self, backend: &mut dyn ChatBackend, prompts: &PromptRegistry) -> Result<Vec<Asr>, SessionError> {
        let hops = self.plan(Phase::Analysis)?;
        let fed = self.transcript.turns.iter().any(|t| t.role == Role::Architect && t.activity == Activity::StoryFeed);
        let extraction = self.converse(backend, prompts, |conv, project| {
            let story = project.story.as_ref().expect("analysis gate requires a story");
            if !fed {
                feed_story(story, conv)?;
            }
            extract_asrs(story, &project.asrs, conv)
        })??;
        self.enter(hops)?;
        let asrs = extraction.asrs.clone();
        self.commit(ProjectEvent::AsrsProposed { asrs: extraction.asrs, turn_ref: extraction.turn_id })?;
        Ok(asrs)
    }

    /// Returns the requirement the refinement touched.
    pub fn refine(&mut self, op: RefinementOp) -> Result<Asr, SessionError> {
        let hops = self.plan(Phase::Analysis)?;
        let mut probe = self.project.clone();
        for to in &hops {
            probe.apply(&ProjectEvent::Transitioned { to: *to })?;
        }
        let events = probe.apply(&ProjectEvent::Refined { op: op.clone() })?;
        self.enter(hops)?;
        self.commit(ProjectEvent::Refined { op })?;
        let id = &events[0].artifact_ref.id;
        Ok(self.project.asrs.iter().find(|a| &a.id == id).cloned().expect("refined requirement exists"))
    }

    pub fn accept(&mut self, ids: Vec<String>) -> Result<Vec<Asr>, SessionError> {
        let hops = self.plan(Phase::Analysis)?;
        let mut probe = self.project.clone();
        for to in &hops {
            probe.apply(&ProjectEvent::Transitioned { to: *to })?;
        }
        probe.apply(&ProjectEvent::Accepted { ids: ids.clone() })?;
        self.enter(hops)?;
        self.commit(ProjectEvent::Accepted { ids: ids.clone() })?;
        Ok(self.project.asrs.iter().filter(|a| ids.contains(&a.id)).cloned().collect())
    }

    pub fn lint(&self, lexicon: &Lexicon) -> Vec<LintFinding> {
        lint_asrs(&self.project.asrs, lexicon)
    }

    pub fn synthesize(
        &mut self,
        kind: DiagramKind,
        backend: &mut dyn ChatBackend,
        prompts: &PromptRegistry,
    ) -> Result<ModelRevision, SessionError> {
        let hops = self.plan(Phase::Synthesis)?;
        let synthesis = self.converse(backend, prompts, |conv, project| synthesize_script(&project.asrs, kind, conv))??;
        self.enter(hops)?;
        let rev = self.project.models.len() as u32 + 1;
        self.commit(ProjectEvent::ModelSynthesized {
            rev,
            diagram_kind: kind,
            script: pretty_print(&synthesis.model),
            links: synthesis.trace.links,
            turn_ref: synthesis.turn_id,
        })?;
        Ok(self.project.latest_model().cloned().expect("model just committed"))
    }

    fn latest_model(&self) -> Result<&ModelRevision, SessionError> {
        self.project.latest_model().ok_or_else(|| SessionError::GateUnsatisfied("no model revision yet; run synthesize".into()))
    }

    pub fn check(
        &self,
        key: &AnnotationKey,
        element: &str,
        sensitive: &SensitiveFields,
    ) -> Result<CheckOutcome, SessionError> {
        Ok(check_tactic(&self.latest_model()?.graph(), element, key, sensitive)?)
    }

    pub fn trace(&self) -> Result<TraceabilityMatrix, SessionError> {
        let model = self.latest_model()?.graph();
        Ok(build_traceability(&self.project.asrs, &model, &self.project.trace_links)?)
    }

    pub fn elicit(
        &mut self,
        focus: Option<&str>,
        backend: &mut dyn ChatBackend,
        prompts: &PromptRegistry,
    ) -> Result<Vec<SaamScenario>, SessionError> {
        let hops = self.plan(Phase::Evaluation)?;
        let model = self.latest_model()?.clone();
        let graph = model.graph();
        if let Some(f) = focus {
            if !graph.contains(f) {
                return Err(crate::evaluation::EvaluationError::UnknownElement(f.to_string()).into());
            }
        }
        let elicitation = self.converse(backend, prompts, |conv, project| {
            let story = project.story.as_ref().expect("a model implies a story");
            elicit_scenarios(&project.asrs, story, &graph, &model.script, focus, &project.scenarios, conv)
        })??;
        self.enter(hops)?;
        let scenarios = elicitation.scenarios.clone();
        self.commit(ProjectEvent::ScenariosElicited {
            scenarios: elicitation.scenarios,
            focus: focus.map(str::to_string),
            turn_ref: elicitation.turn_id,
        })?;
        Ok(scenarios)
    }

    pub fn evaluate(&mut self, hotspot_threshold: usize) -> Result<ReportRevision, SessionError> {
        let hops = self.plan(Phase::Evaluation)?;
        let event = ProjectEvent::Evaluated { rev: self.project.reports.len() as u32 + 1, hotspot_threshold };
        let mut probe = self.project.clone();
        for to in &hops {
            probe.apply(&ProjectEvent::Transitioned { to: *to })?;
        }
        probe.apply(&event)?;
        self.enter(hops)?;
        self.commit(event)?;
        Ok(self.project.latest_report().cloned().expect("report just committed"))
    }

    /// Marks the session Reported and returns the latest report as markdown.
    pub fn report(&mut self) -> Result<String, SessionError> {
        let hops = self.plan(Phase::Reported)?;
        self.enter(hops)?;
        let r = self.project.latest_report().expect("reported gate requires a report");
        let (_, md) = report_paths(r.rev);
        read_text(&self.root.join(md))
    }

    /// A free-form architect turn; changes only the transcript.
    pub fn turn(
        &mut self,
        content: &str,
        backend: &mut dyn ChatBackend,
        prompts: &PromptRegistry,
    ) -> Result<Turn, SessionError> {
        Ok(self.converse(backend, prompts, |conv, _| conv.ask(content, Activity::Freeform))??)
    }
}
