//! Command layer shared by the CLI and the HTTP service. Each method opens the project, runs one
//! engine operation through the store and returns the JSON payload both front ends emit.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use archbot_core::analysis::{Lexicon, RefinementOp};
use archbot_core::gateway::{
    builtin_fixture, parse_fixture, record, replay_transcript, turn_lines, variance_probe, ChatBackend, LiveBackend,
    PromptRegistry, ReplayBackend, SessionTranscript,
};
use archbot_core::model::{AnnotationKey, ArchitectureStory, AsrList, DiagramKind, ScenarioList};
use archbot_core::session::{
    provenance_summary, read_project, verify_rebuild, Clock, Ledger, PersistedProject, ProjectStore, SystemClock,
};
use archbot_core::synthesis::SensitiveFields;

use crate::config::Config;
use crate::error::ApiError;

/// Where an LLM-touching command gets its answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Live,
    Replay(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "live" => Ok(BackendSpec::Live),
            other => match other.strip_prefix("replay:") {
                Some(name) if !name.is_empty() => Ok(BackendSpec::Replay(name.to_string())),
                _ => Err(ApiError::usage(format!("backend must be `live` or `replay:<fixture>`, got {other:?}"))),
            },
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendSpec::Live => f.write_str("live"),
            BackendSpec::Replay(name) => write!(f, "replay:{name}"),
        }
    }
}

pub struct App {
    pub config: Config,
    pub prompts: PromptRegistry,
    clock: Box<dyn Fn() -> Box<dyn Clock> + Send + Sync>,
}

impl std::fmt::Debug for App {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("App").field("config", &self.config).finish()
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("artifacts serialize")
}

impl App {
    pub fn new(config: Config) -> Result<Self, ApiError> {
        let prompts = match &config.prompts_dir {
            Some(dir) => PromptRegistry::load_dir(dir)?,
            None => PromptRegistry::builtin(),
        };
        Ok(App { config, prompts, clock: Box::new(|| Box::new(SystemClock)) })
    }

    /// Replaces the wall clock used for ledger timestamps.
    pub fn with_clock(mut self, clock: impl Fn() -> Box<dyn Clock> + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn default_backend(&self) -> Result<BackendSpec, ApiError> {
        self.config.backend.parse()
    }

    fn resolve(&self, backend: Option<&BackendSpec>) -> Result<BackendSpec, ApiError> {
        match backend {
            Some(b) => Ok(b.clone()),
            None => self.default_backend(),
        }
    }

    /// Fixture bytes for `name`: `<fixtures_dir>/<name>.jsonl`, a path to a `.jsonl` file, or a
    /// fixture built into the binary.
    pub fn fixture_bytes(&self, name: &str) -> Result<Vec<u8>, ApiError> {
        if let Some(dir) = &self.config.fixtures_dir {
            let p = dir.join(format!("{name}.jsonl"));
            if p.is_file() {
                return std::fs::read(&p).map_err(|e| ApiError::new("io_error", format!("{}: {e}", p.display())));
            }
        }
        let p = PathBuf::from(name);
        if p.extension().is_some_and(|e| e == "jsonl") && p.is_file() {
            return std::fs::read(&p).map_err(|e| ApiError::new("io_error", format!("{}: {e}", p.display())));
        }
        builtin_fixture(name)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| ApiError::not_found(format!("no replay fixture named {name:?}")))
    }

    /// A backend positioned after the turns `transcript` already holds.
    pub fn backend(
        &self,
        spec: Option<&BackendSpec>,
        transcript: &SessionTranscript,
    ) -> Result<Box<dyn ChatBackend + Send>, ApiError> {
        match self.resolve(spec)? {
            BackendSpec::Live => Ok(Box::new(LiveBackend::new(self.config.live_config()?)?)),
            BackendSpec::Replay(name) => {
                let mut b = ReplayBackend::from_bytes(name.clone(), &self.fixture_bytes(&name)?)?;
                b.resume(transcript)?;
                Ok(Box::new(b))
            }
        }
    }

    fn open(&self, root: &Path) -> Result<ProjectStore, ApiError> {
        Ok(ProjectStore::open(root, (self.clock)())?)
    }

    fn mutation(store: &ProjectStore, mut body: Value) -> Value {
        body["seq"] = json!(store.ledger().last_seq());
        body
    }

    pub fn init(&self, root: &Path, project_id: &str) -> Result<Value, ApiError> {
        let store = ProjectStore::init(root, project_id, (self.clock)())?;
        Ok(Self::mutation(&store, json!({ "project_id": project_id, "state": store.project().session })))
    }

    pub fn import_story(&self, root: &Path, markdown: &str) -> Result<Value, ApiError> {
        let story = ArchitectureStory::from_markdown(markdown)
            .map_err(|e| ApiError::new("invalid_story", e.to_string()))?;
        let mut store = self.open(root)?;
        store.import_story(story.clone())?;
        Ok(Self::mutation(&store, json!({ "story": story })))
    }

    pub fn analyze(&self, root: &Path, backend: Option<&BackendSpec>) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let mut b = self.backend(backend, store.transcript())?;
        let asrs = store.analyze(&mut *b, &self.prompts)?;
        Ok(Self::mutation(&store, json!({ "asrs": asrs })))
    }

    pub fn refine(&self, root: &Path, op: RefinementOp) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let asr = store.refine(op)?;
        Ok(Self::mutation(&store, json!({ "asr": asr })))
    }

    pub fn accept(&self, root: &Path, ids: Vec<String>) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let asrs = store.accept(ids)?;
        Ok(Self::mutation(&store, json!({ "asrs": asrs })))
    }

    pub fn lint(&self, root: &Path, lexicon: &Lexicon) -> Result<Value, ApiError> {
        let p = read(root)?;
        let findings = archbot_core::analysis::lint_asrs(&p.project.asrs, lexicon);
        Ok(json!({ "findings": findings }))
    }

    pub fn synthesize(&self, root: &Path, kind: DiagramKind, backend: Option<&BackendSpec>) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let mut b = self.backend(backend, store.transcript())?;
        let m = store.synthesize(kind, &mut *b, &self.prompts)?;
        let links = store.project().trace_links.clone();
        Ok(Self::mutation(
            &store,
            json!({ "rev": m.rev, "model_id": m.id(), "diagram_kind": m.diagram_kind, "script": m.script, "trace_links": links }),
        ))
    }

    pub fn model(&self, root: &Path, rev: u32) -> Result<Value, ApiError> {
        let p = read(root)?;
        let m = p.project.model(rev).ok_or_else(|| ApiError::not_found(format!("no model revision {rev}")))?;
        Ok(json!({ "rev": m.rev, "model_id": m.id(), "diagram_kind": m.diagram_kind, "script": m.script, "graph": m.graph() }))
    }

    pub fn check(&self, root: &Path, key: &AnnotationKey, element: &str, sensitive: &SensitiveFields) -> Result<Value, ApiError> {
        let p = read(root)?;
        let m = p.project.latest_model().ok_or_else(|| {
            ApiError::new("gate_unsatisfied", "no model revision yet; run synthesize")
        })?;
        let outcome = archbot_core::synthesis::check_tactic(&m.graph(), element, key, sensitive)?;
        Ok(json!({ "model_id": m.id(), "tactic": key.stereotype(), "element": element, "passed": outcome.passed(), "outcome": outcome }))
    }

    pub fn trace(&self, root: &Path) -> Result<Value, ApiError> {
        let p = read(root)?;
        let m = p.project.latest_model().ok_or_else(|| {
            ApiError::new("gate_unsatisfied", "no model revision yet; run synthesize")
        })?;
        let matrix = archbot_core::synthesis::build_traceability(&p.project.asrs, &m.graph(), &p.project.trace_links)?;
        Ok(json!({ "model_id": m.id(), "matrix": matrix, "markdown": matrix.to_markdown() }))
    }

    pub fn scenarios(&self, root: &Path, focus: Option<&str>, backend: Option<&BackendSpec>) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let mut b = self.backend(backend, store.transcript())?;
        let scenarios = store.elicit(focus, &mut *b, &self.prompts)?;
        Ok(Self::mutation(&store, json!({ "scenarios": scenarios })))
    }

    pub fn evaluate(&self, root: &Path, hotspot_threshold: usize) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let r = store.evaluate(hotspot_threshold)?;
        Ok(Self::mutation(&store, json!({ "rev": r.rev, "model_rev": r.model_rev, "report": r.report })))
    }

    /// Marks the project Reported and returns the latest report.
    pub fn report(&self, root: &Path) -> Result<Value, ApiError> {
        let mut store = self.open(root)?;
        let markdown = store.report()?;
        let r = store.project().latest_report().expect("Reported implies a report");
        Ok(Self::mutation(&store, json!({ "rev": r.rev, "report": r.report, "markdown": markdown })))
    }

    /// Latest report without a state change.
    pub fn latest_report(&self, root: &Path) -> Result<Value, ApiError> {
        let p = read(root)?;
        let r = p.project.latest_report().ok_or_else(|| ApiError::not_found("no evaluation report yet"))?;
        let markdown = archbot_core::evaluation::report_markdown(&r.report, &p.project.asrs, &p.project.scenarios);
        Ok(json!({ "rev": r.rev, "model_rev": r.model_rev, "report": r.report, "markdown": markdown }))
    }

    pub fn turn(&self, root: &Path, content: &str, backend: Option<&BackendSpec>) -> Result<Value, ApiError> {
        if content.trim().is_empty() {
            return Err(ApiError::schema("turn content must not be empty"));
        }
        let mut store = self.open(root)?;
        let mut b = self.backend(backend, store.transcript())?;
        let turn = store.turn(content, &mut *b, &self.prompts)?;
        Ok(Self::mutation(&store, json!({ "turn": turn })))
    }

    pub fn project(&self, root: &Path) -> Result<Value, ApiError> {
        let p = read(root)?;
        let pr = &p.project;
        Ok(json!({
            "project_id": pr.id,
            "session": pr.session,
            "story": pr.story,
            "asrs": pr.asrs.len(),
            "models": pr.models.iter().map(|m| m.id()).collect::<Vec<_>>(),
            "scenarios": pr.scenarios.len(),
            "reports": pr.reports.iter().map(|r| r.id()).collect::<Vec<_>>(),
            "seq": p.ledger.last_seq(),
        }))
    }

    pub fn asrs(&self, root: &Path) -> Result<Value, ApiError> {
        Ok(to_value(&AsrList { asrs: read(root)?.project.asrs }))
    }

    pub fn scenario_list(&self, root: &Path) -> Result<Value, ApiError> {
        Ok(to_value(&ScenarioList { scenarios: read(root)?.project.scenarios }))
    }

    /// Ledger records after `since` (all of them by default).
    pub fn ledger(&self, root: &Path, since: u64) -> Result<Value, ApiError> {
        let p = read(root)?;
        let records: Vec<_> = p.ledger.records().into_iter().filter(|r| r.seq > since).collect();
        Ok(json!({ "records": records, "head_digest": p.ledger.head_digest() }))
    }

    pub fn provenance(&self, root: &Path) -> Result<Value, ApiError> {
        Ok(to_value(&provenance_summary(&read(root)?.ledger.records())))
    }

    /// Rebuilds the project from its logs and compares with the persisted state.
    pub fn rebuild(&self, root: &Path) -> Result<Value, ApiError> {
        let r = verify_rebuild(root)?;
        Ok(json!({ "events": r.events, "records": r.provenance.len(), "equal": true }))
    }

    /// Re-drives a fixture's architect inputs through a replay of itself and compares the
    /// reproduced turns with the recording byte for byte.
    pub fn replay(&self, fixture: &str) -> Result<Value, ApiError> {
        let bytes = self.fixture_bytes(fixture)?;
        let recording = parse_fixture(&bytes)?;
        let name = Path::new(fixture).file_stem().and_then(|s| s.to_str()).unwrap_or(fixture);
        let replayed = replay_transcript(name, &bytes, &self.prompts)?;
        let identical = turn_lines(&record(&replayed)) == turn_lines(&record(&recording));
        Ok(json!({
            "fixture": fixture,
            "turns": replayed.turns.len(),
            "identical": identical,
            "prompt_registry_hash": recording.prompt_registry_hash,
        }))
    }

    pub fn probe(&self, prompt: &str, n: usize, backend: Option<&BackendSpec>) -> Result<Value, ApiError> {
        let mut b = self.backend(backend, &SessionTranscript::new("probe", ""))?;
        let report = variance_probe(prompt, n, &mut *b)?;
        Ok(to_value(&report))
    }
}

pub fn read(root: &Path) -> Result<PersistedProject, ApiError> {
    Ok(read_project(root)?)
}

pub fn verify_ledger_file(root: &Path) -> Result<Ledger, ApiError> {
    let path = root.join(archbot_core::session::LEDGER_FILE);
    let bytes = std::fs::read(&path).map_err(|e| ApiError::new("io_error", format!("{}: {e}", path.display())))?;
    Ok(Ledger::verify(&bytes)?)
}
