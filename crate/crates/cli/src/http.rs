//! HTTP service for the architect console. Mutations on one project are serialized; every
//! ledger record they append is pushed, in seq order, to the subscribers of
//! `GET /projects/{id}/events`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use tokio::sync::broadcast;

use archbot_core::analysis::{Lexicon, RefinementOp};
use archbot_core::model::{AnnotationKey, DiagramKind, ProvenanceRecord};
use archbot_core::synthesis::SensitiveFields;

use crate::app::{read, App, BackendSpec};
use crate::error::ApiError;

const EVENT_BUFFER: usize = 1024;

struct Slot {
    writer: tokio::sync::Mutex<()>,
    events: broadcast::Sender<ProvenanceRecord>,
}

pub struct Service {
    app: App,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

type Shared = Arc<Service>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn valid_id(id: &str) -> Result<(), ApiError> {
    let ok = !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ApiError::schema(format!("project id {id:?} must be 1-64 characters of [A-Za-z0-9_-]")))
    }
}

/// Parses a request body; an empty body reads as `{}`.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let text = if bytes.iter().all(u8::is_ascii_whitespace) { &b"{}"[..] } else { &bytes[..] };
    serde_json::from_slice(text).map_err(|e| ApiError::schema(e.to_string()))
}

fn backend(spec: &Option<String>) -> Result<Option<BackendSpec>, ApiError> {
    spec.as_deref().map(str::parse).transpose().map_err(|e: ApiError| ApiError::schema(e.message))
}

impl Service {
    pub fn new(app: App) -> Shared {
        Arc::new(Service { app, slots: Mutex::new(HashMap::new()) })
    }

    fn root(&self, id: &str) -> PathBuf {
        self.app.config.projects_dir.join(id)
    }

    fn slot(&self, id: &str) -> Arc<Slot> {
        let mut slots = self.slots.lock().expect("slot table poisoned");
        slots
            .entry(id.to_string())
            .or_insert_with(|| {
                let (events, _) = broadcast::channel(EVENT_BUFFER);
                Arc::new(Slot { writer: tokio::sync::Mutex::new(()), events })
            })
            .clone()
    }

    fn head(&self, id: &str) -> u64 {
        crate::app::verify_ledger_file(&self.root(id)).map(|l| l.last_seq()).unwrap_or(0)
    }

    /// Runs `op` as the project's only writer and publishes the ledger records it appended.
    async fn mutate<F>(self: &Arc<Self>, id: String, op: F) -> Result<Value, ApiError>
    where
        F: FnOnce(&App, &std::path::Path) -> Result<Value, ApiError> + Send + 'static,
    {
        valid_id(&id)?;
        let slot = self.slot(&id);
        let _writer = slot.writer.lock().await;
        let this = self.clone();
        let id2 = id.clone();
        let (result, before) = tokio::task::spawn_blocking(move || {
            let before = this.head(&id2);
            (op(&this.app, &this.root(&id2)), before)
        })
        .await
        .map_err(|e| ApiError::new("internal", e.to_string()))?;
        let root = self.root(&id);
        let appended = tokio::task::spawn_blocking(move || {
            read(&root).map(|p| p.ledger.records().into_iter().filter(|r| r.seq > before).collect::<Vec<_>>())
        })
        .await
        .map_err(|e| ApiError::new("internal", e.to_string()))?;
        if let Ok(records) = appended {
            for r in records {
                // no subscribers is not an error
                let _ = slot.events.send(r);
            }
        }
        result
    }

    async fn query<F>(self: &Arc<Self>, id: String, op: F) -> Result<Value, ApiError>
    where
        F: FnOnce(&App, &std::path::Path) -> Result<Value, ApiError> + Send + 'static,
    {
        valid_id(&id)?;
        let this = self.clone();
        tokio::task::spawn_blocking(move || op(&this.app, &this.root(&id)))
            .await
            .map_err(|e| ApiError::new("internal", e.to_string()))?
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StoryRequest {
    markdown: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnRequest {
    content: String,
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeRequest {
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptRequest {
    ids: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthesizeRequest {
    diagram_kind: String,
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenariosRequest {
    #[serde(default)]
    focus: Option<String>,
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    #[serde(default = "default_threshold")]
    hotspot_threshold: usize,
}

fn default_threshold() -> usize {
    archbot_core::evaluation::DEFAULT_HOTSPOT_THRESHOLD
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckQuery {
    #[serde(default)]
    sensitive: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SinceQuery {
    #[serde(default)]
    since: Option<u64>,
}

type ApiResult = Result<Json<Value>, ApiError>;

async fn create_project(State(s): State<Shared>, bytes: Bytes) -> Result<(StatusCode, Json<Value>), ApiError> {
    let req: CreateProject = body(&bytes)?;
    let id = req.id.clone();
    let v = s.mutate(id.clone(), move |app, root| app.init(root, &id)).await?;
    Ok((StatusCode::CREATED, Json(v)))
}

async fn get_project(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.project(root)).await.map(Json)
}

async fn post_story(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: StoryRequest = body(&bytes)?;
    s.mutate(id, move |app, root| app.import_story(root, &req.markdown)).await.map(Json)
}

async fn post_turn(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: TurnRequest = body(&bytes)?;
    let b = backend(&req.backend)?;
    s.mutate(id, move |app, root| app.turn(root, &req.content, b.as_ref())).await.map(Json)
}

async fn post_analyze(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: AnalyzeRequest = body(&bytes)?;
    let b = backend(&req.backend)?;
    s.mutate(id, move |app, root| app.analyze(root, b.as_ref())).await.map(Json)
}

async fn get_asrs(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.asrs(root)).await.map(Json)
}

async fn get_lint(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.lint(root, &Lexicon::default())).await.map(Json)
}

async fn post_refinement(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let op: RefinementOp = body(&bytes)?;
    s.mutate(id, move |app, root| app.refine(root, op)).await.map(Json)
}

async fn post_accept(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: AcceptRequest = body(&bytes)?;
    s.mutate(id, move |app, root| app.accept(root, req.ids)).await.map(Json)
}

async fn post_synthesize(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: SynthesizeRequest = body(&bytes)?;
    let kind = DiagramKind::from_short_name(&req.diagram_kind)
        .ok_or_else(|| ApiError::schema(format!("diagram_kind must be class or component, got {:?}", req.diagram_kind)))?;
    let b = backend(&req.backend)?;
    s.mutate(id, move |app, root| app.synthesize(root, kind, b.as_ref())).await.map(Json)
}

async fn get_model(State(s): State<Shared>, Path((id, rev)): Path<(String, String)>) -> ApiResult {
    let rev: u32 = rev.parse().map_err(|_| ApiError::not_found(format!("no model revision {rev:?}")))?;
    s.query(id, move |app, root| app.model(root, rev)).await.map(Json)
}

async fn get_trace(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.trace(root)).await.map(Json)
}

async fn get_check(
    State(s): State<Shared>,
    Path((id, pattern, element)): Path<(String, String, String)>,
    Query(q): Query<CheckQuery>,
) -> ApiResult {
    let sensitive = match q.sensitive {
        Some(list) => SensitiveFields::new(list.split(',').map(str::trim).filter(|t| !t.is_empty())),
        None => SensitiveFields::default(),
    };
    let key = AnnotationKey::from_stereotype(&pattern);
    s.query(id, move |app, root| app.check(root, &key, &element, &sensitive)).await.map(Json)
}

async fn post_scenarios(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: ScenariosRequest = body(&bytes)?;
    let b = backend(&req.backend)?;
    s.mutate(id, move |app, root| app.scenarios(root, req.focus.as_deref(), b.as_ref())).await.map(Json)
}

async fn get_scenarios(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.scenario_list(root)).await.map(Json)
}

async fn post_evaluate(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: EvaluateRequest = body(&bytes)?;
    s.mutate(id, move |app, root| app.evaluate(root, req.hotspot_threshold)).await.map(Json)
}

async fn get_report(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.latest_report(root)).await.map(Json)
}

async fn post_report(State(s): State<Shared>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let _: AnalyzeRequest = body(&bytes)?;
    s.mutate(id, |app, root| app.report(root)).await.map(Json)
}

async fn get_ledger(State(s): State<Shared>, Path(id): Path<String>, Query(q): Query<SinceQuery>) -> Result<Json<Value>, ApiError> {
    let since = q.since.unwrap_or(0);
    let v = s.query(id, move |app, root| app.ledger(root, since)).await?;
    Ok(Json(v["records"].clone()))
}

async fn get_provenance(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult {
    s.query(id, |app, root| app.provenance(root)).await.map(Json)
}

fn ledger_event(r: &ProvenanceRecord) -> Event {
    Event::default()
        .event("ledger")
        .id(r.seq.to_string())
        .data(serde_json::to_string(r).expect("records serialize"))
}

/// Records with seq above `since` (default: the current head), then every record appended later.
async fn get_events(
    State(s): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<SinceQuery>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    valid_id(&id)?;
    let slot = s.slot(&id);
    // subscribe before reading the backlog so nothing falls between the two
    let rx = slot.events.subscribe();
    let root = s.root(&id);
    let persisted = tokio::task::spawn_blocking(move || read(&root))
        .await
        .map_err(|e| ApiError::new("internal", e.to_string()))??;
    let since = q.since.unwrap_or_else(|| persisted.ledger.last_seq());
    let backlog: Vec<ProvenanceRecord> = persisted.ledger.records().into_iter().filter(|r| r.seq > since).collect();
    let last = backlog.last().map_or(since, |r| r.seq);
    let live = stream::unfold((rx, last), |(mut rx, mut last)| async move {
        loop {
            match rx.recv().await {
                Ok(r) if r.seq <= last => continue,
                Ok(r) => {
                    last = r.seq;
                    return Some((Ok(ledger_event(&r)), (rx, last)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    let e = Event::default().event("lagged").data(last.to_string());
                    return Some((Ok(e), (rx, last)));
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let stream = stream::iter(backlog.iter().map(|r| Ok(ledger_event(r))).collect::<Vec<_>>()).chain(live);
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/story", post(post_story))
        .route("/projects/{id}/turns", post(post_turn))
        .route("/projects/{id}/analyze", post(post_analyze))
        .route("/projects/{id}/asrs", get(get_asrs))
        .route("/projects/{id}/lint", get(get_lint))
        .route("/projects/{id}/refinements", post(post_refinement))
        .route("/projects/{id}/accept", post(post_accept))
        .route("/projects/{id}/synthesize", post(post_synthesize))
        .route("/projects/{id}/models/{rev}", get(get_model))
        .route("/projects/{id}/trace", get(get_trace))
        .route("/projects/{id}/checks/{pattern}/{element}", get(get_check))
        .route("/projects/{id}/scenarios", post(post_scenarios).get(get_scenarios))
        .route("/projects/{id}/evaluate", post(post_evaluate))
        .route("/projects/{id}/report", get(get_report).post(post_report))
        .route("/projects/{id}/ledger", get(get_ledger))
        .route("/projects/{id}/provenance", get(get_provenance))
        .route("/projects/{id}/events", get(get_events))
        .fallback(not_found)
        .with_state(service)
}

pub async fn serve(app: App, port: u16) -> std::io::Result<()> {
    std::fs::create_dir_all(&app.config.projects_dir)?;
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("archbot listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Service::new(app))).await
}
