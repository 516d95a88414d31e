mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use futures::StreamExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use archbot_cli::app::App;
use archbot_cli::config::Config;
use archbot_cli::http::{router, Service};
use common::*;

fn service(projects: &std::path::Path) -> Router {
    let config = Config { projects_dir: projects.to_path_buf(), ..Config::default() };
    router(Service::new(App::new(config).unwrap()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn ok(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let (status, v) = call(app, method, uri, body).await;
    assert!(status.is_success(), "{method} {uri}: {status} {v}");
    v
}

/// Every mutation of the walkthrough, as (method, path suffix, body).
fn walkthrough() -> Vec<(&'static str, String, Option<Value>)> {
    let mut steps = vec![
        ("POST", "/story".to_string(), Some(json!({ "markdown": story_markdown() }))),
        ("POST", "/analyze".to_string(), None),
    ];
    for op in refinements() {
        steps.push(("POST", "/refinements".into(), Some(serde_json::to_value(op).unwrap())));
    }
    let ids: Vec<&str> = ALL_ASRS.split(',').collect();
    steps.push(("POST", "/accept".into(), Some(json!({ "ids": ids }))));
    steps.push(("POST", "/synthesize".into(), Some(json!({ "diagram_kind": "class" }))));
    steps.push(("POST", "/scenarios".into(), Some(json!({ "focus": "ViewBikes" }))));
    steps.push(("POST", "/evaluate".into(), Some(json!({ "hotspot_threshold": 2 }))));
    steps.push(("POST", "/report".into(), None));
    steps
}

async fn run_walkthrough(app: &Router, id: &str) {
    ok(app, "POST", "/projects", Some(json!({ "id": id }))).await;
    for (method, suffix, body) in walkthrough() {
        ok(app, method, &format!("/projects/{id}{suffix}"), body).await;
    }
}

#[tokio::test]
async fn create_returns_201_and_fresh_ledger_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    let (status, v) = call(&app, "POST", "/projects", Some(json!({ "id": "campusbike" }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["project_id"], "campusbike");
    assert_eq!(ok(&app, "GET", "/projects/campusbike/ledger", None).await, json!([]));
    let (status, v) = call(&app, "POST", "/projects", Some(json!({ "id": "campusbike" }))).await;
    assert_eq!((status, v["code"].as_str()), (StatusCode::CONFLICT, Some("already_exists")));
}

#[tokio::test]
async fn refinement_with_quantified_criterion_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    ok(&app, "POST", "/projects/p/story", Some(json!({ "markdown": story_markdown() }))).await;
    ok(&app, "POST", "/projects/p/analyze", None).await;
    let op = json!({
        "op": "Update",
        "target": "ASR-002",
        "payload": { "criterion": { "metric": "ResponseTimeSeconds", "comparator": "LE", "value": 90.0 } }
    });
    let (status, v) = call(&app, "POST", "/projects/p/refinements", Some(op)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["asr"]["id"], "ASR-002");
    assert_eq!(v["asr"]["status"], "Refined");
    assert_eq!(v["asr"]["criterion"]["value"], 90.0);
    let asrs = ok(&app, "GET", "/projects/p/asrs", None).await;
    assert_eq!(asrs["asrs"].as_array().unwrap().iter().find(|a| a["id"] == "ASR-002").unwrap(), &v["asr"]);
}

#[tokio::test]
async fn evaluate_before_a_model_is_a_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    ok(&app, "POST", "/projects/p/story", Some(json!({ "markdown": story_markdown() }))).await;
    let (status, v) = call(&app, "POST", "/projects/p/evaluate", None).await;
    assert_eq!(status, StatusCode::CONFLICT, "{v}");
    assert!(["gate_unsatisfied", "illegal_transition"].contains(&v["code"].as_str().unwrap()), "{v}");
    // a refused request leaves the ledger as it was
    assert_eq!(ok(&app, "GET", "/projects/p/ledger", None).await.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn malformed_bodies_are_schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    for (uri, body) in [
        ("/projects", json!({ "id": "p", "extra": 1 })),
        ("/projects", json!({ "id": "../escape" })),
        ("/projects/p/story", json!({ "text": "# x" })),
        ("/projects/p/refinements", json!({ "op": "Rename" })),
        ("/projects/p/synthesize", json!({ "diagram_kind": "sequence" })),
        ("/projects/p/accept", json!({ "ids": "ASR-001" })),
        ("/projects/p/analyze", json!({ "backend": "carrier-pigeon" })),
    ] {
        let (status, v) = call(&app, "POST", uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri} {body}: {v}");
        assert_eq!(v["code"], "schema_violation", "{uri} {body}");
        assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
}

#[tokio::test]
async fn unknown_projects_and_routes_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    for uri in ["/projects/ghost", "/projects/ghost/ledger", "/projects/ghost/asrs", "/nowhere"] {
        let (status, v) = call(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}: {v}");
        assert_eq!(v["code"], "not_found", "{uri}");
    }
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    let (status, v) = call(&app, "GET", "/projects/p/models/7", None).await;
    assert_eq!((status, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")), "{v}");
}

#[tokio::test]
async fn walkthrough_over_http_reaches_reported() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    run_walkthrough(&app, "campusbike").await;
    let project = ok(&app, "GET", "/projects/campusbike", None).await;
    assert_eq!(project["session"]["state"], "Reported", "{project}");
    let check = ok(&app, "GET", "/projects/campusbike/checks/singleton/UserLogin", None).await;
    assert_eq!(check["passed"], true, "{check}");
    let report = ok(&app, "GET", "/projects/campusbike/report", None).await;
    assert!(report["markdown"].as_str().unwrap().contains("Reservation"));
    let ledger = ok(&app, "GET", "/projects/campusbike/ledger", None).await;
    let seqs: Vec<u64> = ledger.as_array().unwrap().iter().map(|r| r["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
    let tail = ok(&app, "GET", "/projects/campusbike/ledger?since=3", None).await;
    assert_eq!(tail.as_array().unwrap().len(), seqs.len() - 3);
}

/// Splits an SSE body into `(event, id, data)` frames.
fn frames(text: &str) -> Vec<(String, String, String)> {
    text.split("\n\n")
        .filter(|f| !f.trim().is_empty())
        .filter_map(|f| {
            let (mut event, mut id, mut data) = (String::new(), String::new(), String::new());
            for line in f.lines() {
                if let Some(v) = line.strip_prefix("event:") {
                    event = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("id:") {
                    id = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push_str(v.trim_start());
                }
            }
            (!event.is_empty()).then_some((event, id, data))
        })
        .collect()
}

async fn collect_events(body: Body, want: usize) -> Vec<(String, String, String)> {
    let mut stream = body.into_data_stream();
    let mut text = String::new();
    let read = async {
        while frames(&text).len() < want {
            match stream.next().await {
                Some(chunk) => text.push_str(std::str::from_utf8(&chunk.unwrap()).unwrap()),
                None => break,
            }
        }
    };
    tokio::time::timeout(Duration::from_secs(30), read).await.expect("event stream stalled");
    frames(&text)
}

async fn open_events(app: &Router, uri: &str) -> Body {
    let resp = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    resp.into_body()
}

#[tokio::test]
async fn event_stream_delivers_every_ledger_record_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    // subscribed before any record exists; everything arrives live
    let live = open_events(&app, "/projects/p/events").await;
    for (method, suffix, body) in walkthrough() {
        ok(&app, method, &format!("/projects/p{suffix}"), body).await;
    }
    let ledger = ok(&app, "GET", "/projects/p/ledger", None).await;
    let records = ledger.as_array().unwrap();
    assert!(records.len() > 10);
    let got = collect_events(live, records.len()).await;
    assert_eq!(got.len(), records.len());
    for ((event, id, data), record) in got.iter().zip(records) {
        assert_eq!(event, "ledger");
        assert_eq!(id, &record["seq"].to_string());
        assert_eq!(&serde_json::from_str::<Value>(data).unwrap(), record);
    }
    // a late subscriber asks for the backlog after seq 4
    let late = open_events(&app, "/projects/p/events?since=4").await;
    let got = collect_events(late, records.len() - 4).await;
    let ids: Vec<String> = got.iter().map(|f| f.1.clone()).collect();
    let expected: Vec<String> = records[4..].iter().map(|r| r["seq"].to_string()).collect();
    assert_eq!(ids, expected);
}

#[tokio::test]
async fn concurrent_mutations_are_serialized_and_all_published() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(dir.path());
    ok(&app, "POST", "/projects", Some(json!({ "id": "p" }))).await;
    ok(&app, "POST", "/projects/p/story", Some(json!({ "markdown": story_markdown() }))).await;
    ok(&app, "POST", "/projects/p/analyze", None).await;
    let events = open_events(&app, "/projects/p/events").await;
    let before = ok(&app, "GET", "/projects/p/ledger", None).await.as_array().unwrap().len();
    let mut tasks = Vec::new();
    for i in 0..8 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let op = json!({ "op": "Add", "payload": { "kind": "Functionality", "statement": format!("Bikers can rate ride {i}") } });
            call(&app, "POST", "/projects/p/refinements", Some(op)).await
        }));
    }
    for t in tasks {
        let (status, v) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK, "{v}");
    }
    let ledger = ok(&app, "GET", "/projects/p/ledger", None).await;
    let records = ledger.as_array().unwrap();
    assert_eq!(records.len(), before + 8);
    let got = collect_events(events, 8).await;
    let ids: Vec<String> = got.iter().map(|f| f.1.clone()).collect();
    let expected: Vec<String> = records[before..].iter().map(|r| r["seq"].to_string()).collect();
    assert_eq!(ids, expected);
    archbot_cli::app::verify_ledger_file(&dir.path().join("p")).unwrap();
}

#[tokio::test]
async fn http_and_cli_leave_identical_project_directories() {
    let dir = tempfile::tempdir().unwrap();
    let app = service(&dir.path().join("http"));
    run_walkthrough(&app, "campusbike").await;
    let cli_root = dir.path().join("cli").join("campusbike");
    std::fs::create_dir_all(&cli_root).unwrap();
    let root = cli_root.clone();
    tokio::task::spawn_blocking(move || run_campusbike(&root)).await.unwrap();
    let http_tree = masked_tree(&dir.path().join("http").join("campusbike"));
    let cli_tree = masked_tree(&cli_root);
    assert_eq!(http_tree.keys().collect::<Vec<_>>(), cli_tree.keys().collect::<Vec<_>>());
    for (path, text) in &http_tree {
        assert_eq!(text, &cli_tree[path], "{path} differs");
    }
    assert!(!http_tree.contains_key(".lock"));
}
