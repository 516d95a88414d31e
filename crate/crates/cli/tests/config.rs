use std::collections::HashMap;
use std::path::PathBuf;

use archbot_cli::app::{App, BackendSpec};
use archbot_cli::config::*;

fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
    let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    move |k| map.get(k).cloned()
}

#[test]
fn defaults_without_file_or_env() {
    let c = Config::load_with(None, env(&[])).unwrap();
    assert_eq!(c, Config::default());
    assert_eq!(c.port, 8080);
    assert_eq!(c.backend, "replay:campusbike");
    assert!(c.api_key.is_none());
}

#[test]
fn environment_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("archbot.toml");
    std::fs::write(&path, "port = 9000\nbackend = \"live\"\nprojects_dir = \"/srv/p\"\n[live]\nbase_url = \"http://file\"\nmodel = \"m1\"\n").unwrap();
    let c = Config::load_with(
        None,
        env(&[
            (ENV_CONFIG, path.to_str().unwrap()),
            (ENV_PORT, "9100"),
            (ENV_PROJECTS_DIR, "/tmp/q"),
            ("ARCHBOT_BASE_URL", "http://env"),
            ("ARCHBOT_API_KEY", "k-123"),
        ]),
    )
    .unwrap();
    assert_eq!(c.port, 9100);
    assert_eq!(c.backend, "live");
    assert_eq!(c.projects_dir, PathBuf::from("/tmp/q"));
    let live = c.live_config().unwrap();
    assert_eq!((live.base_url.as_str(), live.model.as_str()), ("http://env", "m1"));
    assert_eq!(live.api_key.as_deref(), Some("k-123"));
    assert_eq!(live.timeout_secs, 120);
}

#[test]
fn explicit_path_wins_over_the_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    std::fs::write(&a, "port = 1111\n").unwrap();
    std::fs::write(&b, "port = 2222\n").unwrap();
    let c = Config::load_with(Some(&b), env(&[(ENV_CONFIG, a.to_str().unwrap())])).unwrap();
    assert_eq!(c.port, 2222);
}

#[test]
fn bad_config_is_a_config_error() {
    for text in ["port = \"x\"", "colour = \"blue\"", "api_key = \"secret\"", "[live]\napi_key = \"secret\""] {
        let e = Config::parse(text).unwrap_err();
        assert_eq!(e.code, "config_error", "{text}");
        assert!(!e.message.contains("secret"), "{text}: {}", e.message);
    }
    let e = Config::load_with(None, env(&[(ENV_PORT, "eighty")])).unwrap_err();
    assert_eq!(e.code, "config_error");
    let e = Config::load_with(Some(std::path::Path::new("/nonexistent/archbot.toml")), env(&[])).unwrap_err();
    assert_eq!(e.code, "config_error");
}

#[test]
fn live_backend_needs_url_and_model() {
    let c = Config::default();
    assert_eq!(c.live_config().unwrap_err().code, "config_error");
    let app = App::new(Config { backend: "live".into(), ..Config::default() }).unwrap();
    let e = app.backend(None, &archbot_core::gateway::SessionTranscript::new("s", "")).err().unwrap();
    assert_eq!(e.code, "config_error");
}

#[test]
fn backend_specs_parse_and_print() {
    assert_eq!("live".parse::<BackendSpec>().unwrap(), BackendSpec::Live);
    assert_eq!("replay:styles".parse::<BackendSpec>().unwrap(), BackendSpec::Replay("styles".into()));
    assert_eq!(BackendSpec::Replay("x".into()).to_string(), "replay:x");
    for bad in ["", "replay:", "carrier-pigeon"] {
        assert!(bad.parse::<BackendSpec>().is_err(), "{bad:?}");
    }
}

#[test]
fn fixtures_dir_shadows_built_in_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("campusbike.jsonl"), b"not a fixture").unwrap();
    let app = App::new(Config { fixtures_dir: Some(dir.path().into()), ..Config::default() }).unwrap();
    assert_eq!(app.fixture_bytes("campusbike").unwrap(), b"not a fixture");
    assert!(app.fixture_bytes("styles").unwrap().starts_with(b"{"));
    assert_eq!(app.fixture_bytes("ghost").unwrap_err().code, "not_found");
}
