#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use archbot_core::analysis::{AsrPatch, RefinementOp};
use archbot_core::model::{AsrKind, Comparator, Metric, QuantifiedCriterion};
use archbot_core::session::{mask_ledger, LEDGER_FILE};
use serde_json::Value;

pub fn story_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/campusbike.md")
}

pub fn story_markdown() -> String {
    std::fs::read_to_string(story_path()).unwrap()
}

/// The three architect refinements of the CampusBike walkthrough.
pub fn refinements() -> Vec<RefinementOp> {
    vec![
        RefinementOp::update(
            "ASR-002",
            AsrPatch {
                statement: Some("Nearby available bikes are displayed within 90 seconds".into()),
                criterion: Some(QuantifiedCriterion::new(Metric::ResponseTimeSeconds, Comparator::LE, 90.0).unwrap()),
                ..AsrPatch::default()
            },
        ),
        RefinementOp::add(AsrPatch {
            kind: Some(AsrKind::Constraint),
            statement: Some(
                "Location and personal data follow data minimization: only fields a reservation needs are stored".into(),
            ),
            tags: Some(vec!["GDPR".into()]),
            ..AsrPatch::default()
        }),
        RefinementOp::update(
            "ASR-005",
            AsrPatch {
                criterion: Some(QuantifiedCriterion::new(Metric::Count, Comparator::LE, 1.0).unwrap()),
                ..AsrPatch::default()
            },
        ),
    ]
}

pub const ALL_ASRS: &str = "ASR-001,ASR-002,ASR-003,ASR-004,ASR-005,ASR-006,ASR-007";

/// Runs the `archbot` binary with a clean environment (no config, built-in fixtures).
pub fn archbot(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_archbot"));
    cmd.arg("-C").arg(dir).args(args);
    for (k, _) in std::env::vars_os() {
        if k.to_string_lossy().starts_with("ARCHBOT_") {
            cmd.env_remove(&k);
        }
    }
    cmd.output().unwrap()
}

/// Like [`archbot`] but requires success and parses stdout as JSON.
pub fn archbot_json(dir: &Path, args: &[&str]) -> Value {
    let out = archbot(dir, args);
    assert!(
        out.status.success(),
        "archbot {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("archbot {args:?}: {e}"))
}

/// Every command of the CampusBike walkthrough, as `archbot` arguments.
pub fn campusbike_commands() -> Vec<Vec<String>> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut cmds = vec![
        s(&["init", "--id", "campusbike"]),
        s(&["story", "import", story_path().to_str().unwrap()]),
        s(&["analyze"]),
    ];
    for op in refinements() {
        cmds.push(vec!["refine".into(), serde_json::to_string(&op).unwrap()]);
    }
    cmds.push(s(&["accept", ALL_ASRS]));
    cmds.push(s(&["synthesize", "class"]));
    cmds.push(s(&["scenarios", "--focus", "ViewBikes"]));
    cmds.push(s(&["evaluate", "--hotspot-threshold", "2"]));
    cmds.push(s(&["report", "--json"]));
    cmds
}

pub fn run_campusbike(dir: &Path) {
    for cmd in campusbike_commands() {
        let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        archbot_json(dir, &args);
    }
}

/// Relative path to contents for every file under `root`, with the ledger's timestamps and
/// digests blanked.
pub fn masked_tree(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            let bytes = std::fs::read(&path).unwrap();
            let text = if rel == LEDGER_FILE { mask_ledger(&bytes) } else { String::from_utf8_lossy(&bytes).into_owned() };
            out.insert(rel, text);
        }
    }
    out
}
