use proptest::prelude::*;

use super::*;
use crate::gateway::{PromptRegistry, RequestPurpose, ScriptedBackend, SessionTranscript};
use crate::model::{Comparator, Metric, ScenarioSketch};

const RESERVE_BIKE: &str =
    "The system must allow user to view bikes available nearby and enable reservation of the bike instantly and securely";

fn story() -> ArchitectureStory {
    ArchitectureStory {
        id: "campusbike".into(),
        narrative: "Potential bikers can register and view available bikes in their proximity (within 500 meters) \
                    and reserve them for a specific time after payment."
            .into(),
        scenarios: vec![
            ScenarioSketch { title: "View bikes".into(), description: "View available bikes (using location proximity)".into() },
            ScenarioSketch { title: "Reserve".into(), description: "reserve a bike for a specific time (pay-and-reserve)".into() },
        ],
        domain_tags: vec![],
    }
}

fn bot_reply() -> String {
    format!(
        "Here are the ASRs.\n```asr\nFUNCTIONALITY | Users must be able to register |\nQUALITY | {RESERVE_BIKE} |\n\
         FUNCTIONALITY | Users can view available bikes in their proximity | distance_meters <= 500\n\
         CONSTRAINT | The system must comply with relevant data security policies\n```\n"
    )
}

fn run_extract(replies: &[&str], existing: &[Asr]) -> (Result<Extraction, AnalysisError>, ScriptedBackend, SessionTranscript) {
    let mut backend = ScriptedBackend::new("t", replies.iter().copied());
    let mut transcript = SessionTranscript::new("s", "scripted:t");
    let prompts = PromptRegistry::builtin();
    let result = {
        let mut conv = Conversation::new(&mut transcript, &mut backend, &prompts);
        extract_asrs(&story(), existing, &mut conv)
    };
    (result, backend, transcript)
}

fn asr(id: &str, kind: AsrKind, statement: &str, status: AsrStatus) -> Asr {
    Asr { id: id.into(), kind, statement: statement.into(), criterion: None, tags: vec![], status }
}

fn ninety_seconds() -> QuantifiedCriterion {
    QuantifiedCriterion::new(Metric::ResponseTimeSeconds, Comparator::LE, 90.0).unwrap()
}

#[test]
fn extracts_reserve_bike_requirement() {
    let reply = bot_reply();
    let (result, backend, transcript) = run_extract(&[&reply], &[]);
    let ex = result.unwrap();
    assert_eq!(ex.asrs.len(), 4);
    assert!(ex.asrs.iter().any(|a| a.statement.contains(
        "view bikes available nearby and enable reservation of the bike instantly and securely"
    )));
    assert!(ex.asrs.iter().all(|a| a.status == AsrStatus::Proposed));
    assert_eq!(ex.asrs.iter().map(|a| a.id.as_str()).collect::<Vec<_>>(), ["ASR-001", "ASR-002", "ASR-003", "ASR-004"]);
    assert_eq!(ex.asrs[2].criterion, Some(QuantifiedCriterion::new(Metric::DistanceMeters, Comparator::LE, 500.0).unwrap()));
    assert_eq!(ex.events.len(), 4);
    assert!(ex.events.iter().all(|e| e.origin == Origin::Bot && e.turn_ref == Some(ex.turn_id)));
    assert_eq!(ex.turn_id, 2);
    // the story travels in the analysis prompt
    assert!(backend.requests[0].last_content().contains("within 500 meters"));
    assert_eq!(transcript.turns[0].activity, Activity::Analysis);
}

#[test]
fn ids_continue_after_existing() {
    let reply = bot_reply();
    let existing = [asr("ASR-001", AsrKind::Quality, "x", AsrStatus::Rejected)];
    let ex = run_extract(&[&reply], &existing).0.unwrap();
    assert_eq!(ex.asrs[0].id, "ASR-002");
}

#[test]
fn invalid_story_is_rejected_before_prompting() {
    let mut backend = ScriptedBackend::new("t", ["unused"]);
    let mut transcript = SessionTranscript::new("s", "scripted:t");
    let prompts = PromptRegistry::builtin();
    let mut conv = Conversation::new(&mut transcript, &mut backend, &prompts);
    let mut s = story();
    s.narrative.clear();
    assert!(matches!(extract_asrs(&s, &[], &mut conv), Err(AnalysisError::InvalidStory(_))));
    assert!(backend.requests.is_empty());
}

#[test]
fn malformed_twice_is_unparseable() {
    let (result, backend, _) = run_extract(&["no block here", "```asr\nMAYBE | something\n```"], &[]);
    assert!(matches!(result, Err(AnalysisError::UnparseableResponse(_))));
    assert_eq!(backend.requests.len(), 2);
    assert!(backend.requests[1].last_content().contains("no ```asr fenced block found"));
}

#[test]
fn one_reask_recovers() {
    let reply = bot_reply();
    let (result, _, transcript) = run_extract(&["Sorry, here they are in prose.", &reply], &[]);
    let ex = result.unwrap();
    assert_eq!(ex.turn_id, 4);
    assert_eq!(transcript.turns.len(), 4);
}

#[test]
fn backend_failure_propagates() {
    let mut backend = ScriptedBackend::default();
    backend.push_error(GatewayError::BackendUnavailable("down".into()));
    let mut transcript = SessionTranscript::new("s", "scripted:t");
    let prompts = PromptRegistry::builtin();
    let mut conv = Conversation::new(&mut transcript, &mut backend, &prompts);
    assert!(matches!(
        extract_asrs(&story(), &[], &mut conv),
        Err(AnalysisError::Gateway(GatewayError::BackendUnavailable(_)))
    ));
    assert_eq!(backend.requests[0].purpose, RequestPurpose::Turn);
}

#[test]
fn parse_contract_edge_cases() {
    assert!(parse_asr_response("```asr\n```").is_err());
    assert!(parse_asr_response("```asr\nQUALITY |  |\n```").is_err());
    assert!(parse_asr_response("```asr\nQUALITY | fast | latency < 3\n```").is_err());
    assert!(parse_asr_response("```asr\nQUALITY | a | b | c\n```").is_err());
    let ok = parse_asr_response("```asr\nconstraint | GDPR\n```").unwrap();
    assert_eq!(ok[0].kind, AsrKind::Constraint);
}

fn campus_asrs() -> Vec<Asr> {
    vec![
        asr("ASR-001", AsrKind::Functionality, "Users must be able to register", AsrStatus::Proposed),
        asr("ASR-002", AsrKind::Quality, RESERVE_BIKE, AsrStatus::Proposed),
        asr("ASR-003", AsrKind::Constraint, "Comply with data security policies", AsrStatus::Proposed),
    ]
}

#[test]
fn update_sets_ninety_second_criterion() {
    let op = RefinementOp::update("ASR-002", AsrPatch { criterion: Some(ninety_seconds()), ..Default::default() });
    let (out, event) = apply_refinement(&campus_asrs(), &op, Origin::Architect).unwrap();
    assert_eq!(out[1].criterion, Some(ninety_seconds()));
    assert_eq!(out[1].status, AsrStatus::Refined);
    assert_eq!(out[1].statement, RESERVE_BIKE);
    assert_eq!(event.artifact_ref, ArtifactRef::new(ArtifactKind::Asr, "ASR-002").with_field("criterion"));
    assert_eq!(event.origin, Origin::Architect);
}

#[test]
fn add_data_minimization_constraint() {
    let op = RefinementOp::add(AsrPatch {
        kind: Some(AsrKind::Constraint),
        statement: Some("apply data minimization on registration data".into()),
        tags: Some(vec!["GDPR".into()]),
        ..Default::default()
    });
    let (out, event) = apply_refinement(&campus_asrs(), &op, Origin::Architect).unwrap();
    let added = out.last().unwrap();
    assert_eq!(added.id, "ASR-004");
    assert_eq!(added.kind, AsrKind::Constraint);
    assert_eq!(added.tags, ["GDPR"]);
    assert_eq!(added.status, AsrStatus::Refined);
    assert_eq!(event.artifact_ref.id, "ASR-004");
}

#[test]
fn remove_unknown_asr() {
    let op = RefinementOp::remove("ASR-999");
    assert_eq!(apply_refinement(&campus_asrs(), &op, Origin::Architect), Err(AnalysisError::UnknownAsr("ASR-999".into())));
}

#[test]
fn remove_is_a_tombstone() {
    let (out, _) = apply_refinement(&campus_asrs(), &RefinementOp::remove("ASR-003"), Origin::Architect).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(out[2].status, AsrStatus::Rejected);
    let add = RefinementOp::add(AsrPatch { kind: Some(AsrKind::Quality), statement: Some("s".into()), ..Default::default() });
    // the tombstoned id is never handed out again
    let (out, _) = apply_refinement(&out, &add, Origin::Architect).unwrap();
    assert_eq!(out[3].id, "ASR-004");
    let upd = RefinementOp::update("ASR-003", AsrPatch { statement: Some("back".into()), ..Default::default() });
    assert!(matches!(apply_refinement(&out, &upd, Origin::Architect), Err(AnalysisError::InvalidPayload(_))));
}

#[test]
fn malformed_ops_rejected() {
    let asrs = campus_asrs();
    let add_with_target = RefinementOp { op: OpKind::Add, target: Some("ASR-001".into()), payload: AsrPatch::default() };
    let update_without_target = RefinementOp { op: OpKind::Update, target: None, payload: AsrPatch::default() };
    let empty_update = RefinementOp::update("ASR-001", AsrPatch::default());
    let add_without_kind = RefinementOp::add(AsrPatch { statement: Some("x".into()), ..Default::default() });
    let negative = RefinementOp::update(
        "ASR-002",
        AsrPatch { criterion: Some(QuantifiedCriterion { metric: Metric::Count, comparator: Comparator::GE, value: -2.0 }), ..Default::default() },
    );
    for op in [add_with_target, update_without_target, empty_update, add_without_kind, negative] {
        assert!(matches!(apply_refinement(&asrs, &op, Origin::Architect), Err(AnalysisError::InvalidPayload(_))), "{op:?}");
    }
}

#[test]
fn refinement_op_json_shape() {
    let json = r#"{"op":"Update","target":"ASR-002","payload":{"criterion":{"metric":"ResponseTimeSeconds","comparator":"LE","value":90}}}"#;
    let op: RefinementOp = serde_json::from_str(json).unwrap();
    assert_eq!(op, RefinementOp::update("ASR-002", AsrPatch { criterion: Some(ninety_seconds()), ..Default::default() }));
}

#[test]
fn lint_flags_vague_unquantified_quality() {
    let asrs = vec![asr("ASR-002", AsrKind::Quality, RESERVE_BIKE, AsrStatus::Proposed)];
    let findings = lint_asrs(&asrs, &Lexicon::default());
    let summary: Vec<(LintCode, Option<&str>)> = findings.iter().map(|f| (f.code, f.triggering_term.as_deref())).collect();
    assert_eq!(
        summary,
        vec![
            (LintCode::UnquantifiedQuality, None),
            (LintCode::VagueTerm, Some("instantly")),
            (LintCode::VagueTerm, Some("securely")),
        ]
    );
}

#[test]
fn lint_quantified_is_clean() {
    let mut a = asr("ASR-002", AsrKind::Quality, "respond within 90 seconds", AsrStatus::Refined);
    a.criterion = Some(ninety_seconds());
    assert!(lint_asrs(&[a], &Lexicon::default()).is_empty());
    assert!(lint_asrs(&[], &Lexicon::default()).is_empty());
}

#[test]
fn lint_whole_word_case_insensitive() {
    let lex = Lexicon::default();
    assert_eq!(lex.matches("FAST checkout, User-Friendly UI"), ["fast", "user-friendly"]);
    assert!(lex.matches("breakfast is steadfast").is_empty());
    assert_eq!(lex.matches("non-scalable design"), ["scalable"]);
    assert!(lex.matches("scalability").is_empty());
}

#[test]
fn lint_other_codes() {
    let mut c = asr("ASR-001", AsrKind::Constraint, "comply with policies", AsrStatus::Proposed);
    let e = asr("ASR-002", AsrKind::Functionality, "  ", AsrStatus::Proposed);
    let dead = asr("ASR-003", AsrKind::Quality, "fast", AsrStatus::Rejected);
    let f = lint_asrs(&[c.clone(), e, dead], &Lexicon::default());
    assert_eq!(f.iter().map(|x| x.code).collect::<Vec<_>>(), [LintCode::MissingConstraintTag, LintCode::EmptyStatement]);
    c.tags.push("GDPR".into());
    assert!(lint_asrs(&[c], &Lexicon::default()).is_empty());
}

#[test]
fn lexicon_file_format() {
    let lex = Lexicon::parse("# vague terms\nInstantly\n\nrobust\n");
    assert_eq!(lex.terms(), ["instantly", "robust"]);
}

#[test]
fn accept_quantified_quality() {
    let (refined, _) = apply_refinement(
        &campus_asrs(),
        &RefinementOp::update("ASR-002", AsrPatch { criterion: Some(ninety_seconds()), ..Default::default() }),
        Origin::Architect,
    )
    .unwrap();
    let (out, events) = accept_asrs(&refined, &["ASR-002".into()]).unwrap();
    assert_eq!(out[1].status, AsrStatus::Accepted);
    assert_eq!(events.len(), 1);
}

#[test]
fn accept_unquantified_quality_violates_invariant() {
    let err = accept_asrs(&campus_asrs(), &["ASR-002".into()]).unwrap_err();
    assert!(matches!(err, AnalysisError::InvariantViolation { asr_id, .. } if asr_id == "ASR-002"));
}

#[test]
fn accept_is_atomic() {
    let asrs = campus_asrs();
    let ids = vec!["ASR-001".to_string(), "ASR-bad".to_string()];
    // oracle: applying each id singly shows which one fails
    let singles: Vec<bool> = ids.iter().map(|id| accept_asrs(&asrs, std::slice::from_ref(id)).is_ok()).collect();
    assert_eq!(singles, [true, false]);
    assert_eq!(accept_asrs(&asrs, &ids), Err(AnalysisError::UnknownAsr("ASR-bad".into())));
}

// ---- properties ----

fn arb_op(max_id: usize) -> impl Strategy<Value = RefinementOp> {
    let id = (1..=max_id).prop_map(crate::model::format_asr_id);
    let kind = prop_oneof![Just(AsrKind::Functionality), Just(AsrKind::Quality), Just(AsrKind::Constraint)];
    prop_oneof![
        (kind.clone(), "[a-z ]{1,12}").prop_map(|(k, s)| RefinementOp::add(AsrPatch {
            kind: Some(k),
            statement: Some(s),
            ..Default::default()
        })),
        id.clone().prop_map(RefinementOp::remove),
        (id, proptest::option::of(0.0f64..200.0)).prop_map(|(t, v)| RefinementOp::update(
            t,
            AsrPatch {
                statement: Some("updated".into()),
                criterion: v.map(|v| QuantifiedCriterion::new(Metric::ResponseTimeSeconds, Comparator::LE, v).unwrap()),
                ..Default::default()
            }
        )),
    ]
}

fn run_log(initial: &[Asr], ops: &[RefinementOp]) -> (Vec<Asr>, usize, Vec<Vec<Asr>>) {
    let mut cur = initial.to_vec();
    let mut applied = 0;
    let mut history = vec![cur.clone()];
    for op in ops {
        if let Ok((next, _)) = apply_refinement(&cur, op, Origin::Architect) {
            cur = next;
            applied += 1;
            history.push(cur.clone());
        }
    }
    (cur, applied, history)
}

proptest! {
    #[test]
    fn tombstones_never_come_back(ops in proptest::collection::vec(arb_op(8), 0..30)) {
        let (_, _, history) = run_log(&campus_asrs(), &ops);
        for pair in history.windows(2) {
            for before in pair[0].iter().filter(|a| a.status == AsrStatus::Rejected) {
                let after = pair[1].iter().find(|a| a.id == before.id).unwrap();
                prop_assert_eq!(after, before);
            }
        }
    }

    #[test]
    fn op_log_replay_reproduces_final_list(ops in proptest::collection::vec(arb_op(8), 0..30)) {
        let (a, _, _) = run_log(&campus_asrs(), &ops);
        let (b, _, _) = run_log(&campus_asrs(), &ops);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn audit_count_matches_applied_ops(ops in proptest::collection::vec(arb_op(8), 0..30)) {
        let reply = bot_reply();
        let ex = run_extract(&[&reply], &[]).0.unwrap();
        let mut events = ex.events.clone();
        let mut cur = ex.asrs.clone();
        let mut applied = 0;
        for op in &ops {
            if let Ok((next, e)) = apply_refinement(&cur, op, Origin::Architect) {
                cur = next;
                events.push(e);
                applied += 1;
            }
        }
        prop_assert_eq!(events.iter().filter(|e| e.artifact_ref.kind == ArtifactKind::Asr).count(), applied + ex.asrs.len());
    }

    #[test]
    fn lint_is_order_independent(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let mut asrs = campus_asrs();
        asrs.push(asr("ASR-004", AsrKind::Quality, "fast and scalable", AsrStatus::Accepted));
        asrs.push(asr("ASR-005", AsrKind::Constraint, "", AsrStatus::Refined));
        asrs.push(asr("ASR-006", AsrKind::Functionality, "user-friendly", AsrStatus::Proposed));
        let baseline = lint_asrs(&asrs, &Lexicon::default());
        let shuffled: Vec<Asr> = perm.iter().map(|i| asrs[*i].clone()).collect();
        prop_assert_eq!(lint_asrs(&shuffled, &Lexicon::default()), baseline);
    }
}
