//! The error payload shared by the CLI (stderr, exit code) and the HTTP service (status code).

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use archbot_core::analysis::AnalysisError;
use archbot_core::evaluation::EvaluationError;
use archbot_core::gateway::GatewayError;
use archbot_core::session::SessionError;
use archbot_core::synthesis::{CheckError, SynthesisError};

/// An entry of the error registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCode {
    pub code: &'static str,
    pub http_status: u16,
    pub exit_code: i32,
    pub description: &'static str,
}

const fn code(code: &'static str, http_status: u16, exit_code: i32, description: &'static str) -> ErrorCode {
    ErrorCode { code, http_status, exit_code, description }
}

/// Every code an [`ApiError`] can carry. `docs/api/errors.md` mirrors this table.
pub const ERROR_REGISTRY: &[ErrorCode] = &[
    code("usage_error", 400, 64, "The command line could not be parsed."),
    code("schema_violation", 400, 65, "A request body or argument does not match its schema."),
    code("invalid_story", 400, 65, "The architecture story is incomplete or malformed."),
    code("invalid_refinement", 400, 65, "A refinement operation is malformed or breaks a requirement invariant."),
    code("invalid_request", 400, 65, "The operation is not valid for the current project content."),
    code("not_found", 404, 66, "No project, requirement, model revision or report with that id."),
    code("unknown_element", 404, 66, "No element with that name in the latest model."),
    code("illegal_transition", 409, 2, "The process state machine has no such transition."),
    code("gate_unsatisfied", 409, 2, "A precondition of the target process state does not hold."),
    code("already_exists", 409, 2, "The project directory is already in use."),
    code("locked", 409, 75, "Another writer holds the project lock."),
    code("dangling_reference", 422, 65, "A scenario cites a requirement that does not exist."),
    code("unparseable_response", 502, 69, "The bot answered twice without the required structured block."),
    code("backend_unavailable", 502, 69, "The chat backend could not be reached or failed."),
    code("context_too_large", 502, 69, "The backend rejected the conversation context as too large."),
    code("replay_exhausted", 502, 69, "The replay fixture has no further responses."),
    code("replay_mismatch", 502, 69, "An architect input differs from the one recorded in the fixture."),
    code("fixture_invalid", 500, 65, "A replay fixture cannot be read."),
    code("prompt_error", 500, 78, "A prompt template is missing, malformed or lacks a binding."),
    code("config_error", 500, 78, "The service configuration is invalid."),
    code("ledger_corrupt", 500, 70, "The provenance ledger fails hash-chain verification."),
    code("corrupt_file", 500, 70, "A persisted project file cannot be decoded."),
    code("rebuild_mismatch", 500, 70, "Replaying the project logs does not reproduce the persisted state."),
    code("sequence_violation", 500, 70, "A ledger record was appended out of sequence."),
    code("io_error", 500, 74, "Reading or writing the project directory failed."),
    code("internal", 500, 70, "Unexpected internal failure."),
];

pub fn lookup(code: &str) -> &'static ErrorCode {
    ERROR_REGISTRY
        .iter()
        .find(|c| c.code == code)
        .unwrap_or_else(|| lookup("internal"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    /// Panics in debug builds when `code` is not registered.
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        debug_assert!(ERROR_REGISTRY.iter().any(|c| c.code == code), "unregistered error code {code}");
        ApiError { code: code.to_string(), message: message.into(), detail: None }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn entry(&self) -> &'static ErrorCode {
        lookup(&self.code)
    }

    pub fn http_status(&self) -> u16 {
        self.entry().http_status
    }

    pub fn exit_code(&self) -> i32 {
        self.entry().exit_code
    }

    pub fn usage(message: impl Into<String>) -> Self {
        ApiError::new("usage_error", message)
    }

    pub fn schema(message: impl Into<String>) -> Self {
        ApiError::new("schema_violation", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new("not_found", message)
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        let message = e.to_string();
        match e {
            GatewayError::BackendUnavailable(_) => ApiError::new("backend_unavailable", message),
            GatewayError::ContextTooLarge => ApiError::new("context_too_large", message),
            GatewayError::ReplayExhausted => ApiError::new("replay_exhausted", message),
            GatewayError::InputMismatch { turn_id, expected, actual } => ApiError::new("replay_mismatch", message)
                .with_detail(json!({ "turn_id": turn_id, "expected": expected, "actual": actual })),
            GatewayError::CorruptFixture { line, .. } => {
                ApiError::new("fixture_invalid", message).with_detail(json!({ "line": line }))
            }
            GatewayError::AlternationViolated(_) | GatewayError::InvalidTranscript(_) => {
                ApiError::new("corrupt_file", message)
            }
            GatewayError::MissingPlaceholder(_) | GatewayError::UnknownTemplate(_) | GatewayError::InvalidTemplate(_) => {
                ApiError::new("prompt_error", message)
            }
            GatewayError::InvalidRequest(_) => ApiError::new("invalid_request", message),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let message = e.to_string();
        match e {
            AnalysisError::InvalidStory(defects) => ApiError::new("invalid_story", message)
                .with_detail(json!({ "defects": defects.iter().map(ToString::to_string).collect::<Vec<_>>() })),
            AnalysisError::UnparseableResponse(_) => ApiError::new("unparseable_response", message),
            AnalysisError::Gateway(g) => g.into(),
            AnalysisError::UnknownAsr(id) => ApiError::new("not_found", message).with_detail(json!({ "asr_id": id })),
            AnalysisError::InvalidPayload(_) => ApiError::new("invalid_refinement", message),
            AnalysisError::InvariantViolation { asr_id, .. } => {
                ApiError::new("invalid_refinement", message).with_detail(json!({ "asr_id": asr_id }))
            }
        }
    }
}

impl From<SynthesisError> for ApiError {
    fn from(e: SynthesisError) -> Self {
        let message = e.to_string();
        match e {
            SynthesisError::NoAcceptedAsrs => ApiError::new("gate_unsatisfied", message),
            SynthesisError::UnparseableScript(_) => ApiError::new("unparseable_response", message),
            SynthesisError::Gateway(g) => g.into(),
            SynthesisError::UnknownAsr(_) => ApiError::new("not_found", message),
            SynthesisError::UnknownElement(_) => ApiError::new("unknown_element", message),
        }
    }
}

impl From<EvaluationError> for ApiError {
    fn from(e: EvaluationError) -> Self {
        let message = e.to_string();
        match e {
            EvaluationError::UnparseableResponse(_) => ApiError::new("unparseable_response", message),
            EvaluationError::Gateway(g) => g.into(),
            EvaluationError::UnknownElement(_) => ApiError::new("unknown_element", message),
            EvaluationError::UnclassifiedScenario(_) | EvaluationError::InvalidScenario(_) => {
                ApiError::new("invalid_request", message)
            }
            EvaluationError::DanglingAsrReference { scenario_id, asr_id } => ApiError::new("dangling_reference", message)
                .with_detail(json!({ "scenario_id": scenario_id, "asr_id": asr_id })),
        }
    }
}

impl From<CheckError> for ApiError {
    fn from(e: CheckError) -> Self {
        ApiError::new("unknown_element", e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::IllegalTransition { from, to } => ApiError::new("illegal_transition", message)
                .with_detail(json!({ "from": from.to_string(), "to": to.to_string() })),
            SessionError::GateUnsatisfied(reason) => {
                ApiError::new("gate_unsatisfied", message).with_detail(json!({ "reason": reason }))
            }
            SessionError::SequenceViolation { expected, got } => {
                ApiError::new("sequence_violation", message).with_detail(json!({ "expected": expected, "got": got }))
            }
            SessionError::LedgerCorrupt { line, .. } => {
                ApiError::new("ledger_corrupt", message).with_detail(json!({ "line": line }))
            }
            SessionError::Locked(_) => ApiError::new("locked", message),
            SessionError::AlreadyExists(_) => ApiError::new("already_exists", message),
            SessionError::NotAProject(_) => ApiError::new("not_found", message),
            SessionError::Io { .. } => ApiError::new("io_error", message),
            SessionError::CorruptFile { .. } => ApiError::new("corrupt_file", message),
            SessionError::Invalid(_) => ApiError::new("invalid_request", message),
            SessionError::RebuildMismatch(_) => ApiError::new("rebuild_mismatch", message),
            SessionError::Analysis(e) => e.into(),
            SessionError::Synthesis(e) => e.into(),
            SessionError::Evaluation(e) => e.into(),
            SessionError::Check(e) => e.into(),
            SessionError::Gateway(e) => e.into(),
        }
    }
}
