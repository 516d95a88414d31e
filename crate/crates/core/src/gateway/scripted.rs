use std::collections::VecDeque;

use super::{ChatBackend, ChatRequest, GatewayError, RequestPurpose};

/// Backend that answers from a queue of canned replies and keeps every request it saw.
///
/// Used to author fixtures and in tests. `context_limit` makes it reject dialog requests with
/// more messages than the limit, like a model with a small context window.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    name: String,
    replies: VecDeque<Result<String, GatewayError>>,
    pub requests: Vec<ChatRequest>,
    pub context_limit: Option<usize>,
}

impl ScriptedBackend {
    pub fn new<I, S>(name: impl Into<String>, replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            name: name.into(),
            replies: replies.into_iter().map(|r| Ok(r.into())).collect(),
            requests: Vec::new(),
            context_limit: None,
        }
    }

    pub fn push_reply(&mut self, reply: impl Into<String>) {
        self.replies.push_back(Ok(reply.into()));
    }

    pub fn push_error(&mut self, error: GatewayError) {
        self.replies.push_back(Err(error));
    }

    pub fn pending(&self) -> usize {
        self.replies.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn descriptor(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.requests.push(request.clone());
        if let Some(limit) = self.context_limit {
            if request.purpose == RequestPurpose::Turn && request.messages.len() > limit {
                return Err(GatewayError::ContextTooLarge);
            }
        }
        self.replies.pop_front().unwrap_or(Err(GatewayError::ReplayExhausted))
    }
}
