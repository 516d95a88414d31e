//! Chat-completion backend over HTTP (OpenAI-compatible `POST {base_url}/chat/completions`).

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, GatewayError, Role};

pub const ENV_API_KEY: &str = "ARCHBOT_API_KEY";
pub const ENV_BASE_URL: &str = "ARCHBOT_BASE_URL";
pub const ENV_MODEL: &str = "ARCHBOT_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

#[derive(Debug)]
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        Ok(LiveBackend { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

pub fn request_body(model: &str, request: &ChatRequest) -> Value {
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::Architect => "user",
                Role::Bot => "assistant",
                Role::System => "system",
            };
            json!({ "role": role, "content": m.content })
        })
        .collect();
    json!({ "model": model, "messages": messages, "temperature": request.temperature })
}

impl ChatBackend for LiveBackend {
    fn descriptor(&self) -> String {
        self.config.model.clone()
    }

    fn complete(&mut self, request: &ChatRequest) -> Result<String, GatewayError> {
        let mut http = self.client.post(self.endpoint()).json(&request_body(&self.config.model, request));
        if let Some(key) = &self.config.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        let status = response.status();
        let body = response.text().map_err(|e| GatewayError::BackendUnavailable(e.to_string()))?;
        if status.as_u16() == 413 || (status.as_u16() == 400 && body.contains("context_length_exceeded")) {
            return Err(GatewayError::ContextTooLarge);
        }
        if !status.is_success() {
            return Err(GatewayError::BackendUnavailable(format!("HTTP {status}: {}", truncate(&body, 200))));
        }
        let parsed: Value = serde_json::from_str(&body)
            .map_err(|e| GatewayError::BackendUnavailable(format!("malformed completion response: {e}")))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GatewayError::BackendUnavailable("completion response has no message content".into()))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
