use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatMessage, ChatRequest, GatewayError, RequestPurpose, Role, DEFAULT_TEMPERATURE};

/// How much a backend's answers to one prompt disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub prompt_hash: String,
    pub samples: Vec<String>,
    pub n: usize,
    pub distinct_normalized: usize,
    /// `(distinct_normalized - 1) / max(1, n - 1)`
    pub divergence: f64,
}

/// Lowercase and collapse whitespace runs to one space.
pub fn normalize_response(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

pub fn divergence(distinct: usize, n: usize) -> f64 {
    distinct.saturating_sub(1) as f64 / n.saturating_sub(1).max(1) as f64
}

/// Asks `prompt` `n` times, each as an independent single-shot request with no shared context.
pub fn variance_probe(prompt: &str, n: usize, backend: &mut dyn ChatBackend) -> Result<VarianceReport, GatewayError> {
    if n == 0 {
        return Err(GatewayError::InvalidRequest("variance probe needs at least one sample".into()));
    }
    let request = ChatRequest {
        purpose: RequestPurpose::Probe,
        messages: vec![ChatMessage { role: Role::Architect, content: prompt.to_string() }],
        temperature: DEFAULT_TEMPERATURE,
    };
    let samples = (0..n).map(|_| backend.complete(&request)).collect::<Result<Vec<_>, _>>()?;
    Ok(summarize_samples(prompt, samples))
}

pub fn summarize_samples(prompt: &str, samples: Vec<String>) -> VarianceReport {
    let distinct_normalized = samples.iter().map(|s| normalize_response(s)).collect::<BTreeSet<_>>().len();
    let n = samples.len();
    VarianceReport {
        prompt_hash: hex::encode(Sha256::digest(prompt.as_bytes())),
        n,
        distinct_normalized,
        divergence: divergence(distinct_normalized, n),
        samples,
    }
}
