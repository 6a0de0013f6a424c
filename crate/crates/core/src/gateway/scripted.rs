// SPDX-License-Identifier: Apache-2.0

use std::sync::Mutex;

use super::{GatewayError, ModelBackend, ModelRequest, ModelResponse, Purpose};

/// Answers requests whose purpose matches and whose last user message
/// contains every `needles` entry. Responses are served in order; the last
/// one repeats.
#[derive(Debug, Clone)]
pub struct ScriptRule {
    pub purpose: Option<Purpose>,
    pub needles: Vec<String>,
    pub responses: Vec<String>,
}

impl ScriptRule {
    pub fn new(purpose: Purpose, needles: &[&str], responses: &[&str]) -> Self {
        ScriptRule {
            purpose: Some(purpose),
            needles: needles.iter().map(|s| s.to_string()).collect(),
            responses: responses.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn matches(&self, request: &ModelRequest) -> bool {
        let text = request.last_user_message();
        self.purpose.map_or(true, |p| p == request.purpose) && self.needles.iter().all(|n| text.contains(n.as_str()))
    }
}

/// Rule-driven backend for tests and for recording replay fixtures.
/// Rules are tried in order; the first match answers.
pub struct ScriptedBackend {
    rules: Vec<ScriptRule>,
    served: Mutex<Vec<usize>>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        let served = Mutex::new(vec![0; rules.len()]);
        ScriptedBackend { rules, served }
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, GatewayError> {
        let Some(i) = self.rules.iter().position(|r| r.matches(request)) else {
            return Err(GatewayError::ReplayMiss { request_id: request.request_id.clone(), digest: request.digest() });
        };
        let rule = &self.rules[i];
        if rule.responses.is_empty() {
            return Err(GatewayError::EmptyCompletion { request_id: request.request_id.clone() });
        }
        let mut served = self.served.lock().unwrap_or_else(|e| e.into_inner());
        let text = rule.responses[served[i].min(rule.responses.len() - 1)].clone();
        served[i] += 1;
        Ok(ModelResponse { text, tier_used: request.tier, latency: 0.0, token_counts: (0, 0), retries: 0 })
    }
}
