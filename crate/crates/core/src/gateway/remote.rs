// SPDX-License-Identifier: Apache-2.0

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{GatewayError, ModelBackend, ModelRequest, ModelResponse};
use crate::model::Tier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub base_model: String,
    pub strong_model: String,
    /// Environment variable holding the bearer token; unset means no auth header.
    pub api_key_env: Option<String>,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            base_model: String::new(),
            strong_model: String::new(),
            api_key_env: Some("RTLSMITH_API_KEY".into()),
            request_timeout_secs: 600,
            max_retries: 2,
            initial_backoff_ms: 1000,
        }
    }
}

impl RemoteConfig {
    pub fn model_for(&self, tier: Tier) -> Option<&str> {
        let m = match tier {
            Tier::Base => &self.base_model,
            Tier::Strong => &self.strong_model,
        };
        (!m.is_empty()).then_some(m.as_str())
    }
}

/// HTTP chat-completion client. Sampling parameters are never sent, so the
/// provider defaults apply.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

enum Failure {
    Retryable(String, Option<u16>),
    Fatal(GatewayError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, GatewayError> {
        let token = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| GatewayError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(RemoteBackend { config, client, token })
    }

    fn attempt(&self, request: &ModelRequest, model: &str) -> Result<(String, (u64, u64)), Failure> {
        let messages: Vec<Value> =
            request.messages.iter().map(|m| json!({"role": m.role.as_str(), "content": m.content})).collect();
        let body = json!({"model": model, "messages": messages});
        let mut builder = self.client.post(&self.config.endpoint).json(&body);
        if let Some(token) = &self.token {
            builder = builder.bearer_auth(token);
        }
        let resp = builder.send().map_err(|e| Failure::Retryable(e.to_string(), None))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Retryable(e.to_string(), None))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Failure::Retryable(text, Some(status.as_u16())));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(GatewayError::Http {
                request_id: request.request_id.clone(),
                status: status.as_u16(),
                body: text,
            }));
        }
        let malformed = |detail: String| {
            Failure::Fatal(GatewayError::MalformedResponse { request_id: request.request_id.clone(), detail })
        };
        let v: Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("no choices[0].message.content".into()))?;
        let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0);
        Ok((content.to_string(), (usage("prompt_tokens"), usage("completion_tokens"))))
    }
}

impl ModelBackend for RemoteBackend {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, GatewayError> {
        let model = self.config.model_for(request.tier).ok_or(GatewayError::UnconfiguredTier(request.tier))?;
        let started = Instant::now();
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut retries = 0;
        loop {
            match self.attempt(request, model) {
                Ok((text, token_counts)) => {
                    if text.is_empty() {
                        return Err(GatewayError::EmptyCompletion { request_id: request.request_id.clone() });
                    }
                    return Ok(ModelResponse {
                        text,
                        tier_used: request.tier,
                        latency: started.elapsed().as_secs_f64(),
                        token_counts,
                        retries,
                    });
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(detail, status)) => {
                    if retries >= self.config.max_retries {
                        return Err(match status {
                            Some(status) => {
                                GatewayError::Http { request_id: request.request_id.clone(), status, body: detail }
                            }
                            None => GatewayError::Transport { request_id: request.request_id.clone(), retries, detail },
                        });
                    }
                    tracing::warn!(request = %request.request_id, retry = retries + 1, "retrying model request: {detail}");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    retries += 1;
                }
            }
        }
    }
}
