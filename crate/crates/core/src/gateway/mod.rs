// SPDX-License-Identifier: Apache-2.0

//! Model backends and the request/transcript plumbing around them.
//!
//! Every completion goes through [`Gateway::complete`], which bounds the
//! number of requests in flight and appends the exchange to a [`Transcript`].
//! Backends: [`RemoteBackend`] (HTTP chat completions), [`ReplayBackend`]
//! (recorded transcripts matched by request digest) and [`ScriptedBackend`]
//! (rule-based canned replies for tests and fixture generation).

mod remote;
mod replay;
mod scripted;
mod transcript;

use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use remote::{RemoteBackend, RemoteConfig};
pub use replay::ReplayBackend;
pub use scripted::{ScriptRule, ScriptedBackend};
pub use transcript::{
    load_transcript, read_transcript, write_transcript, Transcript, TranscriptEntry, TRANSCRIPT_FILE,
};

use crate::limit::Semaphore;
use crate::model::Tier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    SpecRefine,
    InitialGen,
    Repair,
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Purpose::SpecRefine => "spec_refine",
            Purpose::InitialGen => "initial_gen",
            Purpose::Repair => "repair",
        })
    }
}

/// A validated chat request: non-empty, system message first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub request_id: String,
    pub tier: Tier,
    pub purpose: Purpose,
    pub messages: Vec<Message>,
}

impl ModelRequest {
    pub fn new(
        request_id: impl Into<String>,
        tier: Tier,
        purpose: Purpose,
        messages: Vec<Message>,
    ) -> Result<Self, GatewayError> {
        let request_id = request_id.into();
        match messages.first() {
            None => return Err(GatewayError::InvalidRequest { request_id, reason: "no messages".into() }),
            Some(m) if m.role != Role::System => {
                return Err(GatewayError::InvalidRequest {
                    request_id,
                    reason: "first message is not a system message".into(),
                })
            }
            _ => {}
        }
        Ok(ModelRequest { request_id, tier, purpose, messages })
    }

    /// Content hash over purpose and message texts. Request ids and tiers
    /// are excluded so recorded transcripts survive renumbering.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.purpose.to_string().as_bytes());
        for m in &self.messages {
            h.update([0u8]);
            h.update(m.role.as_str().as_bytes());
            h.update([0u8]);
            h.update(m.content.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn last_user_message(&self) -> &str {
        self.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: String,
    pub tier_used: Tier,
    /// Seconds.
    pub latency: f64,
    /// (prompt, completion) tokens as reported by the backend.
    pub token_counts: (u64, u64),
    /// Transport retries spent before this response.
    pub retries: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("request {request_id}: invalid request: {reason}")]
    InvalidRequest { request_id: String, reason: String },
    #[error("request {request_id}: transport failure after {retries} retries: {detail}")]
    Transport { request_id: String, retries: u32, detail: String },
    #[error("request {request_id}: HTTP {status}: {body}")]
    Http { request_id: String, status: u16, body: String },
    #[error("request {request_id}: backend returned an empty completion")]
    EmptyCompletion { request_id: String },
    #[error("request {request_id}: malformed response: {detail}")]
    MalformedResponse { request_id: String, detail: String },
    #[error("request {request_id}: no recorded response for digest {digest}")]
    ReplayMiss { request_id: String, digest: String },
    #[error("no model configured for tier {0}")]
    UnconfiguredTier(Tier),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("corrupt transcript {path}, line {line}: {reason}")]
    CorruptTranscript { path: PathBuf, line: usize, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GatewayError {
    pub fn request_id(&self) -> Option<&str> {
        match self {
            GatewayError::InvalidRequest { request_id, .. }
            | GatewayError::Transport { request_id, .. }
            | GatewayError::Http { request_id, .. }
            | GatewayError::EmptyCompletion { request_id }
            | GatewayError::MalformedResponse { request_id, .. }
            | GatewayError::ReplayMiss { request_id, .. } => Some(request_id),
            _ => None,
        }
    }
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EscalationPolicy {
    /// Repair iterations served by the base tier before escalating.
    pub base_tier_rounds: u32,
    /// Stay on the strong tier once escalated; otherwise alternate, using
    /// the strong tier for one iteration after every `base_tier_rounds`.
    pub strong_tier_afterwards: bool,
}

impl Default for EscalationPolicy {
    fn default() -> Self {
        EscalationPolicy { base_tier_rounds: 5, strong_tier_afterwards: true }
    }
}

/// Tier for repair iteration `iteration` (1-based).
pub fn select_tier(iteration: u32, policy: &EscalationPolicy) -> Tier {
    let rounds = policy.base_tier_rounds;
    if policy.strong_tier_afterwards {
        if iteration <= rounds {
            Tier::Base
        } else {
            Tier::Strong
        }
    } else if iteration % (rounds + 1) == 0 {
        Tier::Strong
    } else {
        Tier::Base
    }
}

/// Shared entry point to one backend.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn ModelBackend>,
    limiter: Arc<Semaphore>,
    calls: Arc<AtomicU64>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ModelBackend>, max_in_flight: usize) -> Self {
        Gateway { backend, limiter: Arc::new(Semaphore::new(max_in_flight)), calls: Arc::new(AtomicU64::new(0)) }
    }

    /// Sends `request` and appends the exchange to `transcript`.
    pub fn complete(&self, request: &ModelRequest, transcript: &mut Transcript) -> Result<ModelResponse, GatewayError> {
        let response = {
            let _permit = self.limiter.acquire();
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.backend.complete(request)?
        };
        tracing::debug!(request = %request.request_id, purpose = %request.purpose, tier = %response.tier_used, "model call");
        transcript.push(request, &response);
        Ok(response)
    }

    /// Requests issued through this gateway so far.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn request_validation() {
        assert!(ModelRequest::new("r", Tier::Base, Purpose::Repair, vec![]).is_err());
        assert!(ModelRequest::new("r", Tier::Base, Purpose::Repair, vec![Message::user("x")]).is_err());
        let ok = ModelRequest::new("r", Tier::Base, Purpose::Repair, vec![Message::system("s"), Message::user("x")])
            .unwrap();
        assert_eq!(ok.last_user_message(), "x");
    }

    #[test]
    fn digest_ignores_id_and_tier() {
        let msgs = vec![Message::system("s"), Message::user("u")];
        let a = ModelRequest::new("a", Tier::Base, Purpose::Repair, msgs.clone()).unwrap();
        let b = ModelRequest::new("b", Tier::Strong, Purpose::Repair, msgs.clone()).unwrap();
        let c = ModelRequest::new("a", Tier::Base, Purpose::InitialGen, msgs).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn default_policy_boundary() {
        let p = EscalationPolicy::default();
        assert_eq!(select_tier(1, &p), Tier::Base);
        assert_eq!(select_tier(5, &p), Tier::Base);
        assert_eq!(select_tier(6, &p), Tier::Strong);
        let zero = EscalationPolicy { base_tier_rounds: 0, strong_tier_afterwards: true };
        assert_eq!(select_tier(1, &zero), Tier::Strong);
    }

    #[test]
    fn alternating_policy() {
        let p = EscalationPolicy { base_tier_rounds: 2, strong_tier_afterwards: false };
        let tiers: Vec<Tier> = (1..=6).map(|i| select_tier(i, &p)).collect();
        use Tier::*;
        assert_eq!(tiers, [Base, Base, Strong, Base, Base, Strong]);
    }

    proptest! {
        #[test]
        fn default_policy_never_deescalates(rounds in 0u32..30, i in 1u32..200) {
            let p = EscalationPolicy { base_tier_rounds: rounds, strong_tier_afterwards: true };
            prop_assert!(select_tier(i, &p) <= select_tier(i + 1, &p));
        }
    }
}
