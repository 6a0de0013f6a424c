// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use super::transcript::{load_transcript, Transcript, TranscriptEntry};
use super::{GatewayError, ModelBackend, ModelRequest, ModelResponse};

/// Serves recorded responses keyed by request digest.
///
/// Requests with the same digest are answered in recording order; once a
/// digest's recordings are used up its last response repeats.
pub struct ReplayBackend {
    recorded: HashMap<String, Vec<TranscriptEntry>>,
    cursor: Mutex<HashMap<String, usize>>,
}

impl ReplayBackend {
    pub fn from_transcript(transcript: Transcript) -> Self {
        let mut recorded: HashMap<String, Vec<TranscriptEntry>> = HashMap::new();
        for e in transcript.entries {
            recorded.entry(e.digest.clone()).or_default().push(e);
        }
        ReplayBackend { recorded, cursor: Mutex::new(HashMap::new()) }
    }

    /// Loads every transcript file below `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, GatewayError> {
        Ok(Self::from_transcript(load_transcript(dir)?))
    }

    pub fn recorded_len(&self) -> usize {
        self.recorded.values().map(Vec::len).sum()
    }
}

impl ModelBackend for ReplayBackend {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, GatewayError> {
        let digest = request.digest();
        let Some(entries) = self.recorded.get(&digest) else {
            return Err(GatewayError::ReplayMiss { request_id: request.request_id.clone(), digest });
        };
        let mut cursor = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        let k = cursor.entry(digest).or_insert(0);
        let entry = &entries[(*k).min(entries.len() - 1)];
        *k += 1;
        Ok(entry.to_response())
    }
}
