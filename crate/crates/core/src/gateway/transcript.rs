// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GatewayError, Message, ModelRequest, ModelResponse, Purpose};
use crate::model::Tier;

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_id: String,
    pub purpose: Purpose,
    pub tier: Tier,
    pub digest: String,
    pub messages: Vec<Message>,
    pub response: String,
    pub tier_used: Tier,
    pub latency: f64,
    pub token_counts: (u64, u64),
    #[serde(default)]
    pub retries: u32,
}

impl TranscriptEntry {
    pub fn to_response(&self) -> ModelResponse {
        ModelResponse {
            text: self.response.clone(),
            tier_used: self.tier_used,
            latency: self.latency,
            token_counts: self.token_counts,
            retries: self.retries,
        }
    }
}

/// Ordered request/response pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, request: &ModelRequest, response: &ModelResponse) {
        self.entries.push(TranscriptEntry {
            request_id: request.request_id.clone(),
            purpose: request.purpose,
            tier: request.tier,
            digest: request.digest(),
            messages: request.messages.clone(),
            response: response.text.clone(),
            tier_used: response.tier_used,
            latency: response.latency,
            token_counts: response.token_counts,
            retries: response.retries,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn extend(&mut self, other: Transcript) {
        self.entries.extend(other.entries);
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GatewayError + '_ {
    move |source| GatewayError::Io { path: path.to_path_buf(), source }
}

/// Writes `transcript` as JSON lines, replacing `path` atomically.
pub fn write_transcript(path: &Path, transcript: &Transcript) -> Result<(), GatewayError> {
    let mut text = String::new();
    for e in &transcript.entries {
        text.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
        text.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_transcript(path: &Path) -> Result<Transcript, GatewayError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(GatewayError::CorruptTranscript {
            path: path.to_path_buf(),
            line: text.lines().count(),
            reason: "truncated final record".into(),
        });
    }
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(line).map_err(|e| GatewayError::CorruptTranscript {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(Transcript { entries })
}

/// Numeric-aware ordering so `attempts/10` sorts after `attempts/9`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Greater,
        (Err(_), Ok(_)) => Ordering::Less,
        _ => a.cmp(b),
    }
}

pub(crate) fn collect_transcript_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), GatewayError> {
    let mut entries: Vec<(String, PathBuf, bool)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        let is_dir = entry.file_type().map_err(io_err(&path))?.is_dir();
        entries.push((entry.file_name().to_string_lossy().into_owned(), path, is_dir));
    }
    // Files in a directory come before its subdirectories.
    entries.sort_by(|a, b| a.2.cmp(&b.2).then_with(|| natural_cmp(&a.0, &b.0)));
    for (name, path, is_dir) in entries {
        if is_dir {
            if !name.starts_with('.') {
                collect_transcript_files(&path, out)?;
            }
        } else if name == TRANSCRIPT_FILE {
            out.push(path);
        }
    }
    Ok(())
}

/// Every transcript under `dir`, concatenated in path order.
pub fn load_transcript(dir: &Path) -> Result<Transcript, GatewayError> {
    let mut files = Vec::new();
    collect_transcript_files(dir, &mut files)?;
    let mut all = Transcript::default();
    for f in files {
        all.extend(read_transcript(&f)?);
    }
    Ok(all)
}
