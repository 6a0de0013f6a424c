// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration, read from a TOML file.
//!
//! ```toml
//! workspace = "work"
//! limit = 20
//! window_radius = 5
//! failure_policy = "block_dependents"   # or "abort_design"
//! replay_dir = "transcripts"            # exclusive with [remote]
//!
//! [remote]
//! endpoint = "https://example.invalid/v1/chat/completions"
//! base_model = "..."
//! strong_model = "..."
//! api_key_env = "RTLSMITH_API_KEY"
//!
//! [escalation]
//! base_tier_rounds = 5
//! strong_tier_afterwards = true
//!
//! [compiler]
//! ast_dump = ["clang", "-fsyntax-only", "-Xclang", "-ast-dump=json", "{source_file}"]
//!
//! [ec]
//! profile = "hw-cbmc"
//! timeout_secs = 600
//! default_bound = 1
//!
//! [parallelism]
//! tasks = 1
//! model_requests = 4
//! ec_jobs = 1
//!
//! [timeframe_overrides]
//! "design/task" = 3
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gateway::{EscalationPolicy, RemoteConfig};
use crate::planner::compiler::CompilerConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// What happens to the rest of a design when one of its tasks fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Tasks depending on the failed one are skipped; unrelated tasks go on.
    #[default]
    BlockDependents,
    /// No further task of the design is attempted.
    AbortDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcConfig {
    /// Builtin profile name or path to a profile TOML file.
    pub profile: String,
    /// Overrides the profile's command template.
    pub command: Option<Vec<String>>,
    pub timeout_secs: f64,
    /// Unrolling bound for combinational tasks; sequential tasks use their
    /// timeframe.
    pub default_bound: u32,
}

impl Default for EcConfig {
    fn default() -> Self {
        EcConfig { profile: "hw-cbmc".into(), command: None, timeout_secs: 600.0, default_bound: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parallelism {
    /// Tasks of one design processed concurrently.
    pub tasks: usize,
    pub model_requests: usize,
    pub ec_jobs: usize,
    /// Benchmark runs executed concurrently.
    pub bench_runs: usize,
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism { tasks: 1, model_requests: 4, ec_jobs: 1, bench_runs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub workspace: PathBuf,
    /// Repair iterations per task.
    pub limit: u32,
    /// Lines shown either side of a syntax diagnostic.
    pub window_radius: usize,
    pub failure_policy: FailurePolicy,
    pub escalation: EscalationPolicy,
    pub remote: Option<RemoteConfig>,
    /// Recorded transcripts to replay instead of calling a remote model.
    pub replay_dir: Option<PathBuf>,
    pub compiler: CompilerConfig,
    pub ec: EcConfig,
    pub parallelism: Parallelism,
    /// Directory whose template files replace the builtin prompts.
    pub prompt_dir: Option<PathBuf>,
    /// Directory of harness exemplars replacing the builtin ones.
    pub exemplar_dir: Option<PathBuf>,
    /// `"design/task"` -> timeframe; 0 forces a combinational task. A task
    /// with an override is not classified by the model.
    pub timeframe_overrides: BTreeMap<String, u32>,
    /// Record zero wall time in attempts. Always on when replaying.
    pub frozen_clock: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workspace: PathBuf::from("work"),
            limit: 20,
            window_radius: 5,
            failure_policy: FailurePolicy::default(),
            escalation: EscalationPolicy::default(),
            remote: None,
            replay_dir: None,
            compiler: CompilerConfig::default(),
            ec: EcConfig::default(),
            parallelism: Parallelism::default(),
            prompt_dir: None,
            exemplar_dir: None,
            timeframe_overrides: BTreeMap::new(),
            frozen_clock: false,
        }
    }
}

fn absolutize(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and validates `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes relative paths absolute against `base` (itself made absolute
    /// against the current directory); tools run in scratch directories.
    pub fn resolve_paths(&mut self, base: &Path) {
        let base = &std::path::absolute(base).unwrap_or_else(|_| base.to_path_buf());
        absolutize(base, &mut self.workspace);
        for p in [&mut self.replay_dir, &mut self.prompt_dir, &mut self.exemplar_dir].into_iter().flatten() {
            absolutize(base, p);
        }
        if !self.ec.profile.is_empty() && self.ec.profile.ends_with(".toml") {
            let mut p = PathBuf::from(&self.ec.profile);
            absolutize(base, &mut p);
            self.ec.profile = p.to_string_lossy().into_owned();
        }
        if let Some(cmd) = &mut self.ec.command {
            // A relative program path that exists next to the file is a local script.
            if let Some(first) = cmd.first_mut() {
                if first.contains('/') && Path::new(first.as_str()).is_relative() {
                    *first = base.join(&*first).to_string_lossy().into_owned();
                }
            }
        }
    }

    /// Switches to replay mode (as `--replay` does).
    pub fn use_replay(&mut self, dir: PathBuf) {
        self.remote = None;
        self.replay_dir = Some(dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.limit < 1 {
            return bad("limit must be at least 1");
        }
        match (&self.remote, &self.replay_dir) {
            (Some(_), Some(_)) => return bad("set either [remote] or replay_dir, not both"),
            (None, None) => return bad("no model backend: set [remote] or replay_dir"),
            _ => {}
        }
        let p = &self.parallelism;
        if p.tasks == 0 || p.model_requests == 0 || p.ec_jobs == 0 || p.bench_runs == 0 {
            return bad("parallelism limits must be at least 1");
        }
        if !(self.ec.timeout_secs > 0.0) {
            return bad("ec.timeout_secs must be positive");
        }
        for key in self.timeframe_overrides.keys() {
            if key.split('/').count() != 2 || key.split('/').any(str::is_empty) {
                return Err(ConfigError::Invalid(format!("timeframe override key {key:?} is not \"design/task\"")));
            }
        }
        Ok(())
    }

    pub fn is_replay(&self) -> bool {
        self.replay_dir.is_some()
    }

    pub fn timeframe_override(&self, design: &str, task: &str) -> Option<u32> {
        self.timeframe_overrides.get(&format!("{design}/{task}")).copied()
    }
}
