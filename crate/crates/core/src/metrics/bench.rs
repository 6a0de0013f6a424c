// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Deserialize;

use super::{MetricsError, RunLedger, RunOutcome, RunRecord};
use crate::config::PipelineConfig;
use crate::ec::Checker;
use crate::gateway::ModelBackend;
use crate::model::DesignInput;
use crate::pipeline::{Mode, Pipeline};
use crate::workspace::Workspace;

/// One benchmark design. Paths are relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub c_source: PathBuf,
    pub spec: PathBuf,
    pub top: String,
    /// Cycles of the top function; 0 or absent means combinational unless
    /// classification decides otherwise.
    #[serde(default)]
    pub timing: Option<u32>,
    /// Repair limit for this design; the configured limit otherwise.
    #[serde(default)]
    pub limit: Option<u32>,
    #[serde(default)]
    pub runs: Option<u32>,
}

/// ```toml
/// runs = 20
/// [[design]]
/// name = "fp16"
/// c_source = "fp16/design.c"
/// spec = "fp16/spec.md"
/// top = "f32_to_f16"
/// timing = 0
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkManifest {
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(rename = "design", default)]
    pub designs: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_runs() -> u32 {
    20
}

impl ManifestEntry {
    /// `base` with this entry's limit and top timing applied.
    pub fn configure(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut config = base.clone();
        if let Some(limit) = self.limit {
            config.limit = limit;
        }
        if let Some(t) = self.timing {
            config.timeframe_overrides.insert(format!("{}/{}", self.name, self.top), t);
        }
        config
    }
}

impl BenchmarkManifest {
    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let bad = |reason: String| MetricsError::Manifest { path: path.to_path_buf(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let mut manifest: BenchmarkManifest = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if manifest.designs.is_empty() {
            return Err(bad("no [[design]] entries".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &manifest.designs {
            if !seen.insert(d.name.as_str()) {
                return Err(bad(format!("design `{}` listed twice", d.name)));
            }
            for p in [&d.c_source, &d.spec] {
                let full = manifest.base_dir.join(p);
                if !full.is_file() {
                    return Err(bad(format!("design `{}`: {} does not exist", d.name, full.display())));
                }
            }
        }
        Ok(manifest)
    }

    pub fn input(&self, entry: &ManifestEntry) -> Result<DesignInput, MetricsError> {
        let read = |p: &Path| {
            let full = self.base_dir.join(p);
            std::fs::read_to_string(&full).map_err(|source| MetricsError::Io { path: full, source })
        };
        Ok(DesignInput {
            design_name: entry.name.clone(),
            top_function: entry.top.clone(),
            c_source: read(&entry.c_source)?,
            spec_text: read(&entry.spec)?,
        })
    }
}

/// Runs every manifest design `runs` times (or `runs_override`), each run
/// in a fresh workspace under `root/<mode>/run-<k>`, and returns the
/// records sorted by (design, task, run). Failures are recorded, not raised.
pub fn run_benchmark(
    manifest: &BenchmarkManifest,
    mode: Mode,
    config: &PipelineConfig,
    root: &Path,
    backend: Arc<dyn ModelBackend>,
    checker: Arc<dyn Checker>,
    runs_override: Option<u32>,
) -> Result<RunLedger, MetricsError> {
    let runs_of = |e: &ManifestEntry| runs_override.or(e.runs).unwrap_or(manifest.runs);
    let max_runs = manifest.designs.iter().map(runs_of).max().unwrap_or(0);
    let mode_dir = root.join(match mode {
        Mode::Decomposed => "decomposed",
        Mode::Monolithic => "monolithic",
    });
    let inputs: Vec<DesignInput> = manifest.designs.iter().map(|e| manifest.input(e)).collect::<Result<_, _>>()?;
    let records = Mutex::new(Vec::new());
    let first_error = Mutex::new(None);
    let one_run = |k: u32| {
        let result = (|| -> Result<Vec<RunRecord>, MetricsError> {
            let ws = Workspace::open(mode_dir.join(format!("run-{k}")), true)?;
            let mut out = Vec::new();
            for (entry, input) in manifest.designs.iter().zip(&inputs) {
                if k >= runs_of(entry) {
                    continue;
                }
                out.extend(run_design(entry, input, mode, config, &ws, k, backend.clone(), checker.clone()));
            }
            Ok(out)
        })();
        match result {
            Ok(r) => records.lock().expect("records lock").extend(r),
            Err(e) => {
                first_error.lock().expect("error lock").get_or_insert(e);
            }
        }
    };
    let workers = config.parallelism.bench_runs.max(1) as u32;
    std::thread::scope(|s| {
        for w in 0..workers {
            let one_run = &one_run;
            s.spawn(move || {
                for k in (w..max_runs).step_by(workers as usize) {
                    one_run(k);
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut records = records.into_inner().expect("records lock");
    records.sort_by(|a, b| (&a.design, &a.task, a.run).cmp(&(&b.design, &b.task, b.run)));
    let mut ledger = RunLedger::default();
    for r in records {
        ledger.push(r)?;
    }
    Ok(ledger)
}

#[allow(clippy::too_many_arguments)]
fn run_design(
    entry: &ManifestEntry,
    input: &DesignInput,
    mode: Mode,
    config: &PipelineConfig,
    ws: &Workspace,
    run: u32,
    backend: Arc<dyn ModelBackend>,
    checker: Arc<dyn Checker>,
) -> Vec<RunRecord> {
    let config = entry.configure(config);
    let limit = config.limit;
    let failed_top = |message: String| {
        vec![RunRecord {
            design: entry.name.clone(),
            task: entry.top.clone(),
            run,
            passed_initially: false,
            iterations: 0,
            final_passed: false,
            limit,
            outcome: RunOutcome::NotCompleted,
            module_lines: None,
            total_lines: None,
            error: Some(message),
        }]
    };
    let pipeline = match Pipeline::new(&config, ws.clone(), backend, checker) {
        Ok(p) => p,
        Err(e) => return failed_top(e.to_string()),
    };
    let summary = match pipeline.run(std::slice::from_ref(input), mode) {
        Ok(mut s) => s.remove(0),
        Err(e) => return failed_top(e.to_string()),
    };
    let Some(plan) = ws.plan(&entry.name) else {
        return failed_top("no plan was saved".into());
    };
    plan.schedule
        .iter()
        .filter(|n| !plan.owners.contains_key(*n))
        .filter_map(|n| ws.task(&entry.name, n))
        .map(|task| {
            let mut r = RunRecord::from_task(ws, &entry.name, &task, run, limit);
            if let Some(crate::pipeline::TaskResult::Error { message }) = summary.tasks.get(&task.name) {
                r.error = Some(message.clone());
            }
            r
        })
        .collect()
}
