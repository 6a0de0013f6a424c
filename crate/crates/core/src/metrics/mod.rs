// SPDX-License-Identifier: Apache-2.0

//! Run ledgers and the success-rate and iteration metrics computed from
//! them, plus report rendering and the benchmark driver.
//!
//! For `N` runs of a task with repair limit `L`:
//!
//! - ISR = 100 * (runs passing with zero repair iterations) / N
//! - I'_j = I_j for a run that finally passed, 2L otherwise
//! - I_avg, I_std = population mean and standard deviation of I'_j
//! - FSR = 100 * (runs that finally passed) / N
//!
//! Per design, I_total sums I_avg over the top task and its transitive
//! dependencies, and design FSR multiplies their FSRs; each dependency is
//! counted once however many paths reach it.

mod bench;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use bench::{run_benchmark, BenchmarkManifest, ManifestEntry};
pub use report::{
    compute_report, render_json, render_table, DesignRow, MetricsReport, ModuleKind, TaskRow, LINE_RULE, REPORT_SCHEMA,
};

use crate::model::{SubmoduleTask, TaskStatus};
use crate::planner::DependencyGraph;
use crate::workspace::Workspace;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("no runs to evaluate")]
    Empty,
    #[error("no metric for dependency `{0}`")]
    MissingMetric(String),
    #[error("ledger has no record for task {design}/{task}")]
    Incomplete { design: String, task: String },
    #[error("task {0} is not verified")]
    NotVerified(String),
    #[error("invalid run record {design}/{task}#{run}: {reason}")]
    InvalidRecord { design: String, task: String, run: u32, reason: String },
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt ledger {path}, line {line}: {reason}")]
    CorruptLedger { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Workspace(#[from] crate::workspace::WorkspaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Verified,
    /// The repair limit was reached.
    Exhausted,
    /// The task never completed: blocked by a dependency, aborted, or an
    /// upstream error.
    NotCompleted,
}

/// One run of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub design: String,
    pub task: String,
    pub run: u32,
    pub passed_initially: bool,
    /// Repair iterations used (I_j).
    pub iterations: u32,
    pub final_passed: bool,
    pub limit: u32,
    pub outcome: RunOutcome,
    /// Non-blank, non-comment RTL lines of the module and of the module
    /// plus its transitive dependencies; set for verified runs.
    pub module_lines: Option<usize>,
    pub total_lines: Option<usize>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |reason: &str| {
            Err(MetricsError::InvalidRecord {
                design: self.design.clone(),
                task: self.task.clone(),
                run: self.run,
                reason: reason.to_string(),
            })
        };
        if self.passed_initially && (self.iterations != 0 || !self.final_passed) {
            return bad("an initial pass must have zero iterations and a final pass");
        }
        if self.iterations > self.limit {
            return bad("iterations exceed the limit");
        }
        if self.final_passed != (self.outcome == RunOutcome::Verified) {
            return bad("final_passed disagrees with the outcome");
        }
        Ok(())
    }

    /// Record for the current state of `task`.
    pub fn from_task(ws: &Workspace, design: &str, task: &SubmoduleTask, run: u32, limit: u32) -> Self {
        let outcome = match task.status {
            TaskStatus::Verified => RunOutcome::Verified,
            TaskStatus::Failed => RunOutcome::Exhausted,
            _ => RunOutcome::NotCompleted,
        };
        let lines = (outcome == RunOutcome::Verified).then(|| count_rtl_lines(ws, design, &task.name).ok()).flatten();
        RunRecord {
            design: task.design.clone(),
            task: task.name.clone(),
            run,
            passed_initially: task.passed_initially(),
            iterations: task.iterations(),
            final_passed: outcome == RunOutcome::Verified,
            limit,
            outcome,
            module_lines: lines.map(|l| l.0),
            total_lines: lines.map(|l| l.1),
            error: None,
        }
    }
}

/// Records of any number of runs, tasks and designs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub records: Vec<RunRecord>,
}

impl RunLedger {
    pub fn push(&mut self, record: RunRecord) -> Result<(), MetricsError> {
        record.validate()?;
        self.records.push(record);
        Ok(())
    }

    /// Records grouped by (design, task), in key order.
    pub fn by_task(&self) -> BTreeMap<(String, String), Vec<RunRecord>> {
        let mut map: BTreeMap<(String, String), Vec<RunRecord>> = BTreeMap::new();
        for r in &self.records {
            map.entry((r.design.clone(), r.task.clone())).or_default().push(r.clone());
        }
        map
    }

    /// One JSON object per line.
    pub fn write(&self, path: &Path) -> Result<(), MetricsError> {
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&serde_json::to_string(r).expect("records serialize"));
            text.push('\n');
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|source| MetricsError::Io { path: dir.to_path_buf(), source })?;
        }
        std::fs::write(path, text).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self, MetricsError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })?;
        let mut ledger = RunLedger::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: RunRecord = serde_json::from_str(line).map_err(|e| MetricsError::CorruptLedger {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            ledger.push(record)?;
        }
        Ok(ledger)
    }

    /// One record (run 0) per planned task of every design in `ws`.
    pub fn from_workspace(ws: &Workspace, limit: u32) -> Self {
        let mut ledger = RunLedger::default();
        for design in ws.designs() {
            let Some(plan) = ws.plan(&design) else { continue };
            for name in &plan.schedule {
                if plan.owners.contains_key(name) {
                    continue;
                }
                if let Some(task) = ws.task(&design, name) {
                    ledger.records.push(RunRecord::from_task(ws, &design, &task, 0, limit.max(task.iterations())));
                }
            }
        }
        ledger
    }
}

fn nonempty(runs: &[RunRecord]) -> Result<f64, MetricsError> {
    if runs.is_empty() {
        Err(MetricsError::Empty)
    } else {
        Ok(runs.len() as f64)
    }
}

/// Initial success rate, percent.
pub fn isr(runs: &[RunRecord]) -> Result<f64, MetricsError> {
    let n = nonempty(runs)?;
    Ok(100.0 * runs.iter().filter(|r| r.passed_initially).count() as f64 / n)
}

/// Final success rate, percent.
pub fn fsr(runs: &[RunRecord]) -> Result<f64, MetricsError> {
    let n = nonempty(runs)?;
    Ok(100.0 * runs.iter().filter(|r| r.final_passed).count() as f64 / n)
}

/// I_j for a passing run, twice the limit for a failed one.
pub fn adjusted_iterations(run: &RunRecord, limit: u32) -> f64 {
    if run.final_passed {
        run.iterations as f64
    } else {
        2.0 * limit as f64
    }
}

/// Population mean and standard deviation of the adjusted iterations.
pub fn avg_and_std(runs: &[RunRecord], limit: u32) -> Result<(f64, f64), MetricsError> {
    let n = nonempty(runs)?;
    let values: Vec<f64> = runs.iter().map(|r| adjusted_iterations(r, limit)).collect();
    let mean = compensated_sum(values.iter().copied()) / n;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
    Ok((mean, var.sqrt()))
}

/// Neumaier-compensated sum, so that e.g. 0.70 + 3.45 + 0.90 is 5.05.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// I_avg of `task` plus that of each transitive dependency, once each.
pub fn total_effort(task: &str, graph: &DependencyGraph, i_avg: &BTreeMap<String, f64>) -> Result<f64, MetricsError> {
    let get = |n: &str| i_avg.get(n).copied().ok_or_else(|| MetricsError::MissingMetric(n.to_string()));
    let mut values = vec![get(task)?];
    for dep in graph.transitive_callees(task) {
        values.push(get(&dep)?);
    }
    Ok(compensated_sum(values))
}

/// Product of the FSRs (percent) of `task` and its transitive dependencies.
pub fn design_fsr(task: &str, graph: &DependencyGraph, fsr: &BTreeMap<String, f64>) -> Result<f64, MetricsError> {
    let get = |n: &str| fsr.get(n).copied().ok_or_else(|| MetricsError::MissingMetric(n.to_string()));
    let mut product = get(task)? / 100.0;
    for dep in graph.transitive_callees(task) {
        product *= get(&dep)? / 100.0;
    }
    Ok(100.0 * product)
}

/// Lines that hold code: blank lines and lines holding only `//` or
/// `/* */` comments are not counted.
pub fn count_lines(text: &str) -> usize {
    let comments = Regex::new(r"(?s)/\*.*?\*/|//[^\n]*").expect("static regex");
    let stripped =
        comments.replace_all(text, |c: &regex::Captures<'_>| c[0].chars().filter(|&ch| ch == '\n').collect::<String>());
    stripped.lines().filter(|l| !l.trim().is_empty()).count()
}

/// (module lines, module plus transitive dependency lines) of a verified task.
pub fn count_rtl_lines(ws: &Workspace, design: &str, task: &str) -> Result<(usize, usize), MetricsError> {
    let lines_of = |name: &str| -> Result<usize, MetricsError> {
        let t = ws
            .resolve(design, name)
            .ok_or_else(|| MetricsError::Incomplete { design: design.to_string(), task: name.to_string() })?;
        if t.status != TaskStatus::Verified {
            return Err(MetricsError::NotVerified(name.to_string()));
        }
        Ok(count_lines(&t.last_attempt().expect("verified task has attempts").rtl_text))
    };
    let module = lines_of(task)?;
    let mut total = module;
    if let Some(plan) = ws.plan(design) {
        for dep in plan.graph.transitive_dependencies(task) {
            total += lines_of(&dep)?;
        }
    }
    Ok((module, total))
}
