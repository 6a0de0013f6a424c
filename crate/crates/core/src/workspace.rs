// SPDX-License-Identifier: Apache-2.0

//! On-disk run store.
//!
//! ```text
//! <root>/designs/<design>/plan/{plan.json, design.c, spec.md}
//! <root>/designs/<design>/modules/<task>/{task.json, bundle.c, reference.c, spec.md, transcript.jsonl}
//! <root>/designs/<design>/modules/<task>/attempts/<k>/{rtl.v, harness.c, ec_output.txt, patch.json, transcript.jsonl}
//! <root>/designs/<design>/ledger.jsonl
//! <root>/reports/
//! ```
//!
//! The ledger is the source of truth for attempt history: an attempt
//! directory becomes visible only once its ledger line is appended, and it is
//! created by renaming a fully written temporary directory.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use crate::debugger::PatchOutcome;
use crate::ec::EcOutcome;
use crate::gateway::{read_transcript, write_transcript, GatewayError, Transcript};
use crate::model::{
    is_valid_design_name, AttemptRecord, CBundle, SubmoduleTask, TaskOrigin, TaskStatus, Tier, TimingRequirement,
};
use crate::planner::DesignPlan;

pub const LEDGER_FILE: &str = "ledger.jsonl";
const PLAN_FILE: &str = "plan.json";
const TASK_FILE: &str = "task.json";

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("workspace {0} does not exist")]
    Missing(PathBuf),
    #[error("corrupted ledger {path}, line {line}: {reason}")]
    CorruptLedger { path: PathBuf, line: usize, reason: String },
    #[error("corrupted workspace file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("task {task}: attempt index {got} is not consecutive (expected {expected})")]
    NonConsecutiveIndex { task: String, expected: u32, got: u32 },
    #[error("task {task}: status cannot change from {from} to {to}")]
    InvalidTransition { task: String, from: TaskStatus, to: TaskStatus },
    #[error("unknown task {design}/{task}")]
    UnknownTask { design: String, task: String },
    #[error("design name {0:?} is not usable as a directory name")]
    BadName(String),
    #[error(transparent)]
    Transcript(#[from] GatewayError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

/// Planning-time fields of a task; `task.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TaskFile {
    design: String,
    name: String,
    origin: TaskOrigin,
    bundle: CBundle,
    reference_source: String,
    refined_spec: String,
    timing: Option<TimingRequirement>,
    dependencies: Vec<String>,
}

impl TaskFile {
    fn of(task: &SubmoduleTask) -> Self {
        TaskFile {
            design: task.design.clone(),
            name: task.name.clone(),
            origin: task.origin,
            bundle: task.bundle.clone(),
            reference_source: task.reference_source.clone(),
            refined_spec: task.refined_spec.clone(),
            timing: task.timing,
            dependencies: task.dependencies.clone(),
        }
    }

    fn into_task(self) -> SubmoduleTask {
        SubmoduleTask {
            design: self.design,
            name: self.name,
            origin: self.origin,
            bundle: self.bundle,
            reference_source: self.reference_source,
            refined_spec: self.refined_spec,
            timing: self.timing,
            status: TaskStatus::Planned,
            attempts: Vec::new(),
            dependencies: self.dependencies,
        }
    }
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LedgerEvent {
    Attempt {
        task: String,
        index: u32,
        tier: Tier,
        outcome: EcOutcome,
        patch: Option<PatchOutcome>,
        wall_time: f64,
        status: TaskStatus,
    },
    Failed {
        task: String,
        reason: String,
        iterations: u32,
    },
}

type TaskKey = (String, String);

#[derive(Default)]
struct State {
    plans: BTreeMap<String, DesignPlan>,
    tasks: BTreeMap<TaskKey, SubmoduleTask>,
}

struct Inner {
    root: PathBuf,
    state: Mutex<State>,
    ledger: Mutex<()>,
}

/// Shared handle to a workspace directory.
#[derive(Clone)]
pub struct Workspace {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Workspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workspace").field("root", &self.inner.root).finish()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), WorkspaceError> {
    let tmp =
        path.with_file_name(format!(".{}.tmp", path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()));
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, WorkspaceError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| WorkspaceError::Corrupt { path: path.to_path_buf(), reason: e.to_string() })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("workspace records serialize");
    s.push('\n');
    s
}

fn sorted_dirs(path: &Path) -> Result<Vec<String>, WorkspaceError> {
    if !path.is_dir() {
        return Ok(Vec::new());
    }
    let mut names = Vec::new();
    for e in fs::read_dir(path).map_err(io(path))? {
        let e = e.map_err(io(path))?;
        if e.file_type().map_err(io(path))?.is_dir() {
            let name = e.file_name().to_string_lossy().into_owned();
            if !name.starts_with('.') {
                names.push(name);
            }
        }
    }
    names.sort();
    Ok(names)
}

impl Workspace {
    /// Opens (and with `create_if_missing`, creates) a workspace, reloading
    /// every design, task and attempt already stored there.
    pub fn open(root: impl AsRef<Path>, create_if_missing: bool) -> Result<Self, WorkspaceError> {
        let root = root.as_ref().to_path_buf();
        if !root.exists() {
            if !create_if_missing {
                return Err(WorkspaceError::Missing(root));
            }
            fs::create_dir_all(&root).map_err(io(&root))?;
        }
        fs::read_dir(&root).map_err(io(&root))?;
        let mut state = State::default();
        let designs_dir = root.join("designs");
        for design in sorted_dirs(&designs_dir)? {
            let ddir = designs_dir.join(&design);
            let plan_path = ddir.join("plan").join(PLAN_FILE);
            if plan_path.exists() {
                state.plans.insert(design.clone(), read_json(&plan_path)?);
            }
            let mdir = ddir.join("modules");
            for name in sorted_dirs(&mdir)? {
                let tf: TaskFile = read_json(&mdir.join(&name).join(TASK_FILE))?;
                state.tasks.insert((design.clone(), name), tf.into_task());
            }
            Self::replay_ledger(&ddir, &design, &mut state)?;
        }
        Ok(Workspace { inner: Arc::new(Inner { root, state: Mutex::new(state), ledger: Mutex::new(()) }) })
    }

    fn replay_ledger(ddir: &Path, design: &str, state: &mut State) -> Result<(), WorkspaceError> {
        let path = ddir.join(LEDGER_FILE);
        if !path.exists() {
            return Ok(());
        }
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let corrupt = |line: usize, reason: String| WorkspaceError::CorruptLedger { path: path.clone(), line, reason };
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(corrupt(text.lines().count(), "truncated final record".into()));
        }
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let event: LedgerEvent = serde_json::from_str(line).map_err(|e| corrupt(lineno, e.to_string()))?;
            match event {
                LedgerEvent::Attempt { task, index, tier, mut outcome, patch, wall_time, status } => {
                    let t = state
                        .tasks
                        .get_mut(&(design.to_string(), task.clone()))
                        .ok_or_else(|| corrupt(lineno, format!("attempt for unknown task `{task}`")))?;
                    if index as usize != t.attempts.len() {
                        return Err(corrupt(
                            lineno,
                            format!("task `{task}`: attempt {index} follows {} attempts", t.attempts.len()),
                        ));
                    }
                    if !t.status.can_transition_to(status) {
                        return Err(corrupt(
                            lineno,
                            format!("task `{task}`: invalid transition {} -> {status}", t.status),
                        ));
                    }
                    if (status == TaskStatus::Verified) != outcome.is_pass() {
                        return Err(corrupt(
                            lineno,
                            format!("task `{task}`: status {status} disagrees with the outcome"),
                        ));
                    }
                    let adir = ddir.join("modules").join(&task).join("attempts").join(index.to_string());
                    let read = |f: &str| {
                        let p = adir.join(f);
                        fs::read_to_string(&p).map_err(|e| corrupt(lineno, format!("{}: {e}", p.display())))
                    };
                    let rtl_text = read("rtl.v")?;
                    let harness_text = read("harness.c")?;
                    outcome.raw_output = read("ec_output.txt")?;
                    t.attempts.push(AttemptRecord {
                        index,
                        model_tier: tier,
                        rtl_text,
                        harness_text,
                        ec_outcome: outcome,
                        patch,
                        wall_time,
                    });
                    t.status = status;
                }
                LedgerEvent::Failed { task, iterations, .. } => {
                    let t = state
                        .tasks
                        .get_mut(&(design.to_string(), task.clone()))
                        .ok_or_else(|| corrupt(lineno, format!("failure for unknown task `{task}`")))?;
                    if !t.status.can_transition_to(TaskStatus::Failed) {
                        return Err(corrupt(
                            lineno,
                            format!("task `{task}`: invalid transition {} -> failed", t.status),
                        ));
                    }
                    if iterations != t.iterations() {
                        return Err(corrupt(
                            lineno,
                            format!(
                                "task `{task}`: failure after {iterations} iterations, ledger has {}",
                                t.iterations()
                            ),
                        ));
                    }
                    t.status = TaskStatus::Failed;
                }
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.inner.root
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.inner.root.join("reports")
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.inner.root.join(".scratch")
    }

    pub fn design_dir(&self, design: &str) -> PathBuf {
        self.inner.root.join("designs").join(design)
    }

    pub fn module_dir(&self, design: &str, task: &str) -> PathBuf {
        self.design_dir(design).join("modules").join(task)
    }

    pub fn attempt_dir(&self, design: &str, task: &str, index: u32) -> PathBuf {
        self.module_dir(design, task).join("attempts").join(index.to_string())
    }

    fn state(&self) -> MutexGuard<'_, State> {
        self.inner.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn designs(&self) -> Vec<String> {
        let st = self.state();
        let mut names: Vec<String> = st.plans.keys().cloned().collect();
        names.extend(st.tasks.keys().map(|(d, _)| d.clone()));
        names.sort();
        names.dedup();
        names
    }

    pub fn plan(&self, design: &str) -> Option<DesignPlan> {
        self.state().plans.get(design).cloned()
    }

    pub fn task(&self, design: &str, name: &str) -> Option<SubmoduleTask> {
        self.state().tasks.get(&(design.to_string(), name.to_string())).cloned()
    }

    /// Tasks stored under `design`, by name.
    pub fn tasks(&self, design: &str) -> Vec<SubmoduleTask> {
        self.state().tasks.iter().filter(|((d, _), _)| d == design).map(|(_, t)| t.clone()).collect()
    }

    /// Every stored task, by (design, name).
    pub fn all_tasks(&self) -> Vec<SubmoduleTask> {
        self.state().tasks.values().cloned().collect()
    }

    /// The task that realises `name` for `design`, following cross-design
    /// sharing recorded in the plan.
    pub fn resolve(&self, design: &str, name: &str) -> Option<SubmoduleTask> {
        let owner = self.plan(design).and_then(|p| p.owners.get(name).cloned()).unwrap_or_else(|| design.to_string());
        self.task(&owner, name)
    }

    pub fn save_plan(&self, plan: &DesignPlan, c_source: &str, spec_text: &str) -> Result<(), WorkspaceError> {
        if !is_valid_design_name(&plan.design) {
            return Err(WorkspaceError::BadName(plan.design.clone()));
        }
        let dir = self.design_dir(&plan.design).join("plan");
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        write_atomic(&dir.join("design.c"), c_source.as_bytes())?;
        write_atomic(&dir.join("spec.md"), spec_text.as_bytes())?;
        write_atomic(&dir.join(PLAN_FILE), to_json(plan).as_bytes())?;
        self.state().plans.insert(plan.design.clone(), plan.clone());
        Ok(())
    }

    /// Stores planning-time fields (bundle, spec, timing, dependencies).
    /// Attempt history is untouched.
    pub fn save_task(&self, task: &SubmoduleTask) -> Result<(), WorkspaceError> {
        let dir = self.module_dir(&task.design, &task.name);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        write_atomic(&dir.join("bundle.c"), task.bundle.source_text.as_bytes())?;
        write_atomic(&dir.join("reference.c"), task.reference_source.as_bytes())?;
        write_atomic(&dir.join("spec.md"), task.refined_spec.as_bytes())?;
        write_atomic(&dir.join(TASK_FILE), to_json(&TaskFile::of(task)).as_bytes())?;
        let mut st = self.state();
        let entry = st.tasks.entry((task.design.clone(), task.name.clone())).or_insert_with(|| task.clone());
        let attempts = std::mem::take(&mut entry.attempts);
        let status = entry.status;
        *entry = task.clone();
        entry.attempts = attempts;
        entry.status = status;
        Ok(())
    }

    /// Appends `transcript` to the task-level transcript (planning and
    /// classification calls).
    pub fn append_module_transcript(
        &self,
        design: &str,
        task: &str,
        transcript: &Transcript,
    ) -> Result<(), WorkspaceError> {
        if transcript.is_empty() {
            return Ok(());
        }
        let dir = self.module_dir(design, task);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = dir.join("transcript.jsonl");
        let mut all = if path.exists() { read_transcript(&path)? } else { Transcript::default() };
        all.entries.extend(transcript.entries.iter().cloned());
        write_transcript(&path, &all)?;
        Ok(())
    }

    fn append_ledger(&self, design: &str, event: &LedgerEvent) -> Result<(), WorkspaceError> {
        let _guard = self.inner.ledger.lock().unwrap_or_else(|e| e.into_inner());
        let path = self.design_dir(design).join(LEDGER_FILE);
        let mut line = serde_json::to_string(event).expect("ledger events serialize");
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io(&path))?;
        f.write_all(line.as_bytes()).map_err(io(&path))?;
        f.sync_data().map_err(io(&path))
    }

    /// Persists `attempt` and advances `task`: a passing outcome makes it
    /// Verified, anything else Generated.
    pub fn record_attempt(
        &self,
        task: &mut SubmoduleTask,
        attempt: AttemptRecord,
        transcript: &Transcript,
    ) -> Result<(), WorkspaceError> {
        let expected = task.attempts.len() as u32;
        if attempt.index != expected {
            return Err(WorkspaceError::NonConsecutiveIndex { task: task.name.clone(), expected, got: attempt.index });
        }
        let next = if attempt.ec_outcome.is_pass() { TaskStatus::Verified } else { TaskStatus::Generated };
        if !task.status.can_transition_to(next) {
            return Err(WorkspaceError::InvalidTransition { task: task.name.clone(), from: task.status, to: next });
        }
        let attempts = self.module_dir(&task.design, &task.name).join("attempts");
        fs::create_dir_all(&attempts).map_err(io(&attempts))?;
        let tmp = attempts.join(format!(".tmp-{}", attempt.index));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io(&tmp))?;
        }
        fs::create_dir(&tmp).map_err(io(&tmp))?;
        let put = |name: &str, bytes: &[u8]| {
            let p = tmp.join(name);
            fs::write(&p, bytes).map_err(io(&p))
        };
        put("rtl.v", attempt.rtl_text.as_bytes())?;
        put("harness.c", attempt.harness_text.as_bytes())?;
        put("ec_output.txt", attempt.ec_outcome.raw_output.as_bytes())?;
        if let Some(patch) = &attempt.patch {
            put("patch.json", to_json(patch).as_bytes())?;
        }
        write_transcript(&tmp.join("transcript.jsonl"), transcript)?;
        let dest = attempts.join(attempt.index.to_string());
        if dest.exists() {
            // Left by a crash between rename and ledger append; never indexed.
            fs::remove_dir_all(&dest).map_err(io(&dest))?;
        }
        fs::rename(&tmp, &dest).map_err(io(&dest))?;
        self.append_ledger(
            &task.design,
            &LedgerEvent::Attempt {
                task: task.name.clone(),
                index: attempt.index,
                tier: attempt.model_tier,
                outcome: attempt.ec_outcome.clone(),
                patch: attempt.patch.clone(),
                wall_time: attempt.wall_time,
                status: next,
            },
        )?;
        task.attempts.push(attempt);
        task.status = next;
        self.state().tasks.insert((task.design.clone(), task.name.clone()), task.clone());
        Ok(())
    }

    /// Marks `task` Failed. Called only by the repair loop on exhaustion.
    pub(crate) fn record_failure(&self, task: &mut SubmoduleTask, reason: &str) -> Result<(), WorkspaceError> {
        if !task.status.can_transition_to(TaskStatus::Failed) {
            return Err(WorkspaceError::InvalidTransition {
                task: task.name.clone(),
                from: task.status,
                to: TaskStatus::Failed,
            });
        }
        self.append_ledger(
            &task.design,
            &LedgerEvent::Failed { task: task.name.clone(), reason: reason.to_string(), iterations: task.iterations() },
        )?;
        task.status = TaskStatus::Failed;
        self.state().tasks.insert((task.design.clone(), task.name.clone()), task.clone());
        Ok(())
    }

    /// Writes `bytes` to `reports/<name>`.
    pub fn write_report(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, WorkspaceError> {
        let dir = self.reports_dir();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }
}
