// SPDX-License-Identifier: Apache-2.0

//! End-to-end flow per design: plan, then for each task in schedule order
//! classify timing, generate, check, and repair, gated on dependencies.
//!
//! Tasks that already reached a terminal status are skipped, so re-running
//! over a finished workspace issues no model or checker calls.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::config::{ConfigError, FailurePolicy, PipelineConfig};
use crate::debugger::{debug_loop, DebugContext, DebugError, DebugSettings};
use crate::ec::{Checker, EcJob, EcRunner, ToolProfile};
use crate::gateway::{Gateway, ModelBackend, RemoteBackend, ReplayBackend, Transcript};
use crate::model::{AttemptRecord, DesignInput, SubmoduleTask, TaskStatus, TimingRequirement};
use crate::planner::compiler::CompilerConfig;
use crate::planner::{plan_design, plan_monolithic, DesignPlan, PlanError};
use crate::prompts::Prompts;
use crate::synth::{classify_timing, generate_initial, HarnessExemplar, SynthError, INITIAL_TIER};
use crate::workspace::{Workspace, WorkspaceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Decomposed,
    Monolithic,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "decomposed" => Ok(Mode::Decomposed),
            "monolithic" => Ok(Mode::Monolithic),
            other => Err(format!("unknown mode `{other}` (decomposed or monolithic)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("design {design}: {source}")]
    Plan {
        design: String,
        #[source]
        source: PlanError,
    },
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Setup(String),
}

/// What happened to one task in this invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum TaskResult {
    Verified {
        iterations: u32,
    },
    Failed {
        iterations: u32,
    },
    /// A dependency did not verify.
    Blocked {
        dependency: String,
    },
    /// Not attempted because the design was aborted.
    Aborted,
    /// Generation or checking could not complete.
    Error {
        message: String,
    },
}

impl TaskResult {
    pub fn is_verified(&self) -> bool {
        matches!(self, TaskResult::Verified { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub design: String,
    pub top: String,
    /// Task name -> result, for tasks this design owns or reuses.
    pub tasks: BTreeMap<String, TaskResult>,
}

impl DesignSummary {
    pub fn top_verified(&self) -> bool {
        self.tasks.get(&self.top).is_some_and(TaskResult::is_verified)
    }
}

/// Everything a pipeline run needs besides the designs.
pub struct Pipeline {
    pub workspace: Workspace,
    pub gateway: Gateway,
    pub checker: Arc<dyn Checker>,
    pub compiler: CompilerConfig,
    pub prompts: Prompts,
    pub exemplars: Vec<HarnessExemplar>,
    pub debug: DebugSettings,
    pub failure_policy: FailurePolicy,
    pub timeframe_overrides: BTreeMap<String, u32>,
    pub task_parallelism: usize,
}

/// Model backend selected by `config`.
pub fn backend_from_config(config: &PipelineConfig) -> Result<Arc<dyn ModelBackend>, PipelineError> {
    match (&config.replay_dir, &config.remote) {
        (Some(dir), _) => Ok(Arc::new(
            ReplayBackend::from_dir(dir).map_err(|e| PipelineError::Setup(format!("replay transcripts: {e}")))?,
        )),
        (None, Some(remote)) => Ok(Arc::new(
            RemoteBackend::new(remote.clone()).map_err(|e| PipelineError::Setup(format!("remote backend: {e}")))?,
        )),
        (None, None) => Err(PipelineError::Setup("no model backend configured".into())),
    }
}

/// Checker selected by `config`.
pub fn checker_from_config(config: &PipelineConfig) -> Result<EcRunner, PipelineError> {
    let profile = ToolProfile::resolve(&config.ec.profile).map_err(|e| PipelineError::Setup(e.to_string()))?;
    Ok(EcRunner::new(
        profile,
        config.ec.command.clone(),
        config.ec.default_bound,
        config.ec.timeout_secs,
        config.parallelism.ec_jobs,
    ))
}

impl Pipeline {
    /// Assembles a pipeline over `workspace` with the given backends and the
    /// remaining settings from `config`.
    pub fn new(
        config: &PipelineConfig,
        workspace: Workspace,
        backend: Arc<dyn ModelBackend>,
        checker: Arc<dyn Checker>,
    ) -> Result<Self, PipelineError> {
        let prompts = match &config.prompt_dir {
            Some(dir) => Prompts::with_overrides(dir).map_err(|e| PipelineError::Setup(format!("prompt_dir: {e}")))?,
            None => Prompts::builtin(),
        };
        let exemplars = match &config.exemplar_dir {
            Some(dir) => HarnessExemplar::load_dir(dir).map_err(|e| PipelineError::Setup(e.to_string()))?,
            None => HarnessExemplar::builtin(),
        };
        let clock = if config.frozen_clock || config.is_replay() { Clock::Frozen } else { Clock::System };
        Ok(Pipeline {
            workspace,
            gateway: Gateway::new(backend, config.parallelism.model_requests),
            checker,
            compiler: config.compiler.clone(),
            debug: DebugSettings {
                limit: config.limit,
                radius: config.window_radius,
                policy: config.escalation,
                prompts: prompts.clone(),
                clock,
            },
            prompts,
            exemplars,
            failure_policy: config.failure_policy,
            timeframe_overrides: config.timeframe_overrides.clone(),
            task_parallelism: config.parallelism.tasks,
        })
    }

    /// Plans every design first (so later designs can reuse earlier tasks),
    /// then runs them in order.
    pub fn run(&self, inputs: &[DesignInput], mode: Mode) -> Result<Vec<DesignSummary>, PipelineError> {
        let mut plans = Vec::new();
        for input in inputs {
            self.plan(input, mode)?;
            plans.push(self.workspace.plan(&input.design_name).expect("plan just saved"));
        }
        plans.iter().map(|plan| self.execute(plan)).collect()
    }

    pub fn plan(&self, input: &DesignInput, mode: Mode) -> Result<(), PipelineError> {
        let planned = match mode {
            Mode::Decomposed => plan_design(input, &self.workspace, &self.gateway, &self.compiler, &self.prompts),
            Mode::Monolithic => plan_monolithic(input, &self.workspace),
        };
        planned.map(|_| ()).map_err(|source| PipelineError::Plan { design: input.design_name.clone(), source })
    }

    /// Verified RTL of every transitive dependency of `name`, dependencies first.
    fn dependency_rtl(&self, plan: &DesignPlan, name: &str) -> Vec<(String, String)> {
        let deps = plan.graph.transitive_dependencies(name);
        plan.schedule
            .iter()
            .filter(|n| deps.contains(*n))
            .filter_map(|n| {
                let t = self.workspace.resolve(&plan.design, n)?;
                Some((n.clone(), t.last_attempt()?.rtl_text.clone()))
            })
            .collect()
    }

    fn direct_dependency_rtl(&self, plan: &DesignPlan, name: &str) -> Vec<(String, String)> {
        let direct: BTreeSet<String> = plan.graph.dependencies(name).into_iter().collect();
        self.dependency_rtl(plan, name).into_iter().filter(|(n, _)| direct.contains(n)).collect()
    }

    fn timing_for(&self, task: &mut SubmoduleTask) -> Result<TimingRequirement, String> {
        if let Some(t) = task.timing {
            return Ok(t);
        }
        let timing = match self.timeframe_overrides.get(&format!("{}/{}", task.design, task.name)) {
            Some(0) => TimingRequirement::Combinational,
            Some(&n) => TimingRequirement::sequential(n).expect("nonzero"),
            None => {
                let mut transcript = Transcript::default();
                let result = classify_timing(task, &self.gateway, &mut transcript, &self.prompts);
                self.workspace
                    .append_module_transcript(&task.design, &task.name, &transcript)
                    .map_err(|e| e.to_string())?;
                result.map_err(|e| e.to_string())?
            }
        };
        task.timing = Some(timing);
        self.workspace.save_task(task).map_err(|e| e.to_string())?;
        Ok(timing)
    }

    fn initial_attempt(&self, plan: &DesignPlan, task: &mut SubmoduleTask) -> Result<(), String> {
        let timing = self.timing_for(task)?;
        let watch = self.debug.clock.start();
        let mut transcript = Transcript::default();
        let generated = generate_initial(
            task,
            &self.direct_dependency_rtl(plan, &task.name),
            &self.gateway,
            &mut transcript,
            &self.prompts,
            &self.exemplars,
        );
        let generated = match generated {
            Ok(g) => g,
            Err(e) => {
                // Keep the exchange: every consumed response is persisted.
                self.workspace
                    .append_module_transcript(&task.design, &task.name, &transcript)
                    .map_err(|w| w.to_string())?;
                return Err(match e {
                    SynthError::Gateway(g) => format!("initial generation: {g}"),
                    other => format!("initial generation: {other}"),
                });
            }
        };
        let deps = self.dependency_rtl(plan, &task.name);
        let mut modules: Vec<(&str, &str)> = deps.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
        modules.push((&task.name, &generated.rtl_text));
        let job = EcJob {
            design: &task.design,
            task: &task.name,
            timing,
            harness: &generated.harness_text,
            reference: &task.reference_source,
            rtl: modules,
        };
        let (outcome, _) = self
            .checker
            .check(&job, &self.workspace.scratch_dir())
            .map_err(|e| format!("equivalence check of the initial attempt: {e}"))?;
        tracing::info!(task = %task.name, verdict = outcome.verdict.kind_name(), "initial attempt");
        let attempt = AttemptRecord {
            index: 0,
            model_tier: INITIAL_TIER,
            rtl_text: generated.rtl_text,
            harness_text: generated.harness_text,
            ec_outcome: outcome,
            patch: None,
            wall_time: watch.elapsed(),
        };
        self.workspace.record_attempt(task, attempt, &transcript).map_err(|e| e.to_string())
    }

    /// Drives one task as far as it goes in this invocation.
    fn process(&self, plan: &DesignPlan, name: &str) -> TaskResult {
        let Some(mut task) = self.workspace.resolve(&plan.design, name) else {
            return TaskResult::Error { message: format!("task {name} missing from the workspace") };
        };
        let mut run = || -> Result<(), String> {
            if task.status == TaskStatus::Planned {
                self.initial_attempt(plan, &mut task)?;
            }
            if task.status == TaskStatus::Generated {
                let deps = self.dependency_rtl(plan, name);
                let ctx = DebugContext {
                    workspace: &self.workspace,
                    gateway: &self.gateway,
                    checker: self.checker.as_ref(),
                    dependency_rtl: &deps,
                    settings: &self.debug,
                };
                debug_loop(&mut task, &ctx).map_err(|e: DebugError| e.to_string())?;
            }
            Ok(())
        };
        if let Err(message) = run() {
            tracing::warn!(design = %plan.design, task = %name, %message, "task error");
            return TaskResult::Error { message };
        }
        match task.status {
            TaskStatus::Verified => TaskResult::Verified { iterations: task.iterations() },
            TaskStatus::Failed => TaskResult::Failed { iterations: task.iterations() },
            other => TaskResult::Error { message: format!("task stopped in status {other}") },
        }
    }

    fn terminal_result(task: &SubmoduleTask) -> Option<TaskResult> {
        match task.status {
            TaskStatus::Verified => Some(TaskResult::Verified { iterations: task.iterations() }),
            TaskStatus::Failed => Some(TaskResult::Failed { iterations: task.iterations() }),
            _ => None,
        }
    }

    /// Runs the tasks of a planned design in dependency waves of at most
    /// `task_parallelism` tasks.
    pub fn execute(&self, plan: &DesignPlan) -> Result<DesignSummary, PipelineError> {
        let mut results: BTreeMap<String, TaskResult> = BTreeMap::new();
        let mut aborted = false;
        let mut remaining: Vec<String> = plan.schedule.clone();
        while !remaining.is_empty() {
            let mut wave = Vec::new();
            let mut deferred = Vec::new();
            for name in remaining {
                if aborted {
                    results.insert(name, TaskResult::Aborted);
                    continue;
                }
                if let Some(r) = self.workspace.resolve(&plan.design, &name).as_ref().and_then(Self::terminal_result) {
                    results.insert(name, r);
                    continue;
                }
                let deps = plan.graph.dependencies(&name);
                if let Some(bad) = deps.iter().find(|d| results.get(*d).is_some_and(|r| !r.is_verified())) {
                    results.insert(name, TaskResult::Blocked { dependency: bad.clone() });
                    continue;
                }
                let ready = deps.iter().all(|d| results.get(d).is_some_and(TaskResult::is_verified));
                if ready && wave.len() < self.task_parallelism {
                    wave.push(name);
                } else {
                    deferred.push(name);
                }
            }
            let done: Vec<(String, TaskResult)> = if wave.len() <= 1 {
                wave.into_iter()
                    .map(|n| {
                        let r = self.process(plan, &n);
                        (n, r)
                    })
                    .collect()
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = wave
                        .into_iter()
                        .map(|n| {
                            s.spawn(move || {
                                let r = self.process(plan, &n);
                                (n, r)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("task worker panicked")).collect()
                })
            };
            for (name, result) in done {
                if !result.is_verified() && self.failure_policy == FailurePolicy::AbortDesign {
                    aborted = true;
                }
                results.insert(name, result);
            }
            remaining = deferred;
        }
        Ok(DesignSummary { design: plan.design.clone(), top: plan.top.clone(), tasks: results })
    }
}
