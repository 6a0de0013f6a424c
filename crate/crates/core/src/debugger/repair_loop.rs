// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use super::{apply_patch, build_repair_prompt, parse_patch, Feedback, PatchOutcome, PatchTarget};
use crate::clock::Clock;
use crate::ec::{Checker, EcError, EcJob};
use crate::gateway::{select_tier, EscalationPolicy, Gateway, GatewayError, Message, ModelRequest, Transcript};
use crate::model::{AttemptRecord, SubmoduleTask, TaskStatus, TimingRequirement};
use crate::prompts::Prompts;
use crate::template::render;
use crate::workspace::{Workspace, WorkspaceError};

#[derive(Debug, Clone)]
pub struct DebugSettings {
    /// Highest repair iteration index; attempts stop at this index.
    pub limit: u32,
    /// Lines shown either side of a diagnostic.
    pub radius: usize,
    pub policy: EscalationPolicy,
    pub prompts: Prompts,
    pub clock: Clock,
}

impl Default for DebugSettings {
    fn default() -> Self {
        DebugSettings {
            limit: 20,
            radius: 5,
            policy: EscalationPolicy::default(),
            prompts: Prompts::builtin(),
            clock: Clock::System,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DebugStatus {
    Fixed,
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct DebugOutcome {
    pub status: DebugStatus,
    pub iterations_used: u32,
    pub final_attempt: AttemptRecord,
}

#[derive(Debug, thiserror::Error)]
pub enum DebugError {
    #[error("task {0} has no failed attempt to repair")]
    NothingToRepair(String),
    #[error("task {0} has no timing requirement")]
    Untimed(String),
    #[error("repair iteration {iteration}: {source}")]
    Gateway {
        iteration: u32,
        #[source]
        source: GatewayError,
    },
    #[error("repair iteration {iteration}: {source}")]
    Checker {
        iteration: u32,
        #[source]
        source: EcError,
    },
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
}

/// Everything the loop needs besides the task itself.
pub struct DebugContext<'a> {
    pub workspace: &'a Workspace,
    pub gateway: &'a Gateway,
    pub checker: &'a dyn Checker,
    /// Verified RTL of the task's dependencies, in schedule order.
    pub dependency_rtl: &'a [(String, String)],
    pub settings: &'a DebugSettings,
}

enum Reply {
    Patched { rtl: String, harness: String, outcome: PatchOutcome },
    Rejected(PatchOutcome),
}

fn try_patch(
    reply: &str,
    rtl: &str,
    harness: &str,
) -> Result<(String, String, super::PatchProposal), (Option<super::PatchProposal>, String)> {
    let proposal = parse_patch(reply).map_err(|e| (None, e.to_string()))?;
    let (new_rtl, new_harness) = match proposal.target {
        PatchTarget::Rtl => {
            (apply_patch(rtl, &proposal).map_err(|e| (Some(proposal.clone()), e.to_string()))?, harness.to_string())
        }
        PatchTarget::Harness => {
            (rtl.to_string(), apply_patch(harness, &proposal).map_err(|e| (Some(proposal.clone()), e.to_string()))?)
        }
    };
    Ok((new_rtl, new_harness, proposal))
}

/// Asks for a patch; a reply that fails to parse or apply gets exactly one
/// reprompt carrying the error.
fn request_patch(
    ctx: &DebugContext<'_>,
    request: &ModelRequest,
    previous: &AttemptRecord,
    transcript: &mut Transcript,
    iteration: u32,
) -> Result<Reply, DebugError> {
    let gw = |source| DebugError::Gateway { iteration, source };
    let first = ctx.gateway.complete(request, transcript).map_err(gw)?;
    let error = match try_patch(&first.text, &previous.rtl_text, &previous.harness_text) {
        Ok((rtl, harness, proposal)) => {
            return Ok(Reply::Patched { rtl, harness, outcome: PatchOutcome::Applied { proposal } })
        }
        Err((_, error)) => error,
    };
    let retry_text =
        render(&ctx.settings.prompts.repair_retry, &[("error", error)].into_iter().collect()).map_err(|e| {
            gw(GatewayError::InvalidRequest { request_id: request.request_id.clone(), reason: e.to_string() })
        })?;
    let mut messages = request.messages.clone();
    messages.push(Message::assistant(first.text));
    messages.push(Message::user(retry_text));
    let retry = ModelRequest::new(format!("{}/retry", request.request_id), request.tier, request.purpose, messages)
        .map_err(gw)?;
    let second = ctx.gateway.complete(&retry, transcript).map_err(gw)?;
    Ok(match try_patch(&second.text, &previous.rtl_text, &previous.harness_text) {
        Ok((rtl, harness, proposal)) => Reply::Patched { rtl, harness, outcome: PatchOutcome::Applied { proposal } },
        Err((proposal, error)) => Reply::Rejected(PatchOutcome::Rejected { proposal, error }),
    })
}

fn check(
    ctx: &DebugContext<'_>,
    task: &SubmoduleTask,
    timing: TimingRequirement,
    rtl: &str,
    harness: &str,
    iteration: u32,
) -> Result<crate::ec::EcOutcome, DebugError> {
    let mut modules: Vec<(&str, &str)> = ctx.dependency_rtl.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    modules.push((task.name.as_str(), rtl));
    let job = EcJob {
        design: &task.design,
        task: &task.name,
        timing,
        harness,
        reference: &task.reference_source,
        rtl: modules,
    };
    let scratch: &Path = &ctx.workspace.scratch_dir();
    ctx.checker
        .check(&job, scratch)
        .map(|(outcome, _)| outcome)
        .map_err(|source| DebugError::Checker { iteration, source })
}

/// Repairs `task` from its last failed attempt until the checker passes or
/// the iteration limit is reached. Resumes after the last recorded
/// iteration, so an interrupted loop continues where it stopped.
///
/// On exhaustion the task is marked Failed. Gateway and checker errors
/// abort the loop and leave the task Generated.
pub fn debug_loop(task: &mut SubmoduleTask, ctx: &DebugContext<'_>) -> Result<DebugOutcome, DebugError> {
    let settings = ctx.settings;
    let timing = task.timing.ok_or_else(|| DebugError::Untimed(task.name.clone()))?;
    match task.last_attempt() {
        Some(a) if !a.ec_outcome.is_pass() && task.status == TaskStatus::Generated => {}
        _ => return Err(DebugError::NothingToRepair(task.name.clone())),
    }
    for iteration in task.iterations() + 1..=settings.limit {
        let previous = task.last_attempt().expect("checked above").clone();
        let watch = settings.clock.start();
        let tier = select_tier(iteration, &settings.policy);
        let feedback = Feedback::for_attempt(task, &previous, settings.radius).expect("previous attempt failed");
        let request =
            build_repair_prompt(task, &previous, &feedback, iteration, settings.limit, tier, &settings.prompts)
                .map_err(|source| DebugError::Gateway { iteration, source })?;
        let mut transcript = Transcript::default();
        let attempt = match request_patch(ctx, &request, &previous, &mut transcript, iteration)? {
            Reply::Patched { rtl, harness, outcome } => {
                let ec_outcome = check(ctx, task, timing, &rtl, &harness, iteration)?;
                AttemptRecord {
                    index: iteration,
                    model_tier: tier,
                    rtl_text: rtl,
                    harness_text: harness,
                    ec_outcome,
                    patch: Some(outcome),
                    wall_time: watch.elapsed(),
                }
            }
            // The files are unchanged, so the previous verdict still holds.
            Reply::Rejected(outcome) => AttemptRecord {
                index: iteration,
                model_tier: tier,
                rtl_text: previous.rtl_text.clone(),
                harness_text: previous.harness_text.clone(),
                ec_outcome: previous.ec_outcome.clone(),
                patch: Some(outcome),
                wall_time: watch.elapsed(),
            },
        };
        tracing::info!(task = %task.name, iteration, %tier, verdict = attempt.ec_outcome.verdict.kind_name(), "repair attempt");
        let passed = attempt.ec_outcome.is_pass();
        ctx.workspace.record_attempt(task, attempt, &transcript)?;
        if passed {
            return Ok(DebugOutcome {
                status: DebugStatus::Fixed,
                iterations_used: iteration,
                final_attempt: task.last_attempt().expect("just recorded").clone(),
            });
        }
    }
    let reason = format!("no passing attempt within {} repair iterations", settings.limit);
    ctx.workspace.record_failure(task, &reason)?;
    Ok(DebugOutcome {
        status: DebugStatus::Exhausted,
        iterations_used: task.iterations(),
        final_attempt: task.last_attempt().expect("checked above").clone(),
    })
}
