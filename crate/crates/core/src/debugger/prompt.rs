// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{locate_bug, simplify_counterexample, CodeWindow, SimplifiedTrace};
use crate::ec::{CexReport, Diagnostic, EcVerdict};
use crate::gateway::{GatewayError, Message, ModelRequest, Purpose};
use crate::model::{AttemptRecord, SubmoduleTask, Tier};
use crate::prompts::Prompts;
use crate::template::render;

/// Feedback block for one failed attempt, chosen by outcome kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    Syntax { diagnostics: Vec<Diagnostic>, window: Option<CodeWindow> },
    Trace(SimplifiedTrace),
    RawTrace { reason: String, section: String },
    Timeout { seconds: f64, bound: u32 },
    ToolError { exit_code: Option<i32>, reason: String, tail: String },
}

fn tail(text: &str, lines: usize) -> String {
    let all: Vec<&str> = text.lines().collect();
    all[all.len().saturating_sub(lines)..].join("\n")
}

impl Feedback {
    /// Feedback for `attempt`, or `None` if it passed. Diagnostics are
    /// located in the file of `task` they name (RTL or harness).
    pub fn for_attempt(task: &SubmoduleTask, attempt: &AttemptRecord, radius: usize) -> Option<Feedback> {
        Some(match &attempt.ec_outcome.verdict {
            EcVerdict::Pass => return None,
            EcVerdict::SyntaxError { diagnostics } => {
                let rtl_file = format!("{}.v", task.name);
                let window = diagnostics.iter().find_map(|d| {
                    let text = if d.file.ends_with(&rtl_file) || d.file == "rtl.v" {
                        &attempt.rtl_text
                    } else if d.file.ends_with("harness.c") {
                        &attempt.harness_text
                    } else {
                        return None;
                    };
                    locate_bug(text, d, radius).ok()
                });
                Feedback::Syntax { diagnostics: diagnostics.clone(), window }
            }
            EcVerdict::Counterexample { report } => match report {
                CexReport::Parsed(trace) => Feedback::Trace(simplify_counterexample(trace, &task.name)),
                CexReport::Unparsed { reason, section } => {
                    Feedback::RawTrace { reason: reason.clone(), section: section.clone() }
                }
            },
            EcVerdict::Timeout { seconds, bound } => Feedback::Timeout { seconds: *seconds, bound: *bound },
            EcVerdict::ToolError { exit_code, reason } => Feedback::ToolError {
                exit_code: *exit_code,
                reason: reason.clone(),
                tail: tail(&attempt.ec_outcome.raw_output, 20),
            },
        })
    }

    pub fn render(&self, prompts: &Prompts) -> String {
        let mut v: BTreeMap<&str, String> = BTreeMap::new();
        let template = match self {
            Feedback::Syntax { diagnostics, window } => {
                let list: Vec<String> = diagnostics
                    .iter()
                    .map(|d| match d.line {
                        Some(l) => format!("- {}:{}: {}", d.file, l, d.message),
                        None => format!("- {}: {}", d.file, d.message),
                    })
                    .collect();
                v.insert("diagnostics", list.join("\n"));
                v.insert("window", window.as_ref().map(ToString::to_string).unwrap_or_default());
                &prompts.feedback_syntax
            }
            Feedback::Trace(t) => {
                v.insert("trace", t.to_string());
                &prompts.feedback_counterexample
            }
            Feedback::RawTrace { reason, section } => {
                v.insert("reason", reason.clone());
                v.insert("section", section.clone());
                &prompts.feedback_counterexample_raw
            }
            Feedback::Timeout { seconds, bound } => {
                v.insert("seconds", format!("{seconds}"));
                v.insert("bound", bound.to_string());
                &prompts.feedback_timeout
            }
            Feedback::ToolError { exit_code, reason, tail } => {
                v.insert("exit_code", exit_code.map_or("none".into(), |c| c.to_string()));
                v.insert("reason", reason.clone());
                v.insert("tail", tail.clone());
                &prompts.feedback_tool_error
            }
        };
        render(template, &v).unwrap_or_else(|e| format!("{e}"))
    }
}

/// Repair request for `attempt` of `task` at repair iteration `iteration`.
#[allow(clippy::too_many_arguments)]
pub fn build_repair_prompt(
    task: &SubmoduleTask,
    attempt: &AttemptRecord,
    feedback: &Feedback,
    iteration: u32,
    limit: u32,
    tier: Tier,
    prompts: &Prompts,
) -> Result<ModelRequest, GatewayError> {
    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    v.insert("iteration", iteration.to_string());
    v.insert("limit", limit.to_string());
    v.insert("task", task.name.clone());
    v.insert("spec", task.refined_spec.clone());
    v.insert("bundle", task.bundle.source_text.clone());
    v.insert("rtl", attempt.rtl_text.clone());
    v.insert("harness", attempt.harness_text.clone());
    v.insert("feedback", feedback.render(prompts));
    let request_id = format!("{}/{}/repair/{iteration}", task.design, task.name);
    let user = render(&prompts.repair_user, &v)
        .map_err(|e| GatewayError::InvalidRequest { request_id: request_id.clone(), reason: e.to_string() })?;
    ModelRequest::new(
        request_id,
        tier,
        Purpose::Repair,
        vec![Message::system(prompts.repair_system.trim_end()), Message::user(user)],
    )
}
