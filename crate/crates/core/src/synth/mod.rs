// SPDX-License-Identifier: Apache-2.0

//! Initial generation: timing classification, then RTL plus verification
//! harness from the reference bundle, the task's specification, and the
//! verified RTL of its dependencies.

mod lint;

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use lint::{declared_modules, instantiated_modules, lint_harness, lint_rtl, LintFinding};

use crate::gateway::{Gateway, GatewayError, Message, ModelRequest, Purpose, Transcript};
use crate::model::{SubmoduleTask, Tier, TimingRequirement};
use crate::prompts::Prompts;
use crate::template::{fenced_sections, render};

/// The initializing stage runs on the strong tier.
pub const INITIAL_TIER: Tier = Tier::Strong;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("timing reply {reply:?} is not KIND=COMB or KIND=SEQ;CYCLES=<n> after a reprompt")]
    Unclassifiable { reply: String },
    #[error("model output lacks the ```{0} section after a reprompt")]
    MissingSection(&'static str),
    #[error("generated files fail the structural checks after a reprompt: {}", findings.join("; "))]
    Lint { findings: Vec<String> },
    #[error("task {0} has no timing requirement")]
    Untimed(String),
    #[error("bad template: {0}")]
    Template(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("exemplar {path}: {reason}")]
    Exemplar { path: String, reason: String },
}

/// Parses `KIND=COMB` or `KIND=SEQ;CYCLES=<n>` (n >= 1) from any line of
/// the reply. Case and spacing are not significant.
pub fn parse_timing_reply(reply: &str) -> Option<TimingRequirement> {
    let comb = Regex::new(r"(?i)^\s*KIND\s*=\s*COMB\s*\.?\s*$").expect("static regex");
    let seq = Regex::new(r"(?i)^\s*KIND\s*=\s*SEQ\s*[;,]\s*CYCLES\s*=\s*(\d+)\s*\.?\s*$").expect("static regex");
    let line = |l: &str| l.trim().trim_matches('`').to_string();
    let mut found = None;
    for l in reply.lines().map(line) {
        let this = if comb.is_match(&l) {
            Some(TimingRequirement::Combinational)
        } else if let Some(c) = seq.captures(&l) {
            c[1].parse::<u32>().ok().and_then(TimingRequirement::sequential)
        } else {
            None
        };
        match (found, this) {
            (_, None) => {}
            (None, Some(t)) => found = Some(t),
            // Contradicting answers in one reply are not an answer.
            (Some(prev), Some(t)) if prev != t => return None,
            (Some(_), Some(_)) => {}
        }
    }
    found
}

fn invalid(request_id: &str, e: impl ToString) -> SynthError {
    SynthError::Gateway(GatewayError::InvalidRequest { request_id: request_id.to_string(), reason: e.to_string() })
}

/// Asks whether the task is combinational or sequential. An unparseable
/// reply gets one reprompt.
pub fn classify_timing(
    task: &SubmoduleTask,
    gateway: &Gateway,
    transcript: &mut Transcript,
    prompts: &Prompts,
) -> Result<TimingRequirement, SynthError> {
    let id = format!("{}/{}/timing", task.design, task.name);
    let spec = if task.refined_spec.trim().is_empty() { "(no specification given)" } else { &task.refined_spec };
    let user = render(&prompts.timing_user, &[("spec", spec.to_string())].into_iter().collect())
        .map_err(|e| invalid(&id, e))?;
    let request = ModelRequest::new(
        id.clone(),
        INITIAL_TIER,
        Purpose::InitialGen,
        vec![Message::system(prompts.timing_system.trim_end()), Message::user(user)],
    )?;
    let first = gateway.complete(&request, transcript)?;
    if let Some(t) = parse_timing_reply(&first.text) {
        return Ok(t);
    }
    let retry_text = render(&prompts.timing_retry, &[("reply", first.text.trim().to_string())].into_iter().collect())
        .map_err(|e| invalid(&id, e))?;
    let mut messages = request.messages.clone();
    messages.push(Message::assistant(first.text));
    messages.push(Message::user(retry_text));
    let retry = ModelRequest::new(format!("{id}/retry"), INITIAL_TIER, Purpose::InitialGen, messages)?;
    let second = gateway.complete(&retry, transcript)?;
    parse_timing_reply(&second.text).ok_or(SynthError::Unclassifiable { reply: second.text })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarKind {
    Combinational,
    Sequential,
}

impl ExemplarKind {
    pub fn of(timing: TimingRequirement) -> Self {
        if timing.is_sequential() {
            ExemplarKind::Sequential
        } else {
            ExemplarKind::Combinational
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            ExemplarKind::Combinational => "combinational",
            ExemplarKind::Sequential => "sequential",
        }
    }
}

/// A worked (C, RTL, harness) example shown to the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessExemplar {
    pub label: ExemplarKind,
    /// Name of the exemplar's C function and RTL module.
    pub name: String,
    pub timing: TimingRequirement,
    pub c_snippet: String,
    pub rtl_snippet: String,
    pub harness_snippet: String,
}

impl HarnessExemplar {
    fn assemble(label: ExemplarKind, c: &str, rtl: &str, harness: &str, origin: &str) -> Result<Self, SynthError> {
        let bad = |reason: &str| SynthError::Exemplar { path: origin.to_string(), reason: reason.to_string() };
        let name = declared_modules(rtl).into_iter().last().ok_or_else(|| bad("module.v declares no module"))?;
        let timing = match label {
            ExemplarKind::Combinational => TimingRequirement::Combinational,
            ExemplarKind::Sequential => {
                let re = Regex::new(r"#\s*define\s+TIMEFRAME\s+(\d+)").expect("static regex");
                let n = re
                    .captures(harness)
                    .and_then(|c| c[1].parse().ok())
                    .and_then(TimingRequirement::sequential)
                    .ok_or_else(|| bad("sequential harness has no TIMEFRAME"))?;
                n
            }
        };
        Ok(HarnessExemplar {
            label,
            name,
            timing,
            c_snippet: c.to_string(),
            rtl_snippet: rtl.to_string(),
            harness_snippet: harness.to_string(),
        })
    }

    /// The shipped exemplars, one per timing kind.
    pub fn builtin() -> Vec<HarnessExemplar> {
        vec![
            Self::assemble(
                ExemplarKind::Combinational,
                include_str!("../../assets/exemplars/combinational/reference.c"),
                include_str!("../../assets/exemplars/combinational/module.v"),
                include_str!("../../assets/exemplars/combinational/harness.c"),
                "builtin/combinational",
            )
            .expect("builtin exemplar"),
            Self::assemble(
                ExemplarKind::Sequential,
                include_str!("../../assets/exemplars/sequential/reference.c"),
                include_str!("../../assets/exemplars/sequential/module.v"),
                include_str!("../../assets/exemplars/sequential/harness.c"),
                "builtin/sequential",
            )
            .expect("builtin exemplar"),
        ]
    }

    /// Exemplars from `<dir>/<kind>/<example>/{reference.c, module.v,
    /// harness.c}` or `<dir>/<kind>/{...}`.
    pub fn load_dir(dir: &Path) -> Result<Vec<HarnessExemplar>, SynthError> {
        let mut out = Vec::new();
        for kind in [ExemplarKind::Combinational, ExemplarKind::Sequential] {
            let base = dir.join(kind.dir_name());
            let mut candidates = vec![base.clone()];
            if let Ok(entries) = std::fs::read_dir(&base) {
                let mut subdirs: Vec<_> =
                    entries.filter_map(Result::ok).map(|e| e.path()).filter(|p| p.is_dir()).collect();
                subdirs.sort();
                candidates.extend(subdirs);
            }
            for c in candidates {
                let read = |f: &str| std::fs::read_to_string(c.join(f));
                if let (Ok(src), Ok(rtl), Ok(h)) = (read("reference.c"), read("module.v"), read("harness.c")) {
                    out.push(Self::assemble(kind, &src, &rtl, &h, &c.display().to_string())?);
                }
            }
        }
        Ok(out)
    }

    fn render(&self) -> String {
        format!(
            "C reference:\n```c\n{}```\nRTL:\n```verilog\n{}```\nHarness:\n```c\n{}```\n",
            self.c_snippet, self.rtl_snippet, self.harness_snippet
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationResult {
    pub rtl_text: String,
    pub harness_text: String,
    pub instantiated_dependencies: Vec<String>,
}

/// Splits a reply into exactly one RTL and one HARNESS section.
pub fn split_generation(reply: &str) -> Result<(String, String), &'static str> {
    let rtl = fenced_sections(reply, "RTL");
    let harness = fenced_sections(reply, "HARNESS");
    match (rtl.as_slice(), harness.as_slice()) {
        ([r], [h]) => Ok((r.clone(), h.clone())),
        ([_], _) => Err("HARNESS"),
        _ => Err("RTL"),
    }
}

fn findings_for(reply: &str, task: &SubmoduleTask, timing: TimingRequirement) -> Result<(String, String), Vec<String>> {
    let (rtl, harness) = match split_generation(reply) {
        Ok(pair) => pair,
        Err(section) => {
            let count = fenced_sections(reply, section).len();
            let what = if count == 0 { "is missing".to_string() } else { format!("appears {count} times") };
            return Err(vec![format!("the ```{section} section {what}; exactly one is required")]);
        }
    };
    let findings: Vec<String> = lint_rtl(&rtl, &task.name)
        .into_iter()
        .chain(lint_harness(&harness, &task.name, timing))
        .map(|f| f.to_string())
        .collect();
    if findings.is_empty() {
        Ok((rtl, harness))
    } else {
        Err(findings)
    }
}

fn dependency_block(deps: &[(String, String)]) -> String {
    if deps.is_empty() {
        return "Dependencies: none. The module instantiates no other module.".into();
    }
    let mut s = String::from(
        "Verified submodules. Instantiate them by name where the C code calls the function of the same name; do not redefine them:\n",
    );
    for (name, rtl) in deps {
        s.push_str(&format!("\n`{name}`:\n```verilog\n{}\n```\n", rtl.trim_end()));
    }
    s
}

/// Prompt text for the initial generation of `task`.
pub fn generation_prompt(
    task: &SubmoduleTask,
    timing: TimingRequirement,
    verified_deps: &[(String, String)],
    exemplars: &[HarnessExemplar],
    prompts: &Prompts,
) -> Result<String, crate::template::TemplateError> {
    let kind = ExemplarKind::of(timing);
    let shots: Vec<String> = exemplars.iter().filter(|e| e.label == kind).map(HarnessExemplar::render).collect();
    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    v.insert("task", task.name.clone());
    v.insert("timing", timing.to_string());
    v.insert("spec", task.refined_spec.clone());
    v.insert("bundle", task.bundle.source_text.clone());
    v.insert("dependencies", dependency_block(verified_deps));
    v.insert("timing_kind", kind.dir_name().to_string());
    v.insert("exemplars", if shots.is_empty() { "(none)".into() } else { shots.join("\n") });
    render(&prompts.generate_user, &v)
}

/// Generates the initial RTL and harness. Output that is missing a section
/// or fails [`lint_rtl`] / [`lint_harness`] gets one reprompt listing the
/// findings.
pub fn generate_initial(
    task: &SubmoduleTask,
    verified_deps: &[(String, String)],
    gateway: &Gateway,
    transcript: &mut Transcript,
    prompts: &Prompts,
    exemplars: &[HarnessExemplar],
) -> Result<GenerationResult, SynthError> {
    let timing = task.timing.ok_or_else(|| SynthError::Untimed(task.name.clone()))?;
    let id = format!("{}/{}/generate", task.design, task.name);
    let user = generation_prompt(task, timing, verified_deps, exemplars, prompts).map_err(|e| invalid(&id, e))?;
    let request = ModelRequest::new(
        id.clone(),
        INITIAL_TIER,
        Purpose::InitialGen,
        vec![Message::system(prompts.generate_system.trim_end()), Message::user(user)],
    )?;
    let first = gateway.complete(&request, transcript)?;
    let (rtl, harness) = match findings_for(&first.text, task, timing) {
        Ok(pair) => pair,
        Err(findings) => {
            let retry_text = render(
                &prompts.generate_retry,
                &[("findings", findings.iter().map(|f| format!("- {f}")).collect::<Vec<_>>().join("\n"))]
                    .into_iter()
                    .collect(),
            )
            .map_err(|e| invalid(&id, e))?;
            let mut messages = request.messages.clone();
            messages.push(Message::assistant(first.text));
            messages.push(Message::user(retry_text));
            let retry = ModelRequest::new(format!("{id}/retry"), INITIAL_TIER, Purpose::InitialGen, messages)?;
            let second = gateway.complete(&retry, transcript)?;
            match split_generation(&second.text) {
                Err(section) => return Err(SynthError::MissingSection(section)),
                Ok(_) => findings_for(&second.text, task, timing).map_err(|findings| SynthError::Lint { findings })?,
            }
        }
    };
    let instantiated_dependencies = instantiated_modules(&rtl, verified_deps.iter().map(|(n, _)| n.as_str()));
    Ok(GenerationResult { rtl_text: rtl, harness_text: harness, instantiated_dependencies })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_reply_forms() {
        assert_eq!(parse_timing_reply("KIND=COMB"), Some(TimingRequirement::Combinational));
        assert_eq!(parse_timing_reply("Sure.\nkind = seq; cycles = 3\n"), TimingRequirement::sequential(3));
        assert_eq!(parse_timing_reply("`KIND=SEQ;CYCLES=2`"), TimingRequirement::sequential(2));
        assert_eq!(parse_timing_reply("KIND=SEQ;CYCLES=0"), None);
        assert_eq!(parse_timing_reply("KIND=COMB\nKIND=SEQ;CYCLES=2"), None);
        assert_eq!(parse_timing_reply("combinational"), None);
    }

    #[test]
    fn builtin_exemplars_pass_lint() {
        for e in HarnessExemplar::builtin() {
            assert!(lint_harness(&e.harness_snippet, &e.name, e.timing).is_empty(), "{}", e.name);
            assert!(lint_rtl(&e.rtl_snippet, &e.name).is_empty(), "{}", e.name);
            assert!(e.c_snippet.contains(&format!("{}(", e.name)));
        }
        let kinds: Vec<_> = HarnessExemplar::builtin().iter().map(|e| e.label).collect();
        assert_eq!(kinds, vec![ExemplarKind::Combinational, ExemplarKind::Sequential]);
    }

    #[test]
    fn output_partitioning() {
        assert_eq!(split_generation("```RTL\nm\n```\n```HARNESS\nh\n```\n"), Ok(("m\n".into(), "h\n".into())));
        assert_eq!(split_generation("```RTL\nm\n```\n"), Err("HARNESS"));
        assert_eq!(split_generation("```HARNESS\nh\n```\n"), Err("RTL"));
        assert_eq!(split_generation("```RTL\na\n```\n```RTL\nb\n```\n```HARNESS\nh\n```"), Err("RTL"));
    }
}
