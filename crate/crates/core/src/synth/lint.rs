// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt;

use regex::Regex;

use crate::model::TimingRequirement;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LintFinding {
    MissingInputAssumption,
    MissingEquivalenceAssertion,
    MissingFunctionCall(String),
    MissingModuleReference(String),
    MissingTimeframe(u32),
    TimeframeMismatch { harness: u32, required: u32 },
    NoModule,
    TopModuleCount(Vec<String>),
    TopModuleName { found: String, expected: String },
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LintFinding::MissingInputAssumption => f.write_str("missing input assumption (__CPROVER_assume)"),
            LintFinding::MissingEquivalenceAssertion => f.write_str("missing equivalence assertion (assert with ==)"),
            LintFinding::MissingFunctionCall(name) => write!(f, "missing call to the C function `{name}`"),
            LintFinding::MissingModuleReference(name) => {
                write!(f, "missing RTL module reference `struct module_{name}`")
            }
            LintFinding::MissingTimeframe(n) => write!(f, "missing timeframe constant (#define TIMEFRAME {n})"),
            LintFinding::TimeframeMismatch { harness, required } => {
                write!(f, "timeframe mismatch: harness uses {harness}, timing requires {required}")
            }
            LintFinding::NoModule => f.write_str("RTL declares no module"),
            LintFinding::TopModuleCount(names) => {
                write!(f, "RTL has {} top-level modules ({}); exactly one is allowed", names.len(), names.join(", "))
            }
            LintFinding::TopModuleName { found, expected } => {
                write!(f, "top module is `{found}` but must be named `{expected}`")
            }
        }
    }
}

/// Removes `//` and `/* */` comments, keeping line structure.
fn strip_comments(text: &str) -> String {
    let re = Regex::new(r"(?s)/\*.*?\*/|//[^\n]*").expect("static regex");
    re.replace_all(text, |c: &regex::Captures<'_>| c[0].chars().filter(|&ch| ch == '\n').collect::<String>())
        .into_owned()
}

fn word(name: &str) -> String {
    format!(r"\b{}\b", regex::escape(name))
}

/// Structural checks on a verification harness for `task`.
pub fn lint_harness(harness: &str, task: &str, timing: TimingRequirement) -> Vec<LintFinding> {
    let code = strip_comments(harness);
    let mut findings = Vec::new();
    if !code.contains("__CPROVER_assume") {
        findings.push(LintFinding::MissingInputAssumption);
    }
    let assertion = Regex::new(r"(?s)\b(assert|__CPROVER_assert)\s*\([^;]*==").expect("static regex");
    if !assertion.is_match(&code) {
        findings.push(LintFinding::MissingEquivalenceAssertion);
    }
    let call = Regex::new(&format!(r"{}\s*\(", word(task))).expect("escaped regex");
    // The prototype also matches; a call additionally appears inside a body.
    let calls = call.find_iter(&code).filter(|m| {
        let before = code[..m.start()].trim_end();
        !before.ends_with(|c: char| c.is_ascii_alphanumeric() || c == '_') || before.ends_with("return")
    });
    if calls.count() == 0 {
        findings.push(LintFinding::MissingFunctionCall(task.to_string()));
    }
    let module = Regex::new(&format!(r"\bstruct\s+module_{}\b", regex::escape(task))).expect("escaped regex");
    if !module.is_match(&code) {
        findings.push(LintFinding::MissingModuleReference(task.to_string()));
    }
    if let Some(required) = timing.timeframe() {
        let define = Regex::new(r"(?m)^\s*#\s*define\s+TIMEFRAME\s+\(?\s*(\d+)").expect("static regex");
        match define.captures(&code).and_then(|c| c[1].parse::<u32>().ok()) {
            None => findings.push(LintFinding::MissingTimeframe(required)),
            Some(n) if n != required => findings.push(LintFinding::TimeframeMismatch { harness: n, required }),
            Some(_) => {}
        }
    }
    findings
}

/// Module names declared in `rtl`, in order.
pub fn declared_modules(rtl: &str) -> Vec<String> {
    let code = strip_comments(rtl);
    let re = Regex::new(r"(?m)(?:^|[;\s])(?:module|macromodule)\s+([A-Za-z_][A-Za-z0-9_$]*)").expect("static regex");
    re.captures_iter(&code).map(|c| c[1].to_string()).collect()
}

/// Which of `candidates` `rtl` instantiates (`name [#(...)] inst (`).
pub fn instantiated_modules<'a>(rtl: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let code = strip_comments(rtl);
    candidates
        .into_iter()
        .filter(|name| {
            let re = Regex::new(&format!(r"(?m)(?:^|[;\s]){}\s*(?:#\s*\(|[A-Za-z_])", regex::escape(name)))
                .expect("escaped regex");
            let found = re.find_iter(&code).any(|m| {
                // Not the module's own declaration.
                let before = code[..m.start() + 1].trim_end();
                !before.ends_with("module")
            });
            found
        })
        .map(str::to_string)
        .collect()
}

/// The RTL must have exactly one module not instantiated by another
/// module of the same file, and it must be named `task`.
pub fn lint_rtl(rtl: &str, task: &str) -> Vec<LintFinding> {
    let modules = declared_modules(rtl);
    if modules.is_empty() {
        return vec![LintFinding::NoModule];
    }
    let code = strip_comments(rtl);
    let mut instantiated = BTreeSet::new();
    let decl = Regex::new(r"(?s)\b(?:module|macromodule)\s+([A-Za-z_][A-Za-z0-9_$]*)(.*?)\bendmodule\b")
        .expect("static regex");
    for c in decl.captures_iter(&code) {
        let owner = &c[1];
        let body = &c[2];
        for m in instantiated_modules(body, modules.iter().map(String::as_str)) {
            if m != owner {
                instantiated.insert(m);
            }
        }
    }
    let tops: Vec<String> = modules.iter().filter(|m| !instantiated.contains(*m)).cloned().collect();
    match tops.as_slice() {
        [one] if one == task => Vec::new(),
        [one] => vec![LintFinding::TopModuleName { found: one.clone(), expected: task.to_string() }],
        _ => vec![LintFinding::TopModuleCount(tops)],
    }
}
