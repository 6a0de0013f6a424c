// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use regex::Regex;

use super::{Assignment, BitValue, CexTrace, FailingAssertion, MismatchPair, StepKind, ToolProfile, TraceStep};

/// Context that the trace alone does not carry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceHints {
    /// RTL module under test; the scope of hardware states.
    pub top_module: Option<String>,
    /// Harness variable -> C function whose result it holds.
    pub c_scopes: BTreeMap<String, String>,
}

impl TraceHints {
    pub fn from_harness(harness: &str, top_module: &str) -> Self {
        let assign = Regex::new(r"\b([A-Za-z_]\w*)\s*=\s*([A-Za-z_]\w*)\s*\(").expect("static regex");
        let mut c_scopes = BTreeMap::new();
        for caps in assign.captures_iter(harness) {
            let callee = &caps[2];
            if matches!(callee, "nondet" | "sizeof") || callee.starts_with("nondet_") || callee.starts_with("__CPROVER")
            {
                continue;
            }
            c_scopes.insert(caps[1].to_string(), callee.to_string());
        }
        TraceHints { top_module: Some(top_module.to_string()), c_scopes }
    }
}

fn parse_value(value: &str, bits: Option<&str>) -> Option<BitValue> {
    if let Some(b) = bits {
        return BitValue::from_bits(b);
    }
    match value {
        "TRUE" | "true" => Some(BitValue::from_u128(1, 1)),
        "FALSE" | "false" => Some(BitValue::from_u128(0, 1)),
        _ => None,
    }
}

/// Splits at a top-level operator, ignoring occurrences inside parentheses.
fn split_top<'a>(expr: &'a str, op: &str) -> Vec<&'a str> {
    let bytes = expr.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth -= 1,
            _ if depth == 0 && expr[i..].starts_with(op) => {
                out.push(expr[start..i].trim());
                i += op.len();
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    out.push(expr[start..].trim());
    out
}

fn strip_parens(mut s: &str) -> &str {
    loop {
        let t = s.trim();
        if t.len() >= 2 && t.starts_with('(') && t.ends_with(')') {
            let inner = &t[1..t.len() - 1];
            // Only strip when the parens enclose the whole expression.
            let mut depth = 0;
            let balanced = inner.chars().all(|c| {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
                depth >= 0
            });
            if balanced {
                s = inner;
                continue;
            }
        }
        return t;
    }
}

/// `f(...)` -> `Some("f")`.
fn call_name(expr: &str) -> Option<&str> {
    let open = expr.find('(')?;
    let name = expr[..open].trim();
    (expr.ends_with(')') && !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        .then_some(name)
}

fn is_rtl_side(expr: &str) -> bool {
    call_name(expr).is_none() && expr.contains('.')
}

struct Lookup<'a> {
    steps: &'a [TraceStep],
}

impl Lookup<'_> {
    /// Last software-side value of a C operand.
    fn c_value(&self, expr: &str) -> Option<(&BitValue, &str)> {
        let wanted: Vec<String> = match call_name(expr) {
            Some(f) => vec![format!("{f}#return_value")],
            None => vec![expr.to_string()],
        };
        self.steps.iter().rev().filter(|s| s.kind == StepKind::Software).find_map(|s| {
            s.assignments.iter().rev().find_map(|a| {
                let hit = wanted.iter().any(|w| a.name == *w || a.name.ends_with(&format!("::{w}")));
                hit.then_some((&a.value, s.scope.as_str()))
            })
        })
    }

    /// Last value of an RTL operand such as `rtl.result`, with its cycle.
    fn rtl_value(&self, expr: &str, top: Option<&str>) -> Option<(&BitValue, u32)> {
        let member = expr.rsplit('.').next().unwrap_or(expr);
        let qualified = top.map(|t| format!("{t}.{member}"));
        let suffix = format!(".{member}");
        let exact = |a: &Assignment| a.name == expr || Some(&a.name) == qualified.as_ref();
        for pass in 0..2 {
            for s in self.steps.iter().rev() {
                for a in s.assignments.iter().rev() {
                    let hit =
                        if pass == 0 { exact(a) } else { s.kind == StepKind::Hardware && a.name.ends_with(&suffix) };
                    if hit {
                        let cycle = if s.kind == StepKind::Hardware { s.index } else { self.last_cycle() };
                        return Some((&a.value, cycle));
                    }
                }
            }
        }
        None
    }

    fn last_cycle(&self) -> u32 {
        self.steps.iter().rev().find(|s| s.kind == StepKind::Hardware).map(|s| s.index).unwrap_or(0)
    }
}

fn values_differ(a: &BitValue, b: &BitValue) -> bool {
    match (a.to_u128(), b.to_u128()) {
        (Some(x), Some(y)) => x != y,
        _ => a.bits != b.bits,
    }
}

fn pairs_from_assertion(expr: &str, steps: &[TraceStep], hints: &TraceHints) -> Vec<MismatchPair> {
    let lookup = Lookup { steps };
    let top = hints.top_module.as_deref();
    let mut pairs = Vec::new();
    for conjunct in split_top(strip_parens(expr), "&&") {
        let sides = split_top(strip_parens(conjunct), "==");
        let [a, b] = sides.as_slice() else { continue };
        let (a, b) = (strip_parens(a), strip_parens(b));
        let (c_expr, rtl_expr) = match (is_rtl_side(a), is_rtl_side(b)) {
            (false, true) => (a, b),
            (true, false) => (b, a),
            _ => continue,
        };
        let (Some((c_val, c_step_scope)), Some((rtl_val, cycle))) =
            (lookup.c_value(c_expr), lookup.rtl_value(rtl_expr, top))
        else {
            continue;
        };
        if !values_differ(c_val, rtl_val) {
            continue;
        }
        let scope = call_name(c_expr)
            .map(str::to_string)
            .or_else(|| hints.c_scopes.get(c_expr).cloned())
            .or_else(|| hints.top_module.clone())
            .unwrap_or_else(|| c_step_scope.to_string());
        pairs.push(MismatchPair {
            signal: rtl_expr.rsplit('.').next().unwrap_or(rtl_expr).to_string(),
            c_value: c_val.clone(),
            rtl_value: rtl_val.clone(),
            scope,
            cycle,
        });
    }
    pairs
}

/// Last-step diffs between C variables and identically named RTL signals.
fn pairs_from_names(steps: &[TraceStep], hints: &TraceHints) -> Vec<MismatchPair> {
    let Some(hw) = steps.iter().rev().find(|s| s.kind == StepKind::Hardware) else {
        return Vec::new();
    };
    let lookup = Lookup { steps };
    let mut pairs = Vec::new();
    for a in &hw.assignments {
        let member = a.name.rsplit('.').next().unwrap_or(&a.name);
        if let Some((c_val, scope)) = lookup.c_value(member) {
            if values_differ(c_val, &a.value) {
                pairs.push(MismatchPair {
                    signal: member.to_string(),
                    c_value: c_val.clone(),
                    rtl_value: a.value.clone(),
                    scope: hints.top_module.clone().unwrap_or_else(|| scope.to_string()),
                    cycle: hw.index,
                });
            }
        }
    }
    pairs
}

/// Parses a counterexample section with the profile's trace grammar.
///
/// Mismatch pairs come from the operands of the failing equivalence
/// assertion; when those cannot be resolved, from same-named C variables
/// and RTL signals in the last hardware state.
pub fn parse_counterexample(section: &str, profile: &ToolProfile, hints: &TraceHints) -> Result<CexTrace, String> {
    let g = &profile.trace;
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut property_id = None;
    let mut in_violation = false;
    let mut assertion =
        FailingAssertion { id: String::new(), expression: String::new(), file: None, line: None, function: None };
    for line in section.lines() {
        if let Some(c) = g.property_id.captures(line) {
            property_id.get_or_insert_with(|| c["id"].to_string());
            continue;
        }
        if g.violation.is_match(line) {
            in_violation = true;
            continue;
        }
        if in_violation {
            if let Some(c) = g.violation_location.captures(line) {
                assertion.file = Some(c["file"].to_string());
                assertion.function = c.name("function").map(|m| m.as_str().to_string());
                assertion.line = c["line"].parse().ok();
            } else if let Some(c) = g.assertion.captures(line) {
                if assertion.expression.is_empty() {
                    assertion.expression = c["expr"].to_string();
                }
            } else if assertion.expression.is_empty() {
                // Some dialects print the bare expression without a keyword.
                let t = line.trim();
                if !t.is_empty() && assertion.file.is_some() && t.contains("==") {
                    assertion.expression = t.to_string();
                }
            }
            continue;
        }
        if let Some(c) = g.hardware_state.captures(line) {
            steps.push(TraceStep {
                index: c["index"].parse().map_err(|_| format!("bad state index in `{line}`"))?,
                kind: StepKind::Hardware,
                scope: hints.top_module.clone().unwrap_or_default(),
                assignments: Vec::new(),
            });
            continue;
        }
        if let Some(c) = g.software_state.captures(line) {
            steps.push(TraceStep {
                index: c["index"].parse().map_err(|_| format!("bad state index in `{line}`"))?,
                kind: StepKind::Software,
                scope: c.name("function").map(|m| m.as_str().to_string()).unwrap_or_default(),
                assignments: Vec::new(),
            });
            continue;
        }
        if let Some(c) = g.assignment.captures(line) {
            let Some(step) = steps.last_mut() else { continue };
            if let Some(value) = parse_value(&c["value"], c.name("bits").map(|m| m.as_str())) {
                step.assignments.push(Assignment { name: c["name"].to_string(), value });
            }
        }
    }
    if !in_violation {
        return Err("no violated property in trace".into());
    }
    if assertion.expression.is_empty() {
        return Err("violated property has no assertion expression".into());
    }
    if steps.is_empty() {
        return Err("trace has no states".into());
    }
    assertion.id = property_id.unwrap_or_else(|| match (&assertion.function, assertion.line) {
        (Some(f), Some(l)) => format!("{f}.line{l}"),
        (_, Some(l)) => format!("line{l}"),
        _ => "assertion".into(),
    });
    let mut mismatch_pairs = pairs_from_assertion(&assertion.expression, &steps, hints);
    if mismatch_pairs.is_empty() {
        mismatch_pairs = pairs_from_names(&steps, hints);
    }
    if mismatch_pairs.is_empty() {
        return Err(format!("no mismatching signal pair for `{}`", assertion.expression));
    }
    Ok(CexTrace { steps, failing_assertion: assertion, mismatch_pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> ToolProfile {
        ToolProfile::builtin("hw-cbmc").unwrap()
    }

    #[test]
    fn splits_and_strips() {
        assert_eq!(split_top("a == b && (c == d)", "&&"), ["a == b", "(c == d)"]);
        assert_eq!(split_top("f(a == b) == c", "=="), ["f(a == b)", "c"]);
        assert_eq!(strip_parens("((x == y))"), "x == y");
        assert_eq!(strip_parens("(a) == (b)"), "(a) == (b)");
        assert_eq!(call_name("packToF16(s, e, m)"), Some("packToF16"));
        assert!(is_rtl_side("rtl.result") && !is_rtl_side("c_result"));
    }

    #[test]
    fn hints_from_harness() {
        let h = TraceHints::from_harness("  u16 a = nondet_u16();\n  c_out = lzc4(a);\n", "lzc4");
        assert_eq!(h.c_scopes.get("c_out").map(String::as_str), Some("lzc4"));
        assert!(!h.c_scopes.contains_key("a"));
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(parse_counterexample("random words\nmore", &profile(), &TraceHints::default()).is_err());
    }
}
