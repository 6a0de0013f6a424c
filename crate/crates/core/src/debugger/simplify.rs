// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ec::{CexTrace, FailingAssertion, MismatchPair};

/// Counterexample reduced to the focus scope.
///
/// `retained` is a subset of the input pairs. Without fallback,
/// `retained.len() + dropped_count` equals the input pair count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplifiedTrace {
    pub focus_scope: String,
    pub retained: Vec<MismatchPair>,
    /// Earliest cycle among the retained pairs.
    pub first_divergence: Option<u32>,
    pub dropped_count: usize,
    /// The focus had no mismatches; every pair is shown as cross-module.
    pub fallback: bool,
    pub assertion: FailingAssertion,
}

impl fmt::Display for SimplifiedTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.assertion;
        write!(f, "Failing assertion {}: {}", a.id, a.expression)?;
        if let Some(line) = a.line {
            write!(f, " (line {line})")?;
        }
        writeln!(f)?;
        if self.fallback {
            writeln!(
                f,
                "No mismatching signal belongs to `{}`; all mismatches are shown (cross-module).",
                self.focus_scope
            )?;
        }
        if let Some(c) = self.first_divergence {
            writeln!(f, "First divergence at cycle {c}.")?;
        }
        for p in &self.retained {
            writeln!(
                f,
                "signal {}: C = {}, RTL = {} (scope {}, cycle {})",
                p.signal, p.c_value, p.rtl_value, p.scope, p.cycle
            )?;
        }
        if self.dropped_count > 0 {
            writeln!(f, "({} mismatching signal(s) outside `{}` omitted)", self.dropped_count, self.focus_scope)?;
        }
        Ok(())
    }
}

/// Keeps the mismatch pairs scoped to `focus`. When none are, keeps all of
/// them and sets `fallback`.
pub fn simplify_counterexample(trace: &CexTrace, focus: &str) -> SimplifiedTrace {
    let in_focus: Vec<MismatchPair> = trace.mismatch_pairs.iter().filter(|p| p.scope == focus).cloned().collect();
    let (retained, dropped_count, fallback) = if in_focus.is_empty() {
        (trace.mismatch_pairs.clone(), 0, true)
    } else {
        let dropped = trace.mismatch_pairs.len() - in_focus.len();
        (in_focus, dropped, false)
    };
    SimplifiedTrace {
        focus_scope: focus.to_string(),
        first_divergence: retained.iter().map(|p| p.cycle).min(),
        retained,
        dropped_count,
        fallback,
        assertion: trace.failing_assertion.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::BitValue;

    fn pair(signal: &str, scope: &str, cycle: u32) -> MismatchPair {
        MismatchPair {
            signal: signal.into(),
            c_value: BitValue::from_u128(1, 8),
            rtl_value: BitValue::from_u128(2, 8),
            scope: scope.into(),
            cycle,
        }
    }

    fn trace(pairs: Vec<MismatchPair>) -> CexTrace {
        CexTrace {
            steps: Vec::new(),
            failing_assertion: FailingAssertion {
                id: "main.assertion.1".into(),
                expression: "c == rtl.y".into(),
                file: None,
                line: Some(9),
                function: Some("main".into()),
            },
            mismatch_pairs: pairs,
        }
    }

    #[test]
    fn twelve_across_three_scopes() {
        let mut pairs = Vec::new();
        for i in 0..5 {
            pairs.push(pair(&format!("a{i}"), "other", 0));
            pairs.push(pair(&format!("b{i}"), "third", 0));
        }
        pairs.push(pair("y", "focus", 3));
        pairs.push(pair("z", "focus", 1));
        let s = simplify_counterexample(&trace(pairs), "focus");
        assert_eq!((s.retained.len(), s.dropped_count, s.fallback), (2, 10, false));
        assert_eq!(s.first_divergence, Some(1));
    }

    #[test]
    fn identity_and_fallback() {
        let all = vec![pair("y", "f", 0), pair("z", "f", 0)];
        let s = simplify_counterexample(&trace(all.clone()), "f");
        assert_eq!((s.retained, s.dropped_count), (all.clone(), 0));
        let s = simplify_counterexample(&trace(all.clone()), "absent");
        assert!(s.fallback);
        assert_eq!(s.retained, all);
        assert!(s.to_string().contains("cross-module"));
    }
}
