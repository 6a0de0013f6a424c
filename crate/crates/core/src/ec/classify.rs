// SPDX-License-Identifier: Apache-2.0

use super::{parse_counterexample, CexReport, Diagnostic, EcOutcome, EcVerdict, RunOutput, ToolProfile, TraceHints};

fn diagnostics(profile: &ToolProfile, output: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    for re in &profile.diagnostics {
        for c in re.captures_iter(output) {
            let d = Diagnostic {
                file: c.name("file").map(|m| m.as_str().to_string()).unwrap_or_default(),
                line: c.name("line").and_then(|m| m.as_str().parse().ok()).filter(|l| *l >= 1),
                column: c.name("column").and_then(|m| m.as_str().parse().ok()),
                message: c.name("message").map(|m| m.as_str().trim().to_string()).unwrap_or_default(),
            };
            if !out.contains(&d) {
                out.push(d);
            }
        }
    }
    out
}

/// Maps one checker run to exactly one outcome kind. Rules, first match wins:
/// timed out; success marker with a success exit code; failure marker with a
/// trace section; compiler/parser diagnostics; anything else is a tool error.
pub fn classify_output(run: &RunOutput, profile: &ToolProfile, hints: &TraceHints) -> EcOutcome {
    let output = &run.output;
    let verdict = if run.timed_out {
        EcVerdict::Timeout { seconds: run.timeout_secs, bound: run.bound }
    } else if profile.success.is_match(output) && run.exit_code.is_some_and(|c| profile.success_exit_codes.contains(&c))
    {
        EcVerdict::Pass
    } else if let (true, Some(start)) = (profile.failure.is_match(output), profile.trace_start.find(output)) {
        let section = &output[start.start()..];
        let report = match parse_counterexample(section, profile, hints) {
            Ok(trace) => CexReport::Parsed(trace),
            Err(reason) => CexReport::Unparsed { reason, section: section.to_string() },
        };
        EcVerdict::Counterexample { report }
    } else {
        let diags = diagnostics(profile, output);
        if !diags.is_empty() {
            EcVerdict::SyntaxError { diagnostics: diags }
        } else {
            let reason = if output.trim().is_empty() {
                "no output".to_string()
            } else {
                output.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").trim().to_string()
            };
            EcVerdict::ToolError { exit_code: run.exit_code, reason }
        }
    };
    EcOutcome { verdict, raw_output: output.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(code: Option<i32>, output: &str) -> RunOutput {
        RunOutput {
            exit_code: code,
            output: output.into(),
            elapsed: 0.0,
            timed_out: false,
            timeout_secs: 600.0,
            bound: 1,
        }
    }

    #[test]
    fn basic_rules() {
        let p = ToolProfile::builtin("hw-cbmc").unwrap();
        let h = TraceHints::default();
        assert!(classify_output(&run(Some(0), "VERIFICATION SUCCESSFUL\n"), &p, &h).is_pass());
        // The marker alone is not enough without a success exit code.
        assert_eq!(
            classify_output(&run(Some(1), "VERIFICATION SUCCESSFUL\n"), &p, &h).verdict.kind_name(),
            "tool_error"
        );
        let o = classify_output(&run(Some(2), ""), &p, &h);
        assert_eq!(o.verdict, EcVerdict::ToolError { exit_code: Some(2), reason: "no output".into() });
        let o =
            classify_output(&run(Some(6), "file top.v line 7: syntax error, unexpected ';'\nPARSING ERROR\n"), &p, &h);
        match o.verdict {
            EcVerdict::SyntaxError { diagnostics } => {
                assert_eq!(diagnostics.len(), 1);
                assert_eq!(diagnostics[0].file, "top.v");
                assert_eq!(diagnostics[0].line, Some(7));
            }
            other => panic!("{other:?}"),
        }
        let mut t = run(None, "partial");
        t.timed_out = true;
        assert_eq!(classify_output(&t, &p, &h).verdict.kind_name(), "timeout");
    }
}
