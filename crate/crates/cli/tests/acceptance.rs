// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//! Run with `cargo test -p rtlsmith-cli --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rtlsmith::debugger::{
    apply_patch, debug_loop, simplify_counterexample, DebugContext, DebugSettings, DebugStatus, PatchProposal,
    PatchTarget,
};
use rtlsmith::ec::{
    classify_output, BitValue, CexTrace, Checker, EcError, EcJob, EcOutcome, EcVerdict, FailingAssertion, MismatchPair,
    RunOutput, ToolProfile, TraceHints,
};
use rtlsmith::gateway::{Gateway, Purpose, ScriptRule, ScriptedBackend, Transcript};
use rtlsmith::metrics::{
    adjusted_iterations, avg_and_std, design_fsr, isr, run_benchmark, total_effort, BenchmarkManifest, RunOutcome,
    RunRecord,
};
use rtlsmith::pipeline::Mode;
use rtlsmith::planner::compiler::{analyze, check_compiles, CompilerConfig};
use rtlsmith::planner::{build_dependency_graph, bundle_submodule, schedule, DependencyGraph, PlanError};
use rtlsmith::{AttemptRecord, CBundle, SubmoduleTask, TaskOrigin, TaskStatus, Tier, TimingRequirement, Workspace};

enum Verdict {
    Pass(String),
    Skip(String),
}

type Check = fn() -> Result<Verdict, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, started: Instant, what: &str) -> Result<(), String> {
    let took = started.elapsed();
    ensure!(took < limit, "{what} took {:.2}s, budget {:.0}s", took.as_secs_f64(), limit.as_secs_f64());
    Ok(())
}

fn main() {
    let criteria: [(u32, &str, Check); 8] = [
        (1, "metrics fidelity", metrics_fidelity),
        (2, "total effort and design FSR", effort_and_design_fsr),
        (3, "planner correctness", planner_correctness),
        (4, "debugger properties", debugger_properties),
        (5, "EC adapter", ec_adapter),
        (6, "end-to-end replay determinism", replay_determinism),
        (7, "monolithic baseline", monolithic_baseline),
        (8, "live hw-cbmc smoke test", live_smoke),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(Verdict::Pass(detail)) => println!("criterion {n} ({name}): PASS: {detail} [{secs:.2}s]"),
            Ok(Verdict::Skip(why)) => println!("criterion {n} ({name}): SKIPPED: {why}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn record(passed_initially: bool, iterations: u32, final_passed: bool, limit: u32) -> RunRecord {
    RunRecord {
        design: "d".into(),
        task: "t".into(),
        run: 0,
        passed_initially,
        iterations,
        final_passed,
        limit,
        outcome: if final_passed { RunOutcome::Verified } else { RunOutcome::Exhausted },
        module_lines: None,
        total_lines: None,
        error: None,
    }
}

fn metrics_fidelity() -> Result<Verdict, String> {
    let started = Instant::now();
    let mut runs: Vec<RunRecord> = (0..18).map(|_| record(true, 0, true, 20)).collect();
    runs.push(record(false, 4, true, 20));
    runs.push(record(false, 20, false, 20));
    let rate = isr(&runs).map_err(|e| e.to_string())?;
    ensure!(rate == 90.0, "ISR of 18/20 is {rate}, expected 90");

    let failed = record(false, 20, false, 20);
    let penalty = adjusted_iterations(&failed, 20);
    ensure!(penalty == 40.0, "failed run under limit 20 contributes {penalty}, expected 40");

    let three = [record(false, 1, true, 20), record(false, 3, true, 20), record(false, 20, false, 20)];
    let (avg, std) = avg_and_std(&three, 20).map_err(|e| e.to_string())?;
    // Independent oracle: the adjusted values are 1, 3 and 40.
    let xs = [1.0f64, 3.0, 40.0];
    let mean = (xs[0] + xs[1] + xs[2]) / 3.0;
    let pop_std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    ensure!((avg - 44.0 / 3.0).abs() < 1e-6, "I_avg {avg}, expected 44/3");
    ensure!(format!("{avg:.3}") == "14.667", "I_avg {avg} does not round to 14.667");
    ensure!((std - pop_std).abs() < 1e-9, "I_std {std}, population oracle {pop_std}");
    within(Duration::from_secs(1), started, "metrics")?;
    Ok(Verdict::Pass(format!("ISR 90%, I' 40, I_avg {avg:.3}, I_std {std:.4}")))
}

fn graph(edges: &[(&str, &str)]) -> DependencyGraph {
    let nodes: BTreeSet<&str> = edges.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let edges: Vec<(String, String)> = edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    DependencyGraph::from_edges(nodes.into_iter().map(String::from), &edges)
}

fn map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn effort_and_design_fsr() -> Result<Verdict, String> {
    let g = graph(&[("top", "a"), ("top", "b")]);
    let effort =
        total_effort("top", &g, &map(&[("top", 0.70), ("a", 3.45), ("b", 0.90)])).map_err(|e| e.to_string())?;
    ensure!(effort == 5.05, "I_total {effort:?}, expected exactly 5.05");
    let fsr = design_fsr("top", &g, &map(&[("top", 95.0), ("a", 100.0), ("b", 85.0)])).map_err(|e| e.to_string())?;
    ensure!((fsr - 80.75).abs() < 1e-9, "design FSR {fsr}, expected 80.75");

    // Diamond: the shared leaf must count once, unlike a sum over paths.
    let d = graph(&[("top", "l"), ("top", "r"), ("l", "leaf"), ("r", "leaf")]);
    let avgs = map(&[("top", 1.0), ("l", 2.0), ("r", 3.0), ("leaf", 10.0)]);
    let set_sum = 1.0 + 2.0 + 3.0 + 10.0;
    let path_sum = set_sum + 10.0;
    let effort = total_effort("top", &d, &avgs).map_err(|e| e.to_string())?;
    ensure!(effort == set_sum && effort != path_sum, "diamond I_total {effort}, set oracle {set_sum}");
    let fsrs = map(&[("top", 100.0), ("l", 100.0), ("r", 100.0), ("leaf", 50.0)]);
    let fsr_d = design_fsr("top", &d, &fsrs).map_err(|e| e.to_string())?;
    ensure!(fsr_d == 50.0, "diamond design FSR {fsr_d}, expected 50 (leaf once)");
    Ok(Verdict::Pass(format!("I_total 5.05, design FSR {fsr:.2}%, shared leaf counted once")))
}

fn random_dag() -> impl Strategy<Value = (Vec<String>, Vec<(String, String)>)> {
    (1usize..40)
        .prop_flat_map(|n| {
            // Name order differs from topological order.
            let names = Just((0..n).map(|i| format!("f{i}")).collect::<Vec<_>>()).prop_shuffle();
            (names, proptest::collection::vec((0..n, 0..n), 0..n * 3))
        })
        .prop_map(|(names, pairs)| {
            let edges =
                pairs.into_iter().filter(|(a, b)| a < b).map(|(a, b)| (names[a].clone(), names[b].clone())).collect();
            (names, edges)
        })
}

fn planner_correctness() -> Result<Verdict, String> {
    let started = Instant::now();
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner
        .run(&random_dag(), |(names, edges)| {
            let g = DependencyGraph::from_edges(names.iter().cloned(), &edges);
            let order = schedule(&g).expect("acyclic").ordered_tasks;
            let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
            prop_assert_eq!(order.len(), names.len());
            for (caller, callee) in &edges {
                prop_assert!(pos[callee.as_str()] < pos[caller.as_str()], "{} before {}", callee, caller);
            }
            let mut reversed = edges.clone();
            reversed.reverse();
            let again = DependencyGraph::from_edges(names.iter().rev().cloned(), &reversed);
            prop_assert_eq!(schedule(&again).expect("acyclic").ordered_tasks, order);
            Ok(())
        })
        .map_err(|e| format!("random DAG schedule: {e}"))?;

    let compiler = CompilerConfig::default();
    let mut bundles = 0;
    for (dir, top) in [("diamond", "diamond_top"), ("fp16", "roundPackToF16"), ("single", "parity8")] {
        let input = common::design_input(dir, top);
        let table = analyze(&compiler, &input.c_source).map_err(|e| format!("{dir}: {e}"))?;
        let g = build_dependency_graph(&table).map_err(|e| format!("{dir}: {e}"))?;
        let reach = g.reachable_from(top);
        let g = g.subgraph(&reach);
        let got: Vec<(String, String)> = g.call_edges.iter().cloned().collect();
        let want = common::oracle_edges(dir);
        ensure!(got == want, "{dir}: call graph {got:?}, oracle {want:?}");
        for f in &g.nodes {
            for leaf_only in [true, false] {
                let b = bundle_submodule(f, &g, &table, &input.c_source, leaf_only)
                    .map_err(|e| format!("{dir}/{f}: {e}"))?;
                check_compiles(&compiler, &b.source_text).map_err(|e| format!("{dir}/{f} bundle: {e}"))?;
                bundles += 1;
            }
        }
    }
    let recursive = common::design_input("recursive", "even_steps");
    let table = analyze(&compiler, &recursive.c_source).map_err(|e| e.to_string())?;
    let cycle = build_dependency_graph(&table).and_then(|g| schedule(&g).map(|_| ()));
    ensure!(matches!(cycle, Err(PlanError::Cycle { .. })), "recursive fixture was not rejected: {cycle:?}");
    within(Duration::from_secs(60), started, "planner suite")?;
    Ok(Verdict::Pass(format!(
        "1000 random DAGs, 3 fixture call graphs, {bundles} bundles compiled, recursion rejected"
    )))
}

fn patch_case() -> impl Strategy<Value = (Vec<String>, usize, usize, usize, String)> {
    proptest::collection::vec("[a-z ;=()]{0,12}", 1..30).prop_flat_map(|lines| {
        let n = lines.len();
        (Just(lines), 0..n, 0..n, 0usize..3, "[a-z;\n ]{0,20}")
    })
}

fn simplify_case() -> impl Strategy<Value = (Vec<(u8, u32)>, u8)> {
    (proptest::collection::vec((0u8..4, 0u32..6), 1..40), 0u8..5)
}

/// Passes once the task's RTL carries `PASS`; a syntax error otherwise.
struct MarkerChecker;

impl Checker for MarkerChecker {
    fn check(&self, job: &EcJob<'_>, _scratch: &Path) -> Result<(EcOutcome, f64), EcError> {
        let rtl = job.rtl.last().map(|r| r.1).unwrap_or("");
        let verdict = if rtl.contains("state: PASS") {
            EcVerdict::Pass
        } else {
            EcVerdict::SyntaxError {
                diagnostics: vec![rtlsmith::ec::Diagnostic {
                    file: format!("rtl/{}.v", job.task),
                    line: Some(2),
                    column: None,
                    message: "syntax error".into(),
                }],
            }
        };
        Ok((EcOutcome { verdict, raw_output: String::new() }, 0.0))
    }
}

fn repair_reply(kind: u8) -> String {
    let patch = |a: &str, r: &str| format!("TARGET: rtl\n```ANCHOR\n{a}\n```\n```REPLACEMENT\n{r}\n```\n");
    match kind % 4 {
        0 => patch("// state: FAIL", "// state: PASS"),
        1 => patch("// state: FAIL", "// state: FAIL "),
        2 => patch("no such text", "x"),
        _ => "I am not sure what to change.".to_string(),
    }
}

fn scripted_task(design: &str) -> SubmoduleTask {
    SubmoduleTask {
        design: design.into(),
        name: "t".into(),
        origin: TaskOrigin::Decomposed,
        bundle: CBundle {
            focus_function: "t".into(),
            source_text: "int t(int a) { return a; }\n".into(),
            required_symbols: vec![],
        },
        reference_source: "int t(int a) { return a; }\n".into(),
        refined_spec: "# Module `t`\nidentity\n".into(),
        timing: Some(TimingRequirement::Combinational),
        status: TaskStatus::Planned,
        attempts: vec![],
        dependencies: vec![],
    }
}

fn debugger_properties() -> Result<Verdict, String> {
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    runner
        .run(&patch_case(), |(lines, a, b, mode, replacement)| {
            let marker = "@@ANCHOR@@";
            let mut file_lines = lines.clone();
            let (lo, hi) = (a.min(b), a.max(b));
            file_lines[lo] = format!("{}{marker}", file_lines[lo]);
            if mode == 2 && hi != lo {
                file_lines[hi] = format!("{marker}{}", file_lines[hi]);
            }
            let file = file_lines.join("\n");
            let anchor = if mode == 1 { "@@missing@@".to_string() } else { marker.to_string() };
            let p = PatchProposal {
                target: PatchTarget::Rtl,
                anchor: anchor.clone(),
                replacement: replacement.clone(),
                rationale: String::new(),
            };
            let occurrences = file.matches(&anchor).count();
            match apply_patch(&file, &p) {
                Ok(out) => {
                    prop_assert_eq!(occurrences, 1);
                    let at = file.find(&anchor).unwrap();
                    let tail = &file[at + anchor.len()..];
                    prop_assert!(out.starts_with(&file[..at]));
                    prop_assert!(out.ends_with(tail));
                    prop_assert_eq!(&out[at..out.len() - tail.len()], replacement.as_str());
                }
                Err(_) => prop_assert_ne!(occurrences, 1),
            }
            Ok(())
        })
        .map_err(|e| format!("apply_patch locality: {e}"))?;

    let mut runner = TestRunner::new(Config { cases: 2_000, failure_persistence: None, ..Config::default() });
    runner
        .run(&simplify_case(), |(pairs, focus)| {
            let scopes = ["s0", "s1", "s2", "s3", "s4"];
            let mismatch: Vec<MismatchPair> = pairs
                .iter()
                .enumerate()
                .map(|(i, (s, c))| MismatchPair {
                    signal: format!("sig{i}"),
                    c_value: BitValue::from_u128(i as u128, 8),
                    rtl_value: BitValue::from_u128(i as u128 + 1, 8),
                    scope: scopes[*s as usize].into(),
                    cycle: *c,
                })
                .collect();
            let trace = CexTrace {
                steps: vec![],
                failing_assertion: FailingAssertion {
                    id: "a".into(),
                    expression: "x == rtl.y".into(),
                    file: None,
                    line: None,
                    function: None,
                },
                mismatch_pairs: mismatch.clone(),
            };
            let focus = scopes[focus as usize];
            let s = simplify_counterexample(&trace, focus);
            prop_assert!(s.retained.iter().all(|p| mismatch.contains(p)));
            let in_focus = mismatch.iter().filter(|p| p.scope == focus).count();
            if in_focus == 0 {
                prop_assert!(s.fallback);
                prop_assert_eq!(s.retained.len(), mismatch.len());
            } else {
                prop_assert!(!s.fallback);
                prop_assert_eq!(s.retained.len(), in_focus);
                prop_assert_eq!(s.retained.len() + s.dropped_count, mismatch.len());
            }
            Ok(())
        })
        .map_err(|e| format!("simplifier invariants: {e}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ws = Workspace::open(dir.path(), true).map_err(|e| e.to_string())?;
    let mut runner = TestRunner::new(Config { cases: 150, failure_persistence: None, ..Config::default() });
    let counter = std::sync::atomic::AtomicU32::new(0);
    runner
        .run(&(1u32..8, proptest::collection::vec(0u8..4, 1..20)), |(limit, kinds)| {
            let k = counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            let mut task = scripted_task(&format!("d{k}"));
            ws.save_task(&task).unwrap();
            let attempt = AttemptRecord {
                index: 0,
                model_tier: Tier::Strong,
                rtl_text: "module t(input a, output y);\n// state: FAIL\nendmodule\n".into(),
                harness_text: "int main(void) { return 0; }\n".into(),
                ec_outcome: MarkerChecker
                    .check(
                        &EcJob {
                            design: "d",
                            task: "t",
                            timing: TimingRequirement::Combinational,
                            harness: "",
                            reference: "",
                            rtl: vec![("t", "")],
                        },
                        Path::new("."),
                    )
                    .unwrap()
                    .0,
                patch: None,
                wall_time: 0.0,
            };
            ws.record_attempt(&mut task, attempt, &Transcript::default()).unwrap();
            let replies: Vec<String> = kinds.iter().map(|k| repair_reply(*k)).collect();
            let refs: Vec<&str> = replies.iter().map(String::as_str).collect();
            let backend = ScriptedBackend::new(vec![ScriptRule {
                purpose: Some(Purpose::Repair),
                needles: vec![],
                responses: refs.iter().map(|s| s.to_string()).collect(),
            }]);
            let gateway = Gateway::new(Arc::new(backend), 1);
            let settings = DebugSettings { limit, ..DebugSettings::default() };
            let ctx = DebugContext {
                workspace: &ws,
                gateway: &gateway,
                checker: &MarkerChecker,
                dependency_rtl: &[],
                settings: &settings,
            };
            let out = debug_loop(&mut task, &ctx).unwrap();
            prop_assert!(out.iterations_used <= limit);
            prop_assert_eq!(task.attempts.len() as u32, out.iterations_used + 1);
            match out.status {
                DebugStatus::Fixed => prop_assert!(out.final_attempt.ec_outcome.is_pass()),
                DebugStatus::Exhausted => {
                    prop_assert_eq!(out.iterations_used, limit);
                    prop_assert_eq!(task.status, TaskStatus::Failed);
                }
            }
            let stored = ws.task(&task.design, "t").unwrap();
            prop_assert_eq!(stored.attempts.len(), task.attempts.len());
            Ok(())
        })
        .map_err(|e| format!("debug_loop termination: {e}"))?;
    Ok(Verdict::Pass("10000 patch cases, 2000 simplifier traces, 150 scripted repair loops".into()))
}

fn fixture_output(name: &str, module: &str) -> String {
    let text = std::fs::read_to_string(common::fixtures().join("ec/transcripts").join(format!("{name}.txt"))).unwrap();
    text.replace("{file}", &format!("rtl/{module}.v")).replace("{line}", "7").replace("{module}", module)
}

fn run_output(code: Option<i32>, output: String) -> RunOutput {
    RunOutput { exit_code: code, output, elapsed: 0.1, timed_out: false, timeout_secs: 600.0, bound: 1 }
}

fn ec_adapter() -> Result<Verdict, String> {
    let profile = ToolProfile::builtin("hw-cbmc").ok_or("no builtin hw-cbmc profile")?;
    let fragments: Vec<String> = ["pass", "syntax", "cex", "cex_seq"]
        .iter()
        .flat_map(|n| fixture_output(n, "m").lines().map(String::from).collect::<Vec<_>>())
        .collect();
    let kinds = ["pass", "syntax_error", "counterexample", "timeout", "tool_error"];
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let strategy = (
        proptest::collection::vec(prop_oneof![(0..fragments.len()).prop_map(Some), Just(None)], 0..40),
        proptest::collection::vec(any::<char>(), 0..30),
        prop_oneof![Just(None), (-1i32..20).prop_map(Some)],
        any::<bool>(),
    );
    runner
        .run(&strategy, |(picks, noise, code, timed_out)| {
            let mut out = String::new();
            for p in picks {
                match p {
                    Some(i) => out.push_str(&fragments[i]),
                    None => out.extend(noise.iter()),
                }
                out.push('\n');
            }
            let mut run = run_output(code, out);
            run.timed_out = timed_out;
            let o = classify_output(&run, &profile, &TraceHints::default());
            prop_assert!(kinds.contains(&o.verdict.kind_name()));
            Ok(())
        })
        .map_err(|e| format!("classification totality: {e}"))?;

    let hints = |h: &str| TraceHints::from_harness(h, "roundPackToF16");
    let pass = classify_output(&run_output(Some(0), fixture_output("pass", "m")), &profile, &TraceHints::default());
    ensure!(pass.is_pass(), "pass fixture classified as {}", pass.verdict.kind_name());
    let syntax = classify_output(&run_output(Some(6), fixture_output("syntax", "m")), &profile, &TraceHints::default());
    match &syntax.verdict {
        EcVerdict::SyntaxError { diagnostics } => {
            ensure!(diagnostics.len() == 1 && diagnostics[0].line == Some(7), "syntax diagnostics {diagnostics:?}")
        }
        other => return Err(format!("syntax fixture classified as {}", other.kind_name())),
    }
    let harness = "    uint16_t c_result = roundPackToF16(sign, exp, sig);\n";
    let cex =
        classify_output(&run_output(Some(10), fixture_output("cex", "roundPackToF16")), &profile, &hints(harness));
    let trace = match &cex.verdict {
        EcVerdict::Counterexample { report } => report.trace().ok_or("seeded counterexample did not parse")?.clone(),
        other => return Err(format!("counterexample fixture classified as {}", other.kind_name())),
    };
    ensure!(trace.mismatch_pairs.len() == 1, "expected one mismatch pair, got {:?}", trace.mismatch_pairs);
    let p = &trace.mismatch_pairs[0];
    ensure!(
        p.c_value.to_string() == "0x3C00" && p.rtl_value.to_string() == "0x3C01",
        "mismatch values C {} RTL {}",
        p.c_value,
        p.rtl_value
    );
    let differing = p.c_value.to_u128().unwrap() ^ p.rtl_value.to_u128().unwrap();
    ensure!(differing.count_ones() == 1, "seeded mismatch differs in {} bits", differing.count_ones());
    Ok(Verdict::Pass(format!("10000 fuzzed outputs, fixtures classified, mismatch {} vs {}", p.c_value, p.rtl_value)))
}

fn rtlsmith(args: &[&str], envs: &[(&str, &Path)]) -> (bool, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rtlsmith"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("run rtlsmith");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.success(), text)
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn replay_determinism() -> Result<Verdict, String> {
    let started = Instant::now();
    let fx = common::fixtures();
    let config = fx.join("config/replay.toml");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let design = |ws: &Path| -> Vec<String> {
        [
            "--config",
            config.to_str().unwrap(),
            "--workspace",
            ws.to_str().unwrap(),
            "run",
            "--c",
            fx.join("designs/diamond/design.c").to_str().unwrap(),
            "--spec",
            fx.join("designs/diamond/spec.md").to_str().unwrap(),
            "--top",
            "diamond_top",
            "--name",
            "diamond",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let log = dir.path().join("ec-calls.log");
    let mut trees = Vec::new();
    for k in 0..2 {
        let ws = dir.path().join(format!("ws{k}"));
        let args = design(&ws);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (ok, out) = rtlsmith(&refs, &[("EC_STUB_LOG", &log)]);
        ensure!(ok, "replay run {k} exited nonzero:\n{out}");
        ensure!(out.contains("diamond/scale_a: {\"result\":\"verified\",\"iterations\":2}"), "run {k} output:\n{out}");
        trees.push(tree(&ws));
    }
    ensure!(trees[0] == trees[1], "replay workspaces differ: {:?}", diff_keys(&trees[0], &trees[1]));
    ensure!(trees[0].keys().any(|p| p.ends_with("report.json")), "no report written");

    let ws0 = dir.path().join("ws0");
    let before = std::fs::read_to_string(&log).unwrap_or_default().lines().count();
    let args = design(&ws0);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (ok, out) = rtlsmith(&refs, &[("EC_STUB_LOG", &log)]);
    let after = std::fs::read_to_string(&log).unwrap_or_default().lines().count();
    ensure!(ok, "resume run exited nonzero:\n{out}");
    ensure!(out.contains("model requests: 0, equivalence checks: 0"), "resume issued calls:\n{out}");
    ensure!(before == after, "stub checker ran {} more times on resume", after - before);
    ensure!(tree(&ws0) == trees[0], "resume changed the workspace");

    let (ok, report) = rtlsmith(&["--workspace", ws0.to_str().unwrap(), "report"], &[]);
    ensure!(ok && report.contains("ISR%") && report.contains("I_avg"), "report:\n{report}");
    within(Duration::from_secs(30), started, "replay")?;
    Ok(Verdict::Pass(format!("2 identical workspaces of {} files, resume made 0 calls", trees[0].len())))
}

fn diff_keys(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) -> Vec<PathBuf> {
    let keys: BTreeSet<&PathBuf> = a.keys().chain(b.keys()).collect();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}

fn monolithic_baseline() -> Result<Verdict, String> {
    let manifest =
        BenchmarkManifest::load(&common::fixtures().join("bench/diamond.toml")).map_err(|e| e.to_string())?;
    ensure!(manifest.designs[0].limit == Some(5), "fixture manifest must set limit 5");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = common::stub_config(dir.path());
    let run = |mode: Mode| {
        run_benchmark(
            &manifest,
            mode,
            &config,
            dir.path(),
            common::diamond_backend(),
            Arc::new(common::stub_runner()),
            Some(1),
        )
        .map_err(|e| e.to_string())
    };
    let mono = run(Mode::Monolithic)?;
    ensure!(mono.records.len() == 1, "monolithic ledger has {} records", mono.records.len());
    let r = &mono.records[0];
    ensure!(r.task == "diamond_top" && !r.final_passed && r.iterations == 5 && r.limit == 5, "monolithic record {r:?}");
    let deco = run(Mode::Decomposed)?;
    ensure!(deco.records.len() == 4, "decomposed ledger has {} records", deco.records.len());
    ensure!(deco.records.iter().all(|r| r.final_passed), "decomposed run did not verify: {:?}", deco.records);
    let used: u32 = deco.records.iter().map(|r| r.iterations).sum();
    Ok(Verdict::Pass(format!("monolithic capped at 5 and failed; decomposed verified 4 tasks with {used} repairs")))
}

fn on_path(tool: &str) -> bool {
    std::env::var_os("PATH").map(|p| std::env::split_paths(&p).any(|d| d.join(tool).is_file())).unwrap_or(false)
}

fn live_smoke() -> Result<Verdict, String> {
    if !on_path("hw-cbmc") {
        return Ok(Verdict::Skip("hw-cbmc is not installed; the live equivalence check was not run".into()));
    }
    let runner = rtlsmith::ec::EcRunner::new(
        ToolProfile::builtin("hw-cbmc").ok_or("no builtin hw-cbmc profile")?,
        None,
        1,
        600.0,
        1,
    );
    let base = common::fixtures().join("ec/lzc4");
    let read = |f: &str| std::fs::read_to_string(base.join(f)).unwrap();
    let (reference, harness) = (read("reference.c"), read("harness.c"));
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let check = |rtl: &str| {
        let job = EcJob {
            design: "smoke",
            task: "lzc4",
            timing: TimingRequirement::Combinational,
            harness: &harness,
            reference: &reference,
            rtl: vec![("lzc4", rtl)],
        };
        runner.check(&job, scratch.path()).map_err(|e| e.to_string())
    };
    let (good, _) = check(&read("module.v"))?;
    ensure!(good.is_pass(), "known-correct lzc4 gave {}: {}", good.verdict.kind_name(), good.raw_output);
    let (bad, _) = check(&read("module_broken.v"))?;
    match &bad.verdict {
        EcVerdict::Counterexample { report } => {
            let pairs = report.trace().map(|t| t.mismatch_pairs.len()).unwrap_or(0);
            ensure!(pairs > 0, "broken lzc4 counterexample has no mismatch pairs");
        }
        other => return Err(format!("broken lzc4 gave {}", other.kind_name())),
    }
    Ok(Verdict::Pass("correct lzc4 passes, broken lzc4 yields a counterexample".into()))
}
