// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use rtlsmith::config::{FailurePolicy, PipelineConfig};
use rtlsmith::metrics::{compute_report, RunLedger, RunOutcome};
use rtlsmith::pipeline::{DesignSummary, Mode, Pipeline, TaskResult};
use rtlsmith::planner::compiler::{analyze, check_compiles, CompilerConfig};
use rtlsmith::planner::{build_dependency_graph, merge_scattered_sources};
use rtlsmith::{DesignInput, TaskStatus, Workspace};

fn run(config: &PipelineConfig, ws: &Workspace, mode: Mode) -> DesignSummary {
    let pipeline =
        Pipeline::new(config, ws.clone(), common::diamond_backend(), Arc::new(common::stub_runner())).unwrap();
    pipeline.run(&[common::design_input("diamond", "diamond_top")], mode).unwrap().remove(0)
}

#[test]
fn exhausted_task_blocks_its_callers() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::stub_config(dir.path());
    config.limit = 1;
    let ws = Workspace::open(dir.path(), true).unwrap();
    let summary = run(&config, &ws, Mode::Decomposed);
    assert_eq!(summary.tasks["clamp8"], TaskResult::Verified { iterations: 0 });
    assert_eq!(summary.tasks["scale_b"], TaskResult::Verified { iterations: 0 });
    assert_eq!(summary.tasks["scale_a"], TaskResult::Failed { iterations: 1 });
    assert_eq!(summary.tasks["diamond_top"], TaskResult::Blocked { dependency: "scale_a".into() });
    assert!(!summary.top_verified());
    assert_eq!(ws.task("diamond", "scale_a").unwrap().status, TaskStatus::Failed);

    let ledger = RunLedger::from_workspace(&ws, 1);
    let by_name = |t: &str| ledger.records.iter().find(|r| r.task == t).unwrap().clone();
    assert_eq!(by_name("scale_a").outcome, RunOutcome::Exhausted);
    assert_eq!(by_name("diamond_top").outcome, RunOutcome::NotCompleted);

    let report = compute_report(&ledger, &[ws.plan("diamond").unwrap()]).unwrap();
    let row = report.tasks.iter().find(|r| r.task == "scale_a").unwrap();
    assert_eq!((row.isr, row.fsr, row.i_avg), (0.0, 0.0, 2.0));
    assert_eq!(row.module_lines, None);
    let design = &report.designs[0];
    assert_eq!(design.design_fsr, 0.0);
}

#[test]
fn abort_policy_stops_the_design() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::stub_config(dir.path());
    config.limit = 1;
    config.failure_policy = FailurePolicy::AbortDesign;
    let ws = Workspace::open(dir.path(), true).unwrap();
    let summary = run(&config, &ws, Mode::Decomposed);
    assert_eq!(summary.tasks["clamp8"], TaskResult::Verified { iterations: 0 });
    assert_eq!(summary.tasks["scale_a"], TaskResult::Failed { iterations: 1 });
    assert_eq!(summary.tasks["scale_b"], TaskResult::Aborted);
    assert!(ws.task("diamond", "scale_b").unwrap().attempts.is_empty());
}

#[test]
fn monolithic_mode_generates_one_module() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::stub_config(dir.path());
    config.limit = 3;
    let ws = Workspace::open(dir.path(), true).unwrap();
    let summary = run(&config, &ws, Mode::Monolithic);
    assert_eq!(summary.tasks.len(), 1);
    assert_eq!(summary.tasks["diamond_top"], TaskResult::Failed { iterations: 3 });
    let task = ws.task("diamond", "diamond_top").unwrap();
    assert_eq!(task.attempts.len(), 4);
    assert!(task.dependencies.is_empty());
}

#[test]
fn rerun_skips_finished_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::stub_config(dir.path());
    let ws = Workspace::open(dir.path(), true).unwrap();
    assert!(run(&config, &ws, Mode::Decomposed).top_verified());
    let before = ws.task("diamond", "scale_a").unwrap();
    let again = run(&config, &ws, Mode::Decomposed);
    assert!(again.top_verified());
    assert_eq!(again.tasks["scale_a"], TaskResult::Verified { iterations: 2 });
    assert_eq!(ws.task("diamond", "scale_a").unwrap(), before);
}

#[test]
fn scattered_sources_merge_into_one_unit() {
    let base = common::fixtures().join("designs/scattered");
    let files: Vec<String> =
        ["top.c", "add.c"].iter().map(|f| std::fs::read_to_string(base.join(f)).unwrap()).collect();
    let merged = merge_scattered_sources(&files, "sum3").unwrap();
    assert_eq!(merged.matches("uint8_t add_sat(uint8_t a, uint8_t b)\n{").count(), 1);
    assert!(merged.find("add_sat(uint8_t a").unwrap() < merged.find("sum3(").unwrap());

    let compiler = CompilerConfig::default();
    check_compiles(&compiler, &merged).unwrap();
    let table = analyze(&compiler, &merged).unwrap();
    let graph = build_dependency_graph(&table).unwrap();
    assert_eq!(graph.call_edges.iter().cloned().collect::<Vec<_>>(), [("sum3".to_string(), "add_sat".to_string())]);

    // The callee is declared but never defined.
    assert!(merge_scattered_sources(&files[..1], "sum3").is_err());
}

#[test]
fn unknown_top_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::stub_config(dir.path());
    let ws = Workspace::open(dir.path(), true).unwrap();
    let pipeline = Pipeline::new(&config, ws, common::diamond_backend(), Arc::new(common::stub_runner())).unwrap();
    let mut input: DesignInput = common::design_input("diamond", "diamond_top");
    input.top_function = "no_such_function".into();
    assert!(pipeline.run(&[input], Mode::Decomposed).is_err());
}
