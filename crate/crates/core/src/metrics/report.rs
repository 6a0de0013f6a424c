// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{avg_and_std, design_fsr, fsr, isr, total_effort, MetricsError, RunLedger, RunRecord};
use crate::planner::DesignPlan;

/// JSON Schema of [`render_json`] output.
pub const REPORT_SCHEMA: &str = include_str!("../../assets/schemas/report.schema.json");

/// Stated in every report so line counts are never compared across rules.
pub const LINE_RULE: &str =
    "RTL line counts exclude blank and comment-only lines and are averaged over verified runs only";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Leaf,
    Mid,
    Top,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub design: String,
    pub task: String,
    pub kind: ModuleKind,
    pub runs: usize,
    pub limit: u32,
    pub isr: f64,
    pub i_avg: f64,
    pub i_std: f64,
    pub fsr: f64,
    pub module_lines: Option<f64>,
    pub total_lines: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub design: String,
    pub top: String,
    /// Tasks in the top's dependency closure, top included.
    pub tasks: usize,
    pub i_total: f64,
    pub design_fsr: f64,
}

/// Every number here is recomputable from `runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub line_rule: String,
    pub tasks: Vec<TaskRow>,
    pub designs: Vec<DesignRow>,
    pub runs: Vec<RunRecord>,
}

fn mean_of(values: impl Iterator<Item = usize>) -> Option<f64> {
    let v: Vec<usize> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<usize>() as f64 / v.len() as f64)
}

fn kind_of(plan: &DesignPlan, task: &str) -> ModuleKind {
    if task == plan.top {
        ModuleKind::Top
    } else if plan.graph.dependencies(task).is_empty() {
        ModuleKind::Leaf
    } else {
        ModuleKind::Mid
    }
}

/// Per-task rows for the tasks each plan owns, then per-design rows.
/// A task reused from another design is measured under its owner.
pub fn compute_report(ledger: &RunLedger, plans: &[DesignPlan]) -> Result<MetricsReport, MetricsError> {
    let grouped = ledger.by_task();
    let mut rows: BTreeMap<(String, String), TaskRow> = BTreeMap::new();
    let mut tasks = Vec::new();
    for plan in plans {
        for name in plan.schedule.iter().filter(|n| !plan.owners.contains_key(*n)) {
            let key = (plan.design.clone(), name.clone());
            let runs = grouped
                .get(&key)
                .ok_or_else(|| MetricsError::Incomplete { design: plan.design.clone(), task: name.clone() })?;
            let limit = runs.iter().map(|r| r.limit).max().unwrap_or(0);
            let (i_avg, i_std) = avg_and_std(runs, limit)?;
            let passing = || runs.iter().filter(|r| r.final_passed);
            let row = TaskRow {
                design: plan.design.clone(),
                task: name.clone(),
                kind: kind_of(plan, name),
                runs: runs.len(),
                limit,
                isr: isr(runs)?,
                i_avg,
                i_std,
                fsr: fsr(runs)?,
                module_lines: mean_of(passing().filter_map(|r| r.module_lines)),
                total_lines: mean_of(passing().filter_map(|r| r.total_lines)),
            };
            rows.insert(key, row.clone());
            tasks.push(row);
        }
    }
    let mut designs = Vec::new();
    for plan in plans {
        let graph = plan.graph.dependency_graph();
        let mut i_avg = BTreeMap::new();
        let mut fsrs = BTreeMap::new();
        for name in &plan.schedule {
            let key = (plan.owner_of(name).to_string(), name.clone());
            if let Some(row) = rows.get(&key) {
                i_avg.insert(name.clone(), row.i_avg);
                fsrs.insert(name.clone(), row.fsr);
            }
        }
        designs.push(DesignRow {
            design: plan.design.clone(),
            top: plan.top.clone(),
            tasks: 1 + graph.transitive_callees(&plan.top).len(),
            i_total: total_effort(&plan.top, &graph, &i_avg)?,
            design_fsr: design_fsr(&plan.top, &graph, &fsrs)?,
        });
    }
    Ok(MetricsReport { line_rule: LINE_RULE.to_string(), tasks, designs, runs: ledger.records.clone() })
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.1}"))
}

/// Fixed-width text tables.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<24} {:<4} {:>4} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
        "design", "task", "kind", "runs", "ISR%", "I_avg", "I_std", "FSR%", "lines", "total"
    );
    for r in &report.tasks {
        let kind = match r.kind {
            ModuleKind::Leaf => "leaf",
            ModuleKind::Mid => "mid",
            ModuleKind::Top => "top",
        };
        let _ = writeln!(
            out,
            "{:<16} {:<24} {:<4} {:>4} {:>7.1} {:>7.2} {:>7.2} {:>7.1} {:>7} {:>7}",
            r.design,
            r.task,
            kind,
            r.runs,
            r.isr,
            r.i_avg,
            r.i_std,
            r.fsr,
            opt(r.module_lines),
            opt(r.total_lines)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<16} {:<24} {:>5} {:>8} {:>8}", "design", "top", "tasks", "I_total", "FSR%");
    for d in &report.designs {
        let _ = writeln!(out, "{:<16} {:<24} {:>5} {:>8.2} {:>8.1}", d.design, d.top, d.tasks, d.i_total, d.design_fsr);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "note: {}", report.line_rule);
    out
}

pub fn render_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::RunOutcome;
    use crate::model::TaskOrigin;
    use crate::planner::PlanGraph;

    fn rec(design: &str, task: &str, run: u32, iterations: u32, passed: bool) -> RunRecord {
        RunRecord {
            design: design.into(),
            task: task.into(),
            run,
            passed_initially: passed && iterations == 0,
            iterations,
            final_passed: passed,
            limit: 5,
            outcome: if passed { RunOutcome::Verified } else { RunOutcome::Exhausted },
            module_lines: passed.then_some(10 + run as usize),
            total_lines: passed.then_some(20),
            error: None,
        }
    }

    fn plan(design: &str, edges: &[(&str, &str)], owners: &[(&str, &str)]) -> DesignPlan {
        let mut graph = PlanGraph::default();
        for (a, b) in edges {
            graph.nodes.insert(a.to_string());
            graph.nodes.insert(b.to_string());
            graph.edges.insert((a.to_string(), b.to_string()));
        }
        let g = graph.dependency_graph();
        let sched = crate::planner::schedule(&g).unwrap();
        DesignPlan {
            design: design.into(),
            top: "top".into(),
            origin: TaskOrigin::Decomposed,
            schedule: sched.ordered_tasks.clone(),
            graph,
            owners: owners.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    #[test]
    fn diamond_counts_shared_leaf_once() {
        let p = plan("d", &[("top", "a"), ("top", "b"), ("a", "leaf"), ("b", "leaf")], &[]);
        let mut ledger = RunLedger::default();
        for t in ["top", "a", "b"] {
            ledger.push(rec("d", t, 0, 1, true)).unwrap();
        }
        ledger.push(rec("d", "leaf", 0, 5, false)).unwrap();
        let r = compute_report(&ledger, &[p]).unwrap();
        assert_eq!(r.designs[0].tasks, 4);
        assert_eq!(r.designs[0].i_total, 1.0 + 1.0 + 1.0 + 10.0);
        assert_eq!(r.designs[0].design_fsr, 0.0);
        let leaf = r.tasks.iter().find(|t| t.task == "leaf").unwrap();
        assert_eq!((leaf.kind, leaf.module_lines), (ModuleKind::Leaf, None));
        assert!(render_table(&r).contains(LINE_RULE));
    }

    #[test]
    fn reused_task_measured_under_owner() {
        let p1 = plan("one", &[("top", "shared")], &[]);
        let p2 = plan("two", &[("top", "shared")], &[("shared", "one")]);
        let mut ledger = RunLedger::default();
        for (d, t) in [("one", "top"), ("one", "shared"), ("two", "top")] {
            ledger.push(rec(d, t, 0, 2, true)).unwrap();
        }
        let r = compute_report(&ledger, &[p1, p2]).unwrap();
        assert_eq!(r.tasks.len(), 3);
        assert_eq!(r.designs[1].i_total, 4.0);
    }

    #[test]
    fn missing_task_is_named() {
        let p = plan("d", &[("top", "a")], &[]);
        let mut ledger = RunLedger::default();
        ledger.push(rec("d", "top", 0, 0, true)).unwrap();
        let err = compute_report(&ledger, &[p]).unwrap_err();
        assert!(err.to_string().contains("d/a"));
    }
}
