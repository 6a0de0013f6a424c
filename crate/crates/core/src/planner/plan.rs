// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::compiler::{analyze, CompilerConfig};
use super::graph::{build_dependency_graph, schedule, DependencyGraph};
use super::{bundle_submodule, refine_spec, PlanError};
use crate::gateway::{Gateway, Transcript};
use crate::model::{CBundle, DesignInput, SubmoduleTask, TaskOrigin, TaskStatus};
use crate::prompts::Prompts;
use crate::workspace::Workspace;

/// Call structure of one planned design.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanGraph {
    pub nodes: BTreeSet<String>,
    /// `(caller, callee)`.
    pub edges: BTreeSet<(String, String)>,
}

impl PlanGraph {
    pub fn dependency_graph(&self) -> DependencyGraph {
        let edges: Vec<(String, String)> = self.edges.iter().cloned().collect();
        DependencyGraph::from_edges(self.nodes.iter().cloned(), &edges)
    }

    pub fn dependencies(&self, name: &str) -> Vec<String> {
        self.edges.iter().filter(|(a, _)| a == name).map(|(_, b)| b.clone()).collect()
    }

    /// Every task `name` depends on, directly or not.
    pub fn transitive_dependencies(&self, name: &str) -> BTreeSet<String> {
        self.dependency_graph().transitive_callees(name)
    }
}

/// Persisted result of planning one design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignPlan {
    pub design: String,
    pub top: String,
    pub origin: TaskOrigin,
    /// Generation order; dependencies first.
    pub schedule: Vec<String>,
    pub graph: PlanGraph,
    /// Tasks reused from another design of the workspace: name -> design
    /// that owns the task.
    pub owners: BTreeMap<String, String>,
}

impl DesignPlan {
    pub fn owner_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.owners.get(name).map(String::as_str).unwrap_or(&self.design)
    }
}

#[derive(Debug, Clone)]
pub struct PlannedTask {
    pub position: usize,
    pub task: SubmoduleTask,
    /// Owned by another design with an identical bundle.
    pub reused: bool,
}

fn existing_plan(ws: &Workspace, input: &DesignInput) -> Result<Option<DesignPlan>, PlanError> {
    let Some(plan) = ws.plan(&input.design_name) else { return Ok(None) };
    let stored = ws.design_dir(&input.design_name).join("plan").join("design.c");
    let same = std::fs::read_to_string(&stored).map(|s| s == input.c_source).unwrap_or(false);
    if !same || plan.top != input.top_function {
        return Err(PlanError::Stale(input.design_name.clone()));
    }
    Ok(Some(plan))
}

fn planned_tasks(ws: &Workspace, plan: &DesignPlan) -> Result<Vec<PlannedTask>, PlanError> {
    plan.schedule
        .iter()
        .enumerate()
        .map(|(position, name)| {
            let task = ws.resolve(&plan.design, name).ok_or_else(|| {
                PlanError::Workspace(crate::workspace::WorkspaceError::UnknownTask {
                    design: plan.owner_of(name).to_string(),
                    task: name.clone(),
                })
            })?;
            Ok(PlannedTask { position, reused: plan.owners.contains_key(name), task })
        })
        .collect()
}

/// A task of another design with the same name and bundle text.
fn shared_owner(ws: &Workspace, design: &str, name: &str, bundle: &CBundle) -> Option<String> {
    ws.designs()
        .into_iter()
        .filter(|d| d != design)
        .filter_map(|d| ws.task(&d, name))
        .find(|t| t.origin == TaskOrigin::Decomposed && t.bundle.source_text == bundle.source_text)
        .map(|t| t.design)
}

/// Splits `input` into one task per function reachable from the top
/// function, refines a specification for each and persists the plan.
///
/// Re-planning a design already in the workspace returns the stored tasks
/// without model calls. A function whose bundle is identical to a task of
/// another design is not planned again; the plan records that design as its
/// owner.
pub fn plan_design(
    input: &DesignInput,
    ws: &Workspace,
    gateway: &Gateway,
    compiler: &CompilerConfig,
    prompts: &Prompts,
) -> Result<Vec<PlannedTask>, PlanError> {
    input.validate()?;
    if let Some(plan) = existing_plan(ws, input)? {
        return planned_tasks(ws, &plan);
    }
    let source = &input.c_source;
    let table = analyze(compiler, source)?;
    if !table.functions.contains_key(&input.top_function) {
        return Err(PlanError::MissingTop(input.top_function.clone()));
    }
    let full = build_dependency_graph(&table)?;
    let graph = full.subgraph(&full.reachable_from(&input.top_function));
    let order = schedule(&graph)?;

    let design = &input.design_name;
    let mut owners = BTreeMap::new();
    for name in &order.ordered_tasks {
        let mut plan_one = || -> Result<(), PlanError> {
            let bundle = bundle_submodule(name, &graph, &table, source, true)?;
            if let Some(owner) = shared_owner(ws, design, name, &bundle) {
                tracing::info!(design = %design, task = %name, owner = %owner, "reusing shared submodule");
                owners.insert(name.clone(), owner);
                return Ok(());
            }
            let reference = bundle_submodule(name, &graph, &table, source, false)?;
            let mut transcript = Transcript::default();
            let refined = refine_spec(
                &input.spec_text,
                &bundle,
                gateway,
                &mut transcript,
                prompts,
                &format!("{design}/{name}/spec"),
            )?;
            let task = SubmoduleTask {
                design: design.clone(),
                name: name.clone(),
                origin: TaskOrigin::Decomposed,
                bundle,
                reference_source: reference.source_text,
                refined_spec: refined,
                timing: None,
                status: TaskStatus::Planned,
                attempts: Vec::new(),
                dependencies: graph.callees(name).into_iter().map(str::to_string).collect(),
            };
            ws.save_task(&task)?;
            ws.append_module_transcript(design, name, &transcript)?;
            Ok(())
        };
        plan_one().map_err(|e| e.in_function(name))?;
    }

    let plan = DesignPlan {
        design: design.clone(),
        top: input.top_function.clone(),
        origin: TaskOrigin::Decomposed,
        schedule: order.ordered_tasks,
        graph: PlanGraph { nodes: graph.nodes.clone(), edges: graph.call_edges.clone() },
        owners,
    };
    ws.save_plan(&plan, source, &input.spec_text)?;
    planned_tasks(ws, &plan)
}

/// The whole design as one task: the C model is appended to the design
/// specification as plain text and no decomposition or refinement happens.
pub fn plan_monolithic(input: &DesignInput, ws: &Workspace) -> Result<Vec<PlannedTask>, PlanError> {
    input.validate()?;
    if let Some(plan) = existing_plan(ws, input)? {
        return planned_tasks(ws, &plan);
    }
    let top = &input.top_function;
    let spec = format!(
        "{}\n\nC reference model of the whole design (entry function `{top}`):\n\n```c\n{}\n```\n",
        input.spec_text.trim_end(),
        input.c_source.trim_end()
    );
    let task = SubmoduleTask {
        design: input.design_name.clone(),
        name: top.clone(),
        origin: TaskOrigin::Monolithic,
        bundle: CBundle {
            focus_function: top.clone(),
            source_text: input.c_source.clone(),
            required_symbols: Vec::new(),
        },
        reference_source: input.c_source.clone(),
        refined_spec: spec,
        timing: None,
        status: TaskStatus::Planned,
        attempts: Vec::new(),
        dependencies: Vec::new(),
    };
    ws.save_task(&task)?;
    let plan = DesignPlan {
        design: input.design_name.clone(),
        top: top.clone(),
        origin: TaskOrigin::Monolithic,
        schedule: vec![top.clone()],
        graph: PlanGraph { nodes: [top.clone()].into(), edges: BTreeSet::new() },
        owners: BTreeMap::new(),
    };
    ws.save_plan(&plan, &input.c_source, &input.spec_text)?;
    planned_tasks(ws, &plan)
}
