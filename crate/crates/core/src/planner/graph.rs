// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FunctionTable, PlanError};
use crate::model::SymbolKind;

/// Functions as nodes; `(caller, callee)` call edges and
/// `(function, global)` symbol edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub call_edges: BTreeSet<(String, String)>,
    pub symbol_edges: BTreeSet<(String, String)>,
    pub globals: BTreeMap<String, SymbolKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub ordered_tasks: Vec<String>,
}

impl Schedule {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.ordered_tasks.iter().position(|t| t == name)
    }
}

impl DependencyGraph {
    /// Graph over bare call edges; endpoints are added as nodes.
    pub fn from_edges<I, S>(nodes: I, edges: &[(S, S)]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut graph = DependencyGraph::default();
        for n in nodes {
            graph.nodes.insert(n.as_ref().to_string());
        }
        for (a, b) in edges {
            let (a, b) = (a.as_ref().to_string(), b.as_ref().to_string());
            graph.nodes.insert(a.clone());
            graph.nodes.insert(b.clone());
            graph.call_edges.insert((a, b));
        }
        graph
    }

    pub fn callees(&self, name: &str) -> BTreeSet<&str> {
        self.call_edges.iter().filter(|(a, _)| a == name).map(|(_, b)| b.as_str()).collect()
    }

    pub fn callers(&self, name: &str) -> BTreeSet<&str> {
        self.call_edges.iter().filter(|(_, b)| b == name).map(|(a, _)| a.as_str()).collect()
    }

    pub fn symbols_of(&self, name: &str) -> BTreeSet<&str> {
        self.symbol_edges.iter().filter(|(a, _)| a == name).map(|(_, b)| b.as_str()).collect()
    }

    /// Every function reachable from `name` through call edges, `name` excluded.
    pub fn transitive_callees(&self, name: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = self.callees(name).into_iter().collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n.to_string()) {
                stack.extend(self.callees(n));
            }
        }
        seen.remove(name);
        seen
    }

    /// `name` and everything it transitively calls.
    pub fn reachable_from(&self, name: &str) -> BTreeSet<String> {
        let mut set = self.transitive_callees(name);
        set.insert(name.to_string());
        set
    }

    /// Restriction to `keep`; edges leaving the set are dropped.
    pub fn subgraph(&self, keep: &BTreeSet<String>) -> DependencyGraph {
        let nodes: BTreeSet<String> = self.nodes.intersection(keep).cloned().collect();
        let call_edges =
            self.call_edges.iter().filter(|(a, b)| nodes.contains(a) && nodes.contains(b)).cloned().collect();
        let symbol_edges: BTreeSet<(String, String)> =
            self.symbol_edges.iter().filter(|(a, _)| nodes.contains(a)).cloned().collect();
        DependencyGraph { nodes, call_edges, symbol_edges, globals: self.globals.clone() }
    }

    /// One call cycle, rotated so its smallest member comes first.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark: BTreeMap<&str, Mark> = self.nodes.iter().map(|n| (n.as_str(), Mark::New)).collect();
        for root in &self.nodes {
            if mark[root.as_str()] != Mark::New {
                continue;
            }
            // Iterative DFS; `path` mirrors the active stack.
            let mut path: Vec<&str> = vec![root];
            let mut iters: Vec<std::vec::IntoIter<&str>> =
                vec![self.callees(root).into_iter().collect::<Vec<_>>().into_iter()];
            mark.insert(root, Mark::Active);
            while let Some(it) = iters.last_mut() {
                match it.next() {
                    Some(next) => match mark.get(next).copied().unwrap_or(Mark::Done) {
                        Mark::Active => {
                            let start = path.iter().position(|p| *p == next).unwrap_or(0);
                            let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                            let min = cycle.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
                            cycle.rotate_left(min);
                            return Some(cycle);
                        }
                        Mark::New => {
                            mark.insert(next, Mark::Active);
                            path.push(next);
                            iters.push(self.callees(next).into_iter().collect::<Vec<_>>().into_iter());
                        }
                        Mark::Done => {}
                    },
                    None => {
                        let done = path.pop().expect("path tracks iters");
                        mark.insert(done, Mark::Done);
                        iters.pop();
                    }
                }
            }
        }
        None
    }
}

/// Call and symbol edges of `table`. Recursion is rejected.
pub fn build_dependency_graph(table: &FunctionTable) -> Result<DependencyGraph, PlanError> {
    let mut graph = DependencyGraph {
        globals: table.globals.iter().map(|(n, g)| (n.clone(), g.kind)).collect(),
        ..DependencyGraph::default()
    };
    for (name, f) in &table.functions {
        if !f.unresolved.is_empty() {
            return Err(PlanError::Unresolved {
                function: name.clone(),
                names: f.unresolved.iter().cloned().collect(),
            });
        }
        graph.nodes.insert(name.clone());
        for callee in &f.callees {
            graph.call_edges.insert((name.clone(), callee.clone()));
        }
        for sym in &f.symbols {
            graph.symbol_edges.insert((name.clone(), sym.clone()));
        }
    }
    if let Some(members) = graph.find_cycle() {
        return Err(PlanError::Cycle { members });
    }
    Ok(graph)
}

/// Callees before callers; among ready nodes the smallest name goes first.
pub fn schedule(graph: &DependencyGraph) -> Result<Schedule, PlanError> {
    let mut pending: BTreeMap<&str, usize> = graph.nodes.iter().map(|n| (n.as_str(), 0)).collect();
    for (caller, callee) in &graph.call_edges {
        if caller != callee && graph.nodes.contains(callee) {
            *pending.entry(caller.as_str()).or_default() += 1;
        }
    }
    let mut ready: BTreeSet<&str> = pending.iter().filter(|(_, c)| **c == 0).map(|(n, _)| *n).collect();
    let mut ordered = Vec::with_capacity(graph.nodes.len());
    while let Some(next) = ready.pop_first() {
        ordered.push(next.to_string());
        for caller in graph.callers(next) {
            if caller == next {
                continue;
            }
            let count = pending.get_mut(caller).expect("callers are nodes");
            *count -= 1;
            if *count == 0 {
                ready.insert(caller);
            }
        }
    }
    if ordered.len() != graph.nodes.len() {
        let members = graph.find_cycle().unwrap_or_default();
        return Err(PlanError::Cycle { members });
    }
    Ok(Schedule { ordered_tasks: ordered })
}
