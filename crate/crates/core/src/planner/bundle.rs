// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::graph::{schedule, DependencyGraph};
use super::{lex, FunctionTable, PlanError, Span};
use crate::model::{CBundle, RequiredSymbol, SymbolKind};

/// Prototype for a function definition header, storage and inline
/// specifiers removed so it links against any stub or RTL-side model.
pub(crate) fn prototype(header: &str) -> String {
    let mut out = String::with_capacity(header.len() + 1);
    let toks = lex::tokenize(header);
    let mut cursor = 0;
    for t in &toks {
        let word = t.text(header);
        if t.kind == lex::TokKind::Ident && matches!(word, "static" | "inline" | "__inline" | "__inline__") {
            out.push_str(&header[cursor..t.span.start]);
            cursor = t.span.end;
            // Swallow the whitespace that followed the specifier.
            let rest = &header[cursor..];
            cursor += rest.len() - rest.trim_start().len();
        }
    }
    out.push_str(&header[cursor..]);
    let mut out = out.split_whitespace().collect::<Vec<_>>().join(" ");
    out.push(';');
    out
}

/// Globals needed by `roots`, closed over the references between globals.
fn symbol_closure(
    table: &FunctionTable,
    roots: impl IntoIterator<Item = String>,
    needed_by: &str,
) -> Result<BTreeSet<String>, PlanError> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<String> = roots.into_iter().collect();
    while let Some(name) = stack.pop() {
        if seen.contains(&name) {
            continue;
        }
        let Some(global) = table.globals.get(&name) else {
            if table.functions.contains_key(&name) {
                continue;
            }
            return Err(PlanError::MissingDefinition { symbol: name, needed_by: needed_by.to_string() });
        };
        seen.insert(name);
        for r in &global.references {
            if table.globals.contains_key(r) {
                stack.push(r.clone());
            }
        }
    }
    Ok(seen)
}

/// Self-contained C text for `function`.
///
/// With `leaf_only`, callees appear as prototypes only (they are realised by
/// already-verified RTL modules). Without it, every transitive callee body is
/// included, callees first, so the result can be compiled and executed.
pub fn bundle_submodule(
    function: &str,
    graph: &DependencyGraph,
    table: &FunctionTable,
    source: &str,
    leaf_only: bool,
) -> Result<CBundle, PlanError> {
    if !graph.nodes.contains(function) {
        return Err(PlanError::UnknownFunction(function.to_string()));
    }
    let focus = table.functions.get(function).ok_or_else(|| PlanError::MissingDefinition {
        symbol: function.to_string(),
        needed_by: function.to_string(),
    })?;

    let bodies: Vec<String> = if leaf_only {
        vec![function.to_string()]
    } else {
        let closure = graph.reachable_from(function);
        schedule(&graph.subgraph(&closure))?.ordered_tasks
    };
    let callees: BTreeSet<String> = if leaf_only {
        graph.callees(function).into_iter().map(str::to_string).collect()
    } else {
        graph.transitive_callees(function)
    };

    let mut roots: BTreeSet<String> = BTreeSet::new();
    for name in &bodies {
        roots.extend(graph.symbols_of(name).into_iter().map(str::to_string));
    }
    let mut prototypes = Vec::new();
    if leaf_only {
        for callee in &callees {
            let entry = table.functions.get(callee).ok_or_else(|| PlanError::MissingDefinition {
                symbol: callee.clone(),
                needed_by: function.to_string(),
            })?;
            roots.extend(
                lex::referenced_identifiers(&entry.header).into_iter().filter(|id| table.globals.contains_key(id)),
            );
            prototypes.push(prototype(&entry.header));
        }
    }
    let symbols = symbol_closure(table, roots, function)?;

    let mut chunks: Vec<Span> = symbols.iter().map(|s| table.globals[s].span).collect();
    chunks.sort();
    chunks.dedup();

    let mut text = String::new();
    text.push_str(&format!("/* bundle: {function} */\n"));
    for inc in &table.includes {
        text.push_str(inc);
        text.push('\n');
    }
    if !table.includes.is_empty() {
        text.push('\n');
    }
    for chunk in &chunks {
        text.push_str(chunk.text(source).trim_end());
        text.push('\n');
    }
    if !chunks.is_empty() {
        text.push('\n');
    }
    for p in &prototypes {
        text.push_str(p);
        text.push('\n');
    }
    if !prototypes.is_empty() {
        text.push('\n');
    }
    for (i, name) in bodies.iter().enumerate() {
        let entry = if name == function {
            focus
        } else {
            table
                .functions
                .get(name)
                .ok_or_else(|| PlanError::MissingDefinition { symbol: name.clone(), needed_by: function.to_string() })?
        };
        if i > 0 {
            text.push('\n');
        }
        text.push_str(entry.span.text(source).trim_end());
        text.push('\n');
    }

    let mut required: Vec<RequiredSymbol> = symbols
        .iter()
        .map(|s| RequiredSymbol { name: s.clone(), kind: table.globals[s].kind })
        .chain(callees.iter().map(|c| RequiredSymbol { name: c.clone(), kind: SymbolKind::Function }))
        .collect();
    required.sort();
    Ok(CBundle { focus_function: function.to_string(), source_text: text, required_symbols: required })
}
