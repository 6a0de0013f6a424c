// SPDX-License-Identifier: Apache-2.0

//! Lexical merge of C definitions scattered over several files into one
//! translation unit for a single top function.

use std::collections::{BTreeMap, BTreeSet};

use super::graph::{schedule, DependencyGraph};
use super::lex::{self, TokKind, TopItemKind};
use super::PlanError;

#[derive(Debug, Clone)]
struct Definition {
    text: String,
    /// (file index, byte offset): original position, used for ordering.
    origin: (usize, usize),
    is_function: bool,
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Identifiers immediately followed by `(` outside directives.
fn call_like(text: &str) -> BTreeSet<String> {
    let toks = lex::tokenize(text);
    toks.windows(2)
        .filter(|w| w[0].kind == TokKind::Ident && w[1].text(text) == "(" && !lex::is_keyword(w[0].text(text)))
        .map(|w| w[0].text(text).to_string())
        .collect()
}

/// One translation unit holding `top_function`, its transitive callees and
/// the globals they need, deduplicated by textual identity (whitespace
/// insensitive). Globals come first in dependency order, then function
/// bodies callees first.
///
/// A call to a name with no definition is an error when some file declares
/// it or when no file includes a system header that could provide it.
pub fn merge_scattered_sources<S: AsRef<str>>(files: &[S], top_function: &str) -> Result<String, PlanError> {
    let mut defs: BTreeMap<String, Definition> = BTreeMap::new();
    let mut includes: Vec<String> = Vec::new();
    let mut prototyped: BTreeSet<String> = BTreeSet::new();
    for (fi, file) in files.iter().enumerate() {
        let src = file.as_ref();
        for item in lex::top_level_items(src) {
            let text = src[item.span.clone()].to_string();
            match &item.kind {
                TopItemKind::Include { system: true } => {
                    let line = text.trim().to_string();
                    if !includes.contains(&line) {
                        includes.push(line);
                    }
                    continue;
                }
                TopItemKind::Prototype { name } => {
                    prototyped.insert(name.clone());
                    continue;
                }
                _ => {}
            }
            let is_function = matches!(item.kind, TopItemKind::Function { .. });
            for name in item.defined_names() {
                match defs.get(name) {
                    Some(prev) if normalized(&prev.text) != normalized(&text) => {
                        // Enumerators and struct tags share one item; only a
                        // different item with the same name conflicts.
                        return Err(PlanError::DuplicateDefinition(name.to_string()));
                    }
                    Some(_) => {}
                    None => {
                        defs.insert(
                            name.to_string(),
                            Definition { text: text.clone(), origin: (fi, item.span.start), is_function },
                        );
                    }
                }
            }
        }
    }
    match defs.get(top_function) {
        Some(d) if d.is_function => {}
        _ => return Err(PlanError::MissingTop(top_function.to_string())),
    }

    let may_be_external = !includes.is_empty();
    let mut functions: BTreeSet<String> = BTreeSet::new();
    let mut globals: BTreeSet<String> = BTreeSet::new();
    let mut call_edges: Vec<(String, String)> = Vec::new();
    let mut global_refs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut stack = vec![top_function.to_string()];
    while let Some(name) = stack.pop() {
        let def = &defs[&name];
        let first_time = if def.is_function { functions.insert(name.clone()) } else { globals.insert(name.clone()) };
        if !first_time {
            continue;
        }
        let refs = lex::referenced_identifiers(&def.text);
        if def.is_function {
            let body = def.text.find('{').map_or("", |b| &def.text[b..]);
            for callee in call_like(body) {
                if callee == name {
                    return Err(PlanError::Cycle { members: vec![name.clone()] });
                }
                match defs.get(&callee) {
                    Some(_) => {}
                    None if prototyped.contains(&callee) || !may_be_external => {
                        return Err(PlanError::UnresolvedCallee { caller: name.clone(), callee });
                    }
                    None => {}
                }
            }
        }
        let mut deps = BTreeSet::new();
        for r in refs {
            if r == name {
                continue;
            }
            if let Some(d) = defs.get(&r) {
                if def.is_function && d.is_function {
                    call_edges.push((name.clone(), r.clone()));
                } else if !d.is_function {
                    deps.insert(r.clone());
                }
                stack.push(r);
            }
        }
        if !def.is_function {
            global_refs.insert(name, deps);
        } else {
            global_refs.entry(format!("\0{name}")).or_default().extend(deps);
        }
    }

    let graph = DependencyGraph::from_edges(functions.iter().cloned(), &call_edges);
    let order = schedule(&graph)?;

    // Globals: stable topological order by original position. Items that
    // define several names are emitted once.
    let mut emitted_text: BTreeSet<String> = BTreeSet::new();
    let mut pending: BTreeSet<((usize, usize), String)> = BTreeSet::new();
    let mut indeg: BTreeMap<&str, usize> = BTreeMap::new();
    for g in &globals {
        let n = global_refs.get(g).map_or(0, |d| d.iter().filter(|x| *x != g && globals.contains(*x)).count());
        indeg.insert(g, n);
    }
    for (g, n) in &indeg {
        if *n == 0 {
            pending.insert((defs[*g].origin, g.to_string()));
        }
    }
    let mut global_order = Vec::new();
    while let Some(first) = pending.iter().next().cloned() {
        pending.remove(&first);
        let g = first.1;
        for (other, deps) in &global_refs {
            if deps.contains(&g) && other != &g {
                if let Some(n) = indeg.get_mut(other.as_str()) {
                    *n -= 1;
                    if *n == 0 {
                        pending.insert((defs[other].origin, other.clone()));
                    }
                }
            }
        }
        global_order.push(g);
    }
    if global_order.len() != globals.len() {
        // Mutually referring globals (e.g. linked structs): fall back to
        // source order for the remainder.
        let mut rest: Vec<&String> = globals.iter().filter(|g| !global_order.contains(g)).collect();
        rest.sort_by_key(|g| defs[*g].origin);
        global_order.extend(rest.into_iter().cloned());
    }

    let mut out = String::new();
    for inc in &includes {
        out.push_str(inc);
        out.push('\n');
    }
    if !includes.is_empty() {
        out.push('\n');
    }
    for g in &global_order {
        let text = defs[g].text.trim_end().to_string();
        if emitted_text.insert(normalized(&text)) {
            out.push_str(&text);
            out.push('\n');
        }
    }
    if !global_order.is_empty() {
        out.push('\n');
    }
    for (i, f) in order.ordered_tasks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(defs[f].text.trim_end());
        out.push('\n');
    }
    Ok(out)
}
