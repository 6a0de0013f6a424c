// SPDX-License-Identifier: Apache-2.0

//! Function table from a clang `-ast-dump=json` document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::lex::{self, MacroDef};
use super::{line_col, PlanError};
use crate::model::SymbolKind;

/// Byte range `[start, end)` into the C source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub name: String,
    /// Text from the start of the definition up to (not including) the body.
    pub header: String,
    pub params: Vec<(String, String)>,
    pub return_type: String,
    pub span: Span,
    pub body: Span,
    /// Functions defined in this file that the body calls.
    pub callees: BTreeSet<String>,
    /// Calls into declarations that come from system headers.
    pub external_calls: BTreeSet<String>,
    /// Calls to functions that are declared here but never defined.
    pub unresolved: BTreeSet<String>,
    /// Macros, types, enumerators and constants named in the definition.
    pub symbols: BTreeSet<String>,
}

impl FunctionEntry {
    /// Every identifier the definition refers to, resolved or not.
    pub fn referenced(&self) -> BTreeSet<String> {
        self.callees.iter().chain(&self.external_calls).chain(&self.unresolved).chain(&self.symbols).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalEntry {
    pub name: String,
    pub kind: SymbolKind,
    /// The whole definition. Names introduced by one declaration (an enum
    /// and its enumerators, a typedef of an anonymous struct) share a span.
    pub span: Span,
    /// Identifiers used inside the definition that resolve to other globals
    /// or functions of this file.
    pub references: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionTable {
    pub functions: BTreeMap<String, FunctionEntry>,
    pub globals: BTreeMap<String, GlobalEntry>,
    /// `#include <...>` lines, carried into every bundle.
    pub includes: Vec<String>,
    /// Names declared by system headers; treated as builtins.
    pub external_names: BTreeSet<String>,
}

const DYNAMIC_ALLOCATION: &[&str] = &["malloc", "calloc", "realloc", "free", "alloca"];

struct Loc {
    offset: usize,
    tok_len: usize,
    included: bool,
}

fn loc_of(v: &Value) -> Option<Loc> {
    let v = v.get("expansionLoc").unwrap_or(v);
    Some(Loc {
        offset: v.get("offset")?.as_u64()? as usize,
        tok_len: v.get("tokLen").and_then(Value::as_u64).unwrap_or(0) as usize,
        included: v.get("includedFrom").is_some(),
    })
}

fn node_kind(node: &Value) -> &str {
    node.get("kind").and_then(Value::as_str).unwrap_or("")
}

fn node_name(node: &Value) -> Option<&str> {
    node.get("name").and_then(Value::as_str).filter(|s| !s.is_empty())
}

fn inner(node: &Value) -> &[Value] {
    node.get("inner").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[])
}

fn qual_type(node: &Value) -> &str {
    node.pointer("/type/qualType").and_then(Value::as_str).unwrap_or("")
}

/// `None` for implicit or header declarations; otherwise the source span,
/// checked against `source`.
fn main_file_span(node: &Value, source: &str) -> Result<Option<Span>, PlanError> {
    if node.get("isImplicit").and_then(Value::as_bool) == Some(true) {
        return Ok(None);
    }
    let Some(range) = node.get("range") else {
        return Ok(None);
    };
    let (Some(begin), Some(end)) = (range.get("begin").and_then(loc_of), range.get("end").and_then(loc_of)) else {
        return Ok(None);
    };
    if begin.included || end.included {
        return Ok(None);
    }
    let stop = end.offset + end.tok_len;
    if begin.offset > stop || stop > source.len() {
        return Err(PlanError::DumpMismatch(format!(
            "{} `{}` spans bytes {}..{} but the source has {} bytes",
            node_kind(node),
            node_name(node).unwrap_or("<anonymous>"),
            begin.offset,
            stop,
            source.len()
        )));
    }
    if !source.is_char_boundary(begin.offset) || !source.is_char_boundary(stop) {
        return Err(PlanError::DumpMismatch(format!(
            "span {}..{} does not fall on character boundaries",
            begin.offset, stop
        )));
    }
    Ok(Some(Span { start: begin.offset, end: stop }))
}

fn unsupported(source: &str, offset: usize, construct: impl Into<String>) -> PlanError {
    let (line, column) = line_col(source, offset);
    PlanError::Unsupported { construct: construct.into(), line, column }
}

fn is_function_pointer(ty: &str) -> bool {
    ty.contains("(*)") || ty.contains("(^)")
}

/// Extends a declaration span over its terminating `;`, if one follows.
fn extend_to_semicolon(source: &str, span: Span) -> Span {
    let rest = &source[span.end..];
    let trimmed = rest.trim_start();
    if trimmed.starts_with(';') {
        let end = span.end + (rest.len() - trimmed.len()) + 1;
        Span { start: span.start, end }
    } else {
        span
    }
}

/// Return type spelled in a function type such as `u16 (u16, u16)`.
fn return_type_of(fn_type: &str) -> String {
    let t = fn_type.trim_end();
    if !t.ends_with(')') {
        return t.to_string();
    }
    let mut depth = 0;
    for (i, c) in t.char_indices().rev() {
        match c {
            ')' => depth += 1,
            '(' => {
                depth -= 1;
                if depth == 0 {
                    return t[..i].trim().to_string();
                }
            }
            _ => {}
        }
    }
    t.to_string()
}

struct Pending {
    kind: SymbolKind,
    names: Vec<String>,
    span: Span,
}

struct BodyFacts {
    calls: BTreeSet<String>,
    locals: BTreeSet<String>,
}

fn walk_body(node: &Value, in_callee: bool, source: &str, facts: &mut BodyFacts) -> Result<(), PlanError> {
    let kind = node_kind(node);
    let offset = node.pointer("/range/begin").and_then(loc_of).map(|l| l.offset).unwrap_or(0);
    match kind {
        "VarDecl" => {
            if is_function_pointer(qual_type(node)) {
                return Err(unsupported(source, offset, "function pointer variable"));
            }
            if let Some(name) = node_name(node) {
                facts.locals.insert(name.to_string());
            }
        }
        "DeclRefExpr" => {
            if let Some(decl) = node.get("referencedDecl") {
                if node_kind(decl) == "FunctionDecl" {
                    let name = node_name(decl).unwrap_or_default().to_string();
                    if !in_callee {
                        return Err(unsupported(
                            source,
                            offset,
                            format!("function pointer (address of `{name}` taken)"),
                        ));
                    }
                    if DYNAMIC_ALLOCATION.contains(&name.as_str()) {
                        return Err(unsupported(source, offset, format!("dynamic allocation (`{name}`)")));
                    }
                    facts.calls.insert(name);
                }
            }
        }
        "BlockExpr" => return Err(unsupported(source, offset, "block literal")),
        "IndirectGotoStmt" | "AddrLabelExpr" => return Err(unsupported(source, offset, "computed goto")),
        _ => {}
    }
    let children = inner(node);
    for (i, child) in children.iter().enumerate() {
        let child_in_callee = match kind {
            "CallExpr" => i == 0,
            "ImplicitCastExpr" | "ParenExpr" => in_callee,
            _ => false,
        };
        walk_body(child, child_in_callee, source, facts)?;
    }
    Ok(())
}

/// Builds the function table for `source` from its compiler AST dump.
///
/// Semantic facts (definitions, call edges, parameter lists) come from the
/// dump. Macros come from a lexical scan of `source`, since preprocessing
/// erases them from the AST.
pub fn ingest_ast(ast_dump: &str, source: &str) -> Result<FunctionTable, PlanError> {
    let root: Value = serde_json::from_str(ast_dump).map_err(|e| PlanError::MalformedDump(format!("not JSON: {e}")))?;
    if node_kind(&root) != "TranslationUnitDecl" {
        return Err(PlanError::MalformedDump("top-level node is not a TranslationUnitDecl".into()));
    }
    let decls = root
        .get("inner")
        .and_then(Value::as_array)
        .ok_or_else(|| PlanError::MalformedDump("translation unit has no `inner` list".into()))?;

    let mut table = FunctionTable { includes: lex::system_includes(source), ..FunctionTable::default() };
    let mut pending: Vec<Pending> = Vec::new();
    let mut bodies: Vec<(&Value, Span)> = Vec::new();
    let mut declared_here: BTreeSet<String> = BTreeSet::new();

    for decl in decls {
        if !decl.is_object() {
            return Err(PlanError::MalformedDump("declaration is not an object".into()));
        }
        let kind = node_kind(decl);
        let Some(span) = main_file_span(decl, source)? else {
            if let Some(name) = node_name(decl) {
                table.external_names.insert(name.to_string());
            }
            if kind == "EnumDecl" {
                for c in inner(decl) {
                    if let Some(name) = node_name(c) {
                        table.external_names.insert(name.to_string());
                    }
                }
            }
            continue;
        };
        match kind {
            "FunctionDecl" => {
                let name =
                    node_name(decl).ok_or_else(|| PlanError::MalformedDump("FunctionDecl without a name".into()))?;
                if let Some(l) = decl.get("loc").and_then(loc_of) {
                    let end = l.offset + l.tok_len;
                    if end > source.len() || source.get(l.offset..end) != Some(name) {
                        if decl.pointer("/loc/expansionLoc").is_some() {
                            return Err(unsupported(
                                source,
                                span.start,
                                format!("function `{name}` defined by macro expansion"),
                            ));
                        }
                        return Err(PlanError::DumpMismatch(format!(
                            "function `{name}` is not spelled at offset {}",
                            l.offset
                        )));
                    }
                }
                let ty = qual_type(decl);
                if ty.contains("...") {
                    return Err(unsupported(source, span.start, format!("variadic function `{name}`")));
                }
                let has_body = inner(decl).iter().any(|c| node_kind(c) == "CompoundStmt");
                if has_body {
                    if table.functions.contains_key(name) {
                        return Err(PlanError::DuplicateDefinition(name.to_string()));
                    }
                    bodies.push((decl, span));
                    // Placeholder; filled once all globals are known.
                    table.functions.insert(
                        name.to_string(),
                        FunctionEntry {
                            name: name.to_string(),
                            header: String::new(),
                            params: Vec::new(),
                            return_type: return_type_of(ty),
                            span,
                            body: span,
                            callees: BTreeSet::new(),
                            external_calls: BTreeSet::new(),
                            unresolved: BTreeSet::new(),
                            symbols: BTreeSet::new(),
                        },
                    );
                } else {
                    declared_here.insert(name.to_string());
                }
            }
            "TypedefDecl" => {
                let name = node_name(decl).unwrap_or_default().to_string();
                if is_function_pointer(qual_type(decl)) {
                    return Err(unsupported(source, span.start, format!("function pointer typedef `{name}`")));
                }
                pending.push(Pending { kind: SymbolKind::Typedef, names: vec![name], span });
            }
            "EnumDecl" => {
                let mut names: Vec<String> = node_name(decl).map(str::to_string).into_iter().collect();
                names.extend(
                    inner(decl)
                        .iter()
                        .filter(|c| node_kind(c) == "EnumConstantDecl")
                        .filter_map(node_name)
                        .map(str::to_string),
                );
                pending.push(Pending { kind: SymbolKind::Enum, names, span });
            }
            "RecordDecl" => {
                let complete = decl.get("completeDefinition").and_then(Value::as_bool) == Some(true);
                if !complete {
                    continue;
                }
                for field in inner(decl) {
                    if node_kind(field) == "FieldDecl" && is_function_pointer(qual_type(field)) {
                        return Err(unsupported(source, span.start, "function pointer field"));
                    }
                }
                let names = node_name(decl).map(str::to_string).into_iter().collect();
                pending.push(Pending { kind: SymbolKind::Record, names, span });
            }
            "VarDecl" => {
                let name = node_name(decl).unwrap_or_default().to_string();
                let ty = qual_type(decl);
                if is_function_pointer(ty) {
                    return Err(unsupported(source, span.start, format!("function pointer variable `{name}`")));
                }
                let is_const = ty.starts_with("const ") || ty.contains(" const");
                if !is_const {
                    return Err(unsupported(source, span.start, format!("mutable global variable `{name}`")));
                }
                pending.push(Pending { kind: SymbolKind::Constant, names: vec![name], span });
            }
            "EmptyDecl" | "StaticAssertDecl" | "PragmaCommentDecl" => {}
            other => {
                return Err(unsupported(source, span.start, other.to_string()));
            }
        }
    }

    // Overlapping declarations (typedef struct {...} T;) collapse into one chunk.
    let mut chunks: Vec<Pending> = Vec::new();
    pending.sort_by_key(|p| (p.span.start, p.span.end));
    for mut p in pending {
        p.span = extend_to_semicolon(source, p.span);
        if let Some(last) = chunks.last_mut() {
            if p.span.start < last.span.end {
                last.span.end = last.span.end.max(p.span.end);
                last.names.extend(p.names);
                // The outer declaration decides the kind (typedef over record).
                if p.kind == SymbolKind::Typedef || last.kind == SymbolKind::Record && p.kind == SymbolKind::Enum {
                    last.kind = p.kind;
                }
                continue;
            }
        }
        chunks.push(p);
    }
    for chunk in chunks {
        for name in &chunk.names {
            table.globals.insert(
                name.clone(),
                GlobalEntry { name: name.clone(), kind: chunk.kind, span: chunk.span, references: BTreeSet::new() },
            );
        }
    }
    let macros: Vec<MacroDef> = lex::scan_macros(source);
    for m in &macros {
        table.globals.entry(m.name.clone()).or_insert_with(|| GlobalEntry {
            name: m.name.clone(),
            kind: SymbolKind::Macro,
            span: Span { start: m.span.start, end: m.span.end },
            references: BTreeSet::new(),
        });
    }

    let function_names: BTreeSet<String> = table.functions.keys().cloned().collect();
    let global_names: BTreeSet<String> = table.globals.keys().cloned().collect();
    let macro_refs: BTreeMap<&str, BTreeSet<String>> =
        macros.iter().map(|m| (m.name.as_str(), m.references())).collect();
    for entry in table.globals.values_mut() {
        let refs = match (entry.kind, macro_refs.get(entry.name.as_str())) {
            (SymbolKind::Macro, Some(r)) => r.clone(),
            _ => lex::referenced_identifiers(entry.span.text(source)),
        };
        entry.references = refs
            .into_iter()
            .filter(|r| *r != entry.name)
            .filter(|r| global_names.contains(r) || function_names.contains(r))
            .collect();
    }

    for (decl, span) in bodies {
        let name = node_name(decl).unwrap_or_default().to_string();
        let mut params = Vec::new();
        let mut body_span = None;
        for child in inner(decl) {
            match node_kind(child) {
                "ParmVarDecl" => {
                    let ty = qual_type(child);
                    if is_function_pointer(ty) {
                        return Err(unsupported(source, span.start, format!("function pointer parameter in `{name}`")));
                    }
                    params.push((node_name(child).unwrap_or_default().to_string(), ty.to_string()));
                }
                "CompoundStmt" => body_span = main_file_span(child, source)?,
                _ => {}
            }
        }
        let body =
            body_span.ok_or_else(|| PlanError::MalformedDump(format!("body of `{name}` has no source range")))?;
        let mut facts = BodyFacts { calls: BTreeSet::new(), locals: BTreeSet::new() };
        for child in inner(decl) {
            if node_kind(child) == "CompoundStmt" {
                walk_body(child, false, source, &mut facts)?;
            }
        }
        let mut callees = BTreeSet::new();
        let mut external_calls = BTreeSet::new();
        let mut unresolved = BTreeSet::new();
        for call in facts.calls {
            if function_names.contains(&call) {
                callees.insert(call);
            } else if table.external_names.contains(&call) && !declared_here.contains(&call) {
                external_calls.insert(call);
            } else {
                unresolved.insert(call);
            }
        }
        let param_names: BTreeSet<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
        let symbols = lex::referenced_identifiers(span.text(source))
            .into_iter()
            .filter(|id| *id != name)
            .filter(|id| !param_names.contains(id.as_str()) && !facts.locals.contains(id))
            .filter(|id| global_names.contains(id))
            .collect();
        let entry = table.functions.get_mut(&name).expect("registered above");
        entry.header = source[span.start..body.start].trim_end().to_string();
        entry.params = params;
        entry.body = body;
        entry.callees = callees;
        entry.external_calls = external_calls;
        entry.unresolved = unresolved;
        entry.symbols = symbols;
    }
    Ok(table)
}
