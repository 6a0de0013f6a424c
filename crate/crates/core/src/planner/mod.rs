// SPDX-License-Identifier: Apache-2.0

//! Planning: split a C reference model into per-function tasks.
//!
//! The compiler's JSON AST dump gives the function table and call edges
//! ([`ingest_ast`], [`build_dependency_graph`]); a lexical pass recovers the
//! macros the preprocessor erased. Tasks are generated bottom-up in
//! [`schedule`] order, each with a self-contained [`CBundle`](crate::CBundle).

mod ast;
mod bundle;
pub mod compiler;
mod graph;
pub mod lex;
mod merge;
mod plan;
mod refine;
mod signature;

use std::path::PathBuf;

pub use ast::{ingest_ast, FunctionEntry, FunctionTable, GlobalEntry, Span};
pub use bundle::bundle_submodule;
pub use graph::{build_dependency_graph, schedule, DependencyGraph, Schedule};
pub use merge::merge_scattered_sources;
pub use plan::{plan_design, plan_monolithic, DesignPlan, PlanGraph, PlannedTask};
pub use refine::{interface_header, refine_spec};
pub use signature::{parse_signature, CSignature, Port, PortDirection};

use crate::gateway::GatewayError;
use crate::workspace::WorkspaceError;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("malformed AST dump: {0}")]
    MalformedDump(String),
    #[error("AST dump does not match the source: {0}")]
    DumpMismatch(String),
    #[error("unsupported C construct `{construct}` at line {line}, column {column}")]
    Unsupported { construct: String, line: usize, column: usize },
    #[error("function `{function}` calls functions with no definition: {names:?}")]
    Unresolved { function: String, names: Vec<String> },
    #[error("recursive call cycle: {members:?}")]
    Cycle { members: Vec<String> },
    #[error("function `{0}` is not part of the dependency graph")]
    UnknownFunction(String),
    #[error("no definition for `{symbol}` required by `{needed_by}`")]
    MissingDefinition { symbol: String, needed_by: String },
    #[error("conflicting definitions of `{0}`")]
    DuplicateDefinition(String),
    #[error("callee `{callee}` of `{caller}` is defined in none of the sources")]
    UnresolvedCallee { caller: String, callee: String },
    #[error("top function `{0}` is not defined")]
    MissingTop(String),
    #[error("compiler command {command:?} failed: {detail}")]
    Compiler { command: Vec<String>, detail: String },
    #[error("workspace already holds a different design named `{0}`")]
    Stale(String),
    #[error("bad compiler command template: {0}")]
    Template(String),
    #[error("{0}")]
    Input(#[from] crate::model::InputError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error("while planning `{function}`: {source}")]
    InFunction {
        function: String,
        #[source]
        source: Box<PlanError>,
    },
}

impl PlanError {
    pub(crate) fn in_function(self, function: &str) -> Self {
        match self {
            PlanError::InFunction { .. } => self,
            other => PlanError::InFunction { function: function.to_string(), source: Box::new(other) },
        }
    }
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|p| offset - p).unwrap_or(offset + 1);
    (line, column)
}
