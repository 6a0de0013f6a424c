// SPDX-License-Identifier: Apache-2.0

//! Reference-model guided RTL generation.
//!
//! A C reference model is split into per-function tasks by static analysis of
//! its call graph. Each task is generated by a language model, checked against
//! its C function with an external C-vs-RTL equivalence checker, and repaired
//! from the checker's feedback until it passes or the iteration budget runs out.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`model`] and [`workspace`]: shared task types and the on-disk run store.
//! - [`planner`]: AST ingestion, dependency graph, schedule, C bundles.
//! - [`gateway`]: model backends (remote, replay, scripted) and transcripts.
//! - [`synth`]: timing classification, initial RTL + harness generation.
//! - [`ec`]: equivalence-checker adapter and output classification.
//! - [`debugger`]: bug localisation, counterexample simplification, patching,
//!   and the bounded repair loop.
//! - [`metrics`]: run ledgers, success-rate and iteration metrics, reports.
//! - [`pipeline`] and [`config`]: end-to-end orchestration.

pub mod clock;
pub mod config;
pub mod debugger;
pub mod ec;
pub mod gateway;
mod limit;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod prompts;
pub mod synth;
pub mod template;
pub mod workspace;

pub use config::PipelineConfig;
pub use model::{
    AttemptRecord, CBundle, DesignInput, RequiredSymbol, SubmoduleTask, SymbolKind, TaskOrigin, TaskStatus, Tier,
    TimingRequirement,
};
pub use workspace::Workspace;
