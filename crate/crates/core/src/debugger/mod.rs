// SPDX-License-Identifier: Apache-2.0

//! Repair of generated modules from checker feedback.
//!
//! Syntax diagnostics become a numbered code window, counterexamples are
//! reduced to the mismatches of the module under repair, and the model
//! answers with one anchored text replacement per iteration.

mod locate;
mod patch;
mod prompt;
mod repair_loop;
mod simplify;

pub use locate::{locate_bug, CodeWindow, EmptyFile};
pub use patch::{apply_patch, parse_patch, PatchError, PatchOutcome, PatchProposal, PatchTarget};
pub use prompt::{build_repair_prompt, Feedback};
pub use repair_loop::{debug_loop, DebugContext, DebugError, DebugOutcome, DebugSettings, DebugStatus};
pub use simplify::{simplify_counterexample, SimplifiedTrace};
