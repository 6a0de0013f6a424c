// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every pipeline stage.

use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::debugger::PatchOutcome;
use crate::ec::EcOutcome;
use crate::planner::lex;

/// Lifecycle of a submodule task.
///
/// Transitions run `Planned -> Generated -> (Verified | Failed)`; a
/// `Generated` task loops on itself while it is being repaired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Planned,
    Generated,
    Verified,
    Failed,
}

impl TaskStatus {
    pub fn can_transition_to(self, next: TaskStatus) -> bool {
        use TaskStatus::*;
        matches!(
            (self, next),
            (Planned, Generated)
                | (Planned, Verified)
                | (Generated, Generated)
                | (Generated, Verified)
                | (Generated, Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TaskStatus::Verified | TaskStatus::Failed)
    }
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskStatus::Planned => "planned",
            TaskStatus::Generated => "generated",
            TaskStatus::Verified => "verified",
            TaskStatus::Failed => "failed",
        };
        f.write_str(s)
    }
}

/// Model capability tier. Each tier maps to a concrete model identifier in
/// the pipeline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Base,
    Strong,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Base => f.write_str("base"),
            Tier::Strong => f.write_str("strong"),
        }
    }
}

/// Whether a submodule is combinational or needs a fixed number of clock
/// cycles before its result is compared against the C model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimingRequirement {
    Combinational,
    Sequential { timeframe: NonZeroU32 },
}

impl TimingRequirement {
    pub fn sequential(cycles: u32) -> Option<Self> {
        NonZeroU32::new(cycles).map(|timeframe| TimingRequirement::Sequential { timeframe })
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self, TimingRequirement::Sequential { .. })
    }

    pub fn timeframe(&self) -> Option<u32> {
        match self {
            TimingRequirement::Combinational => None,
            TimingRequirement::Sequential { timeframe } => Some(timeframe.get()),
        }
    }
}

impl fmt::Display for TimingRequirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimingRequirement::Combinational => f.write_str("combinational"),
            TimingRequirement::Sequential { timeframe } => {
                write!(f, "sequential, {timeframe} clock cycle(s)")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Function,
    Macro,
    Enum,
    Constant,
    Typedef,
    /// struct or union definition
    Record,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymbolKind::Function => "function",
            SymbolKind::Macro => "macro",
            SymbolKind::Enum => "enum",
            SymbolKind::Constant => "constant",
            SymbolKind::Typedef => "typedef",
            SymbolKind::Record => "record",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequiredSymbol {
    pub name: String,
    pub kind: SymbolKind,
}

/// A C function together with every definition it needs to compile on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CBundle {
    pub focus_function: String,
    pub source_text: String,
    pub required_symbols: Vec<RequiredSymbol>,
}

impl CBundle {
    pub fn requires(&self, name: &str) -> bool {
        self.required_symbols.iter().any(|s| s.name == name)
    }
}

/// One design handed to the pipeline: a self-contained C translation unit,
/// its natural-language specification, and the entry function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignInput {
    pub design_name: String,
    pub top_function: String,
    pub c_source: String,
    pub spec_text: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InputError {
    #[error("design name {0:?} is not usable as a directory name")]
    BadDesignName(String),
    #[error("top function `{name}` is defined {count} times in the C source (expected exactly once)")]
    TopDefinitionCount { name: String, count: usize },
}

impl DesignInput {
    pub fn validate(&self) -> Result<(), InputError> {
        if !is_valid_design_name(&self.design_name) {
            return Err(InputError::BadDesignName(self.design_name.clone()));
        }
        let count = lex::top_level_items(&self.c_source)
            .iter()
            .filter(|item| item.function_name() == Some(self.top_function.as_str()))
            .count();
        if count != 1 {
            return Err(InputError::TopDefinitionCount { name: self.top_function.clone(), count });
        }
        Ok(())
    }
}

pub fn is_valid_design_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// How a task was produced: by call-graph decomposition, or as the whole
/// design with the C model pasted into the specification (ablation baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOrigin {
    #[default]
    Decomposed,
    Monolithic,
}

/// One generation/verification attempt. Index 0 is the initial generation;
/// every later index is one repair iteration and carries its patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub index: u32,
    pub model_tier: Tier,
    pub rtl_text: String,
    pub harness_text: String,
    pub ec_outcome: EcOutcome,
    pub patch: Option<PatchOutcome>,
    pub wall_time: f64,
}

/// A unit of work: one C function to be realised as one RTL module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmoduleTask {
    pub design: String,
    pub name: String,
    pub origin: TaskOrigin,
    /// What the model sees: the focus function, its non-function
    /// dependencies, and declarations for callees.
    pub bundle: CBundle,
    /// Complete closure (callee bodies included) compiled next to the
    /// harness by the equivalence checker.
    pub reference_source: String,
    pub refined_spec: String,
    /// Unset until the initializing stage has classified the task.
    pub timing: Option<TimingRequirement>,
    pub status: TaskStatus,
    pub attempts: Vec<AttemptRecord>,
    pub dependencies: Vec<String>,
}

impl SubmoduleTask {
    /// Repair rounds used so far (attempts beyond the initial generation).
    pub fn iterations(&self) -> u32 {
        self.attempts.last().map(|a| a.index).unwrap_or(0)
    }

    pub fn last_attempt(&self) -> Option<&AttemptRecord> {
        self.attempts.last()
    }

    pub fn passed_initially(&self) -> bool {
        self.attempts.first().map(|a| a.ec_outcome.is_pass()).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_transitions() {
        use TaskStatus::*;
        assert!(Planned.can_transition_to(Generated));
        assert!(Generated.can_transition_to(Generated));
        assert!(Generated.can_transition_to(Failed));
        assert!(!Planned.can_transition_to(Failed));
        assert!(!Verified.can_transition_to(Generated));
        assert!(!Failed.can_transition_to(Verified));
    }

    #[test]
    fn timing_requirement_roundtrip() {
        let seq = TimingRequirement::sequential(3).unwrap();
        let text = serde_json::to_string(&seq).unwrap();
        assert_eq!(text, r#"{"kind":"sequential","timeframe":3}"#);
        assert_eq!(serde_json::from_str::<TimingRequirement>(&text).unwrap(), seq);
        assert!(TimingRequirement::sequential(0).is_none());
        assert_eq!(TimingRequirement::Combinational.timeframe(), None);
    }

    #[test]
    fn design_input_validation() {
        let mut input = DesignInput {
            design_name: "f16_add".into(),
            top_function: "f".into(),
            c_source: "int g(int a) { return a; }\nint f(int a) { return g(a); }\n".into(),
            spec_text: String::new(),
        };
        assert_eq!(input.validate(), Ok(()));

        input.c_source.push_str("int f(int a);\n");
        assert_eq!(input.validate(), Ok(()), "prototypes are not definitions");

        input.top_function = "h".into();
        assert_eq!(input.validate(), Err(InputError::TopDefinitionCount { name: "h".into(), count: 0 }));

        input.top_function = "f".into();
        input.design_name = "../x".into();
        assert!(matches!(input.validate(), Err(InputError::BadDesignName(_))));
    }
}
