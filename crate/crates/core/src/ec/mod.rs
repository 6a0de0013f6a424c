// SPDX-License-Identifier: Apache-2.0

//! Adapter around an external C-vs-RTL equivalence checker.
//!
//! The checker is described by a [`ToolProfile`] (command template, output
//! patterns, trace grammar). [`compose_invocation`] renders the command,
//! [`run_check`] executes it under a timeout, and [`classify_output`] maps
//! the captured text to an [`EcOutcome`].

mod cex;
mod classify;
mod invoke;
mod profile;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use cex::{parse_counterexample, TraceHints};
pub use classify::classify_output;
pub use invoke::{compose_invocation, run_check, AttemptFiles, CommandPlan, EcJob, EcRunner, RunOutput};
pub use profile::{ToolProfile, TraceGrammar, BUILTIN_PROFILES};

/// A value with an explicit bit width. `bits` is MSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitValue {
    pub width: u32,
    pub bits: String,
}

impl BitValue {
    pub fn from_bits(bits: &str) -> Option<Self> {
        let bits: String = bits.chars().filter(|c| !c.is_whitespace()).collect();
        if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
            return None;
        }
        Some(BitValue { width: bits.len() as u32, bits })
    }

    pub fn from_u128(value: u128, width: u32) -> Self {
        let width = width.clamp(1, 128);
        let bits = (0..width).rev().map(|i| if (value >> i) & 1 == 1 { '1' } else { '0' }).collect();
        BitValue { width, bits }
    }

    /// Numeric value when it fits in 128 bits.
    pub fn to_u128(&self) -> Option<u128> {
        if self.width > 128 {
            return None;
        }
        u128::from_str_radix(&self.bits, 2).ok()
    }
}

impl fmt::Display for BitValue {
    /// Hex, zero-padded to the width: 16 bits of 15360 print as `0x3C00`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.width as usize).div_ceil(4).max(1);
        let pad = digits * 4 - self.bits.len();
        let padded: String = "0".repeat(pad) + &self.bits;
        f.write_str("0x")?;
        for chunk in padded.as_bytes().chunks(4) {
            let nibble = chunk.iter().fold(0u8, |acc, b| (acc << 1) | (b - b'0'));
            write!(f, "{nibble:X}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    /// 1-based.
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// A state of the C program.
    Software,
    /// A transition-system state of the RTL; `index` is the clock cycle.
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub name: String,
    pub value: BitValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: u32,
    pub kind: StepKind,
    /// Function (software) or module (hardware) the step belongs to.
    pub scope: String,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingAssertion {
    pub id: String,
    pub expression: String,
    pub file: Option<String>,
    pub line: Option<u32>,
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchPair {
    pub signal: String,
    pub c_value: BitValue,
    pub rtl_value: BitValue,
    pub scope: String,
    pub cycle: u32,
}

/// A parsed counterexample. `mismatch_pairs` is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CexTrace {
    pub steps: Vec<TraceStep>,
    pub failing_assertion: FailingAssertion,
    pub mismatch_pairs: Vec<MismatchPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CexReport {
    Parsed(CexTrace),
    /// The trace section could not be parsed; repair falls back to raw text.
    Unparsed {
        reason: String,
        section: String,
    },
}

impl CexReport {
    pub fn trace(&self) -> Option<&CexTrace> {
        match self {
            CexReport::Parsed(t) => Some(t),
            CexReport::Unparsed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EcVerdict {
    Pass,
    SyntaxError { diagnostics: Vec<Diagnostic> },
    Counterexample { report: CexReport },
    Timeout { seconds: f64, bound: u32 },
    ToolError { exit_code: Option<i32>, reason: String },
}

impl EcVerdict {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EcVerdict::Pass => "pass",
            EcVerdict::SyntaxError { .. } => "syntax_error",
            EcVerdict::Counterexample { .. } => "counterexample",
            EcVerdict::Timeout { .. } => "timeout",
            EcVerdict::ToolError { .. } => "tool_error",
        }
    }
}

/// Classified result of one checker run. `raw_output` is the complete tool
/// output; it is stored next to the attempt rather than in the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcOutcome {
    #[serde(flatten)]
    pub verdict: EcVerdict,
    #[serde(skip)]
    pub raw_output: String,
}

impl EcOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self.verdict, EcVerdict::Pass)
    }
}

/// Runs one equivalence check. Implemented by [`EcRunner`]; tests
/// substitute scripted checkers.
pub trait Checker: Send + Sync {
    /// Returns the outcome and the checker's elapsed seconds.
    fn check(&self, job: &EcJob<'_>, scratch: &std::path::Path) -> Result<(EcOutcome, f64), EcError>;
}

impl Checker for EcRunner {
    fn check(&self, job: &EcJob<'_>, scratch: &std::path::Path) -> Result<(EcOutcome, f64), EcError> {
        EcRunner::check(self, job, scratch)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EcError {
    #[error("equivalence checker `{0}` not found")]
    ToolMissing(String),
    #[error("command template is missing placeholder {0}")]
    MissingPlaceholder(&'static str),
    #[error("command template is empty")]
    EmptyTemplate,
    #[error("checker input {0} does not exist")]
    MissingFile(PathBuf),
    #[error("bad tool profile {name}: {reason}")]
    Profile { name: String, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_rendering() {
        assert_eq!(BitValue::from_u128(0x3C00, 16).to_string(), "0x3C00");
        assert_eq!(BitValue::from_bits("101").unwrap().to_string(), "0x5");
        assert_eq!(BitValue::from_bits("0001 1111").unwrap().to_string(), "0x1F");
        assert_eq!(BitValue::from_bits("10001").unwrap().to_string(), "0x11");
        assert!(BitValue::from_bits("12").is_none());
        assert_eq!(BitValue::from_u128(5, 4).to_u128(), Some(5));
    }

    #[test]
    fn outcome_serde_skips_raw() {
        let o = EcOutcome { verdict: EcVerdict::Pass, raw_output: "VERIFICATION SUCCESSFUL".into() };
        let text = serde_json::to_string(&o).unwrap();
        assert_eq!(text, r#"{"kind":"pass"}"#);
        let back: EcOutcome = serde_json::from_str(&text).unwrap();
        assert!(back.is_pass() && back.raw_output.is_empty());
    }
}
