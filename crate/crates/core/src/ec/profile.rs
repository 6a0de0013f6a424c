// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::EcError;

/// Profiles compiled into the binary: (name, TOML text).
pub const BUILTIN_PROFILES: &[(&str, &str)] = &[("hw-cbmc", include_str!("../../assets/profiles/hw-cbmc.toml"))];

#[derive(Debug, Deserialize)]
struct ProfileFile {
    name: String,
    command: Vec<String>,
    #[serde(default = "default_success_codes")]
    success_exit_codes: Vec<i32>,
    success_pattern: String,
    failure_pattern: String,
    trace_start_pattern: String,
    #[serde(default)]
    diagnostic_patterns: Vec<String>,
    trace: GrammarFile,
}

fn default_success_codes() -> Vec<i32> {
    vec![0]
}

#[derive(Debug, Deserialize)]
struct GrammarFile {
    software_state: String,
    hardware_state: String,
    assignment: String,
    violation: String,
    violation_location: String,
    assertion: String,
    property_id: String,
}

/// Line-level patterns of a counterexample trace. Each applies to one line.
#[derive(Debug, Clone)]
pub struct TraceGrammar {
    pub software_state: Regex,
    pub hardware_state: Regex,
    pub assignment: Regex,
    pub violation: Regex,
    pub violation_location: Regex,
    pub assertion: Regex,
    pub property_id: Regex,
}

#[derive(Debug, Clone)]
pub struct ToolProfile {
    pub name: String,
    pub command: Vec<String>,
    pub success_exit_codes: Vec<i32>,
    pub success: Regex,
    pub failure: Regex,
    pub trace_start: Regex,
    pub diagnostics: Vec<Regex>,
    pub trace: TraceGrammar,
}

impl ToolProfile {
    pub fn from_toml(text: &str) -> Result<Self, EcError> {
        let file: ProfileFile =
            toml::from_str(text).map_err(|e| EcError::Profile { name: "<unnamed>".into(), reason: e.to_string() })?;
        let name = file.name.clone();
        let re = |what: &str, pat: &str| {
            Regex::new(pat).map_err(|e| EcError::Profile { name: name.clone(), reason: format!("{what}: {e}") })
        };
        if file.command.is_empty() {
            return Err(EcError::EmptyTemplate);
        }
        let g = &file.trace;
        Ok(ToolProfile {
            success: re("success_pattern", &file.success_pattern)?,
            failure: re("failure_pattern", &file.failure_pattern)?,
            trace_start: re("trace_start_pattern", &file.trace_start_pattern)?,
            diagnostics: file
                .diagnostic_patterns
                .iter()
                .map(|p| re("diagnostic_patterns", p))
                .collect::<Result<_, _>>()?,
            trace: TraceGrammar {
                software_state: re("trace.software_state", &g.software_state)?,
                hardware_state: re("trace.hardware_state", &g.hardware_state)?,
                assignment: re("trace.assignment", &g.assignment)?,
                violation: re("trace.violation", &g.violation)?,
                violation_location: re("trace.violation_location", &g.violation_location)?,
                assertion: re("trace.assertion", &g.assertion)?,
                property_id: re("trace.property_id", &g.property_id)?,
            },
            name: file.name,
            command: file.command,
            success_exit_codes: file.success_exit_codes,
        })
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN_PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text).expect("builtin profiles are valid"))
    }

    /// A builtin profile by name, or a profile file by path.
    pub fn resolve(name_or_path: &str) -> Result<Self, EcError> {
        if let Some(p) = Self::builtin(name_or_path) {
            return Ok(p);
        }
        let path = Path::new(name_or_path);
        let text = std::fs::read_to_string(path).map_err(|source| EcError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let p = ToolProfile::builtin("hw-cbmc").unwrap();
        assert_eq!(p.command[0], "hw-cbmc");
        assert!(p.success.is_match("x\nVERIFICATION SUCCESSFUL\n"));
        assert!(p.trace.hardware_state.is_match("Transition system state 2"));
        let caps = p.trace.assignment.captures("  rtl.result=15360 (00111100 00000000)").unwrap();
        assert_eq!(&caps["name"], "rtl.result");
        assert_eq!(&caps["bits"], "00111100 00000000");
        assert!(ToolProfile::builtin("nope").is_none());
    }

    #[test]
    fn bad_regex_is_reported() {
        let text = ToolProfile::builtin("hw-cbmc").map(|_| BUILTIN_PROFILES[0].1).unwrap();
        let broken = text.replacen("(?m)^VERIFICATION SUCCESSFUL", "(", 1);
        assert!(matches!(ToolProfile::from_toml(&broken), Err(EcError::Profile { .. })));
    }
}
