// SPDX-License-Identifier: Apache-2.0

//! External C compiler invocation: AST dumps and standalone compile checks.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{ingest_ast, FunctionTable, PlanError};

pub const SOURCE_PLACEHOLDER: &str = "{source_file}";
pub const DUMP_PLACEHOLDER: &str = "{dump_file}";

/// Command templates. `{source_file}` is required in both; when the dump
/// template lacks `{dump_file}` the dump is read from standard output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompilerConfig {
    pub ast_dump: Vec<String>,
    pub syntax_check: Vec<String>,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect();
        CompilerConfig {
            ast_dump: v(&["clang", "-fsyntax-only", "-Xclang", "-ast-dump=json", SOURCE_PLACEHOLDER]),
            syntax_check: v(&[
                "clang",
                "-fsyntax-only",
                "-std=c11",
                "-Werror=implicit-function-declaration",
                SOURCE_PLACEHOLDER,
            ]),
        }
    }
}

/// Private scratch directory, removed on drop.
struct Scratch(PathBuf);

impl Scratch {
    fn new() -> Result<Self, PlanError> {
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let dir = std::env::temp_dir().join(format!(
            "rtlsmith-cc-{}-{}",
            std::process::id(),
            NEXT.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::create_dir_all(&dir).map_err(|source| PlanError::Io { path: dir.clone(), source })?;
        Ok(Scratch(dir))
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn render_argv(template: &[String], source: &Path, dump: &Path) -> Result<Vec<String>, PlanError> {
    if template.is_empty() {
        return Err(PlanError::Template("empty command".into()));
    }
    if !template.iter().any(|a| a.contains(SOURCE_PLACEHOLDER)) {
        return Err(PlanError::Template(format!("missing {SOURCE_PLACEHOLDER}")));
    }
    Ok(template
        .iter()
        .map(|a| {
            a.replace(SOURCE_PLACEHOLDER, &source.to_string_lossy()).replace(DUMP_PLACEHOLDER, &dump.to_string_lossy())
        })
        .collect())
}

fn run(argv: &[String]) -> Result<std::process::Output, PlanError> {
    Command::new(&argv[0])
        .args(&argv[1..])
        .output()
        .map_err(|e| PlanError::Compiler { command: argv.to_vec(), detail: e.to_string() })
}

fn tail(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(20)..].join("\n")
}

/// Runs the AST dump template on `source` and returns the dump text.
pub fn dump_ast(template: &[String], source: &str) -> Result<String, PlanError> {
    let scratch = Scratch::new()?;
    let src_path = scratch.0.join("input.c");
    let dump_path = scratch.0.join("ast.json");
    std::fs::write(&src_path, source).map_err(|e| PlanError::Io { path: src_path.clone(), source: e })?;
    let argv = render_argv(template, &src_path, &dump_path)?;
    let out = run(&argv)?;
    if !out.status.success() {
        return Err(PlanError::Compiler { command: argv, detail: tail(&out.stderr) });
    }
    if template.iter().any(|a| a.contains(DUMP_PLACEHOLDER)) {
        std::fs::read_to_string(&dump_path).map_err(|e| PlanError::Io { path: dump_path, source: e })
    } else {
        String::from_utf8(out.stdout).map_err(|e| PlanError::MalformedDump(e.to_string()))
    }
}

/// Dump and ingest in one step.
pub fn analyze(config: &CompilerConfig, source: &str) -> Result<FunctionTable, PlanError> {
    let dump = dump_ast(&config.ast_dump, source)?;
    ingest_ast(&dump, source)
}

/// Compiles `source` as a standalone translation unit.
pub fn check_compiles(config: &CompilerConfig, source: &str) -> Result<(), PlanError> {
    let scratch = Scratch::new()?;
    let src_path = scratch.0.join("bundle.c");
    std::fs::write(&src_path, source).map_err(|e| PlanError::Io { path: src_path.clone(), source: e })?;
    let argv = render_argv(&config.syntax_check, &src_path, &scratch.0.join("unused"))?;
    let out = run(&argv)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(PlanError::Compiler { command: argv, detail: tail(&out.stderr) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_needs_source() {
        let cfg = CompilerConfig { ast_dump: vec!["cc".into()], ..CompilerConfig::default() };
        assert!(matches!(dump_ast(&cfg.ast_dump, "int x;"), Err(PlanError::Template(_))));
        assert!(matches!(dump_ast(&[], "int x;"), Err(PlanError::Template(_))));
    }

    #[test]
    fn missing_compiler_is_reported() {
        let t = vec!["/nonexistent/cc".to_string(), SOURCE_PLACEHOLDER.to_string()];
        assert!(matches!(dump_ast(&t, "int x;"), Err(PlanError::Compiler { .. })));
    }
}
