// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ec::Diagnostic;

/// Numbered source lines around a diagnostic.
/// `first_line <= center_line <= last_line`, all within the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeWindow {
    pub file: String,
    pub center_line: usize,
    pub first_line: usize,
    pub last_line: usize,
    /// `"<n> | <text>"`, one per line in the window.
    pub lines: Vec<String>,
    pub message: String,
    /// The diagnostic pointed outside the file (or had no line) and was moved.
    pub clamped: bool,
}

impl fmt::Display for CodeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:{}: {}", self.file, self.center_line, self.message)?;
        if self.clamped {
            writeln!(f, "(reported line lies outside the file; showing the nearest lines)")?;
        }
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot locate a diagnostic in empty file {0}")]
pub struct EmptyFile(pub String);

/// Window of `radius` lines either side of the diagnostic's line.
pub fn locate_bug(text: &str, diagnostic: &Diagnostic, radius: usize) -> Result<CodeWindow, EmptyFile> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return Err(EmptyFile(diagnostic.file.clone()));
    }
    let n = lines.len();
    let wanted = diagnostic.line.map(|l| l as usize);
    let center = wanted.unwrap_or(1).clamp(1, n);
    let clamped = wanted != Some(center);
    let first = center.saturating_sub(radius).max(1);
    let last = (center + radius).min(n);
    let width = last.to_string().len();
    let numbered = (first..=last)
        .map(|i| {
            let marker = if i == center { '>' } else { ' ' };
            format!("{marker}{i:>width$} | {}", lines[i - 1])
        })
        .collect();
    Ok(CodeWindow {
        file: diagnostic.file.clone(),
        center_line: center,
        first_line: first,
        last_line: last,
        lines: numbered,
        message: diagnostic.message.clone(),
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(line: u32) -> Diagnostic {
        Diagnostic { file: "top.v".into(), line: Some(line), column: None, message: "syntax error".into() }
    }

    fn file(n: usize) -> String {
        (1..=n).map(|i| format!("line {i}\n")).collect()
    }

    #[test]
    fn window_bounds() {
        let w = locate_bug(&file(100), &diag(42), 5).unwrap();
        assert_eq!((w.first_line, w.last_line, w.clamped), (37, 47, false));
        assert_eq!(w.lines.len(), 11);
        assert_eq!(w.lines[5], ">42 | line 42");
        let w = locate_bug(&file(100), &diag(2), 5).unwrap();
        assert_eq!((w.first_line, w.last_line), (1, 7));
        let w = locate_bug(&file(100), &diag(200), 5).unwrap();
        assert_eq!((w.first_line, w.center_line, w.last_line, w.clamped), (95, 100, 100, true));
        assert!(locate_bug("", &diag(1), 5).is_err());
    }
}
