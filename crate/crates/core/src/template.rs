// SPDX-License-Identifier: Apache-2.0

//! `{{name}}` prompt templates and fenced-section extraction from replies.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template placeholder {{{{{0}}}}} has no value")]
    MissingValue(String),
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
}

/// Substitutes every `{{key}}` in one pass. Substituted text is never
/// rescanned, so values may themselves contain braces.
pub fn render(template: &str, values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    let mut consumed = 0;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(TemplateError::Unterminated(consumed + open))?;
        let key = after[..close].trim();
        let value = values.get(key).ok_or_else(|| TemplateError::MissingValue(key.to_string()))?;
        out.push_str(value);
        let advance = open + 2 + close + 2;
        consumed += advance;
        rest = &rest[advance..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Placeholder names used by `template`, in order of first use.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        let Some(close) = after.find("}}") else { break };
        let key = after[..close].trim().to_string();
        if !out.contains(&key) {
            out.push(key);
        }
        rest = &after[close + 2..];
    }
    out
}

/// Bodies of every fenced block tagged `tag` (case-insensitive):
/// a line starting with three backticks followed by the tag, through the
/// next line that is exactly three backticks.
pub fn fenced_sections(text: &str, tag: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut lines = text.split_inclusive('\n');
    while let Some(line) = lines.next() {
        let trimmed = line.trim();
        let Some(info) = trimmed.strip_prefix("```") else { continue };
        if !info.trim().eq_ignore_ascii_case(tag) {
            continue;
        }
        let mut body = String::new();
        let mut closed = false;
        for inner in lines.by_ref() {
            if inner.trim() == "```" {
                closed = true;
                break;
            }
            body.push_str(inner);
        }
        if closed {
            out.push(body);
        }
    }
    out
}

/// `KEY: value` line lookup (case-insensitive key), first match wins.
pub fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(':')?;
        k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
    })
}
