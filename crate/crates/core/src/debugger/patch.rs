// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::template::{fenced_sections, header_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchTarget {
    Rtl,
    Harness,
}

/// One exact-match replacement. `anchor` is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchProposal {
    pub target: PatchTarget,
    pub anchor: String,
    pub replacement: String,
    pub rationale: String,
}

/// What happened to the patch of one repair iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum PatchOutcome {
    Applied {
        proposal: PatchProposal,
    },
    /// Both the reply and its reprompt failed to parse or apply.
    Rejected {
        proposal: Option<PatchProposal>,
        error: String,
    },
}

impl PatchOutcome {
    pub fn proposal(&self) -> Option<&PatchProposal> {
        match self {
            PatchOutcome::Applied { proposal } => Some(proposal),
            PatchOutcome::Rejected { proposal, .. } => proposal.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("reply has no ```{0} section")]
    MissingSection(&'static str),
    #[error("reply has {0} ANCHOR sections; exactly one is allowed")]
    MultipleAnchors(usize),
    #[error("reply has {0} REPLACEMENT sections; exactly one is allowed")]
    MultipleReplacements(usize),
    #[error("ANCHOR section is empty")]
    EmptyAnchor,
    #[error("TARGET must be `rtl` or `harness`, got `{0}`")]
    BadTarget(String),
    #[error("anchor text does not occur in the {0} file")]
    AnchorAbsent(&'static str),
    #[error("anchor text occurs {count} times in the {file} file; it must be unique")]
    AnchorAmbiguous { file: &'static str, count: usize },
}

/// Drops the newline a fence always adds after the last body line.
fn fence_body(mut s: String) -> String {
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
    s
}

/// Reads the mandated reply shape: an optional `TARGET: rtl|harness` line
/// (default rtl), one ```ANCHOR fence and one ```REPLACEMENT fence. Text
/// outside the fences is kept as the rationale.
pub fn parse_patch(reply: &str) -> Result<PatchProposal, PatchError> {
    let anchors = fenced_sections(reply, "ANCHOR");
    let replacements = fenced_sections(reply, "REPLACEMENT");
    match anchors.len() {
        0 => return Err(PatchError::MissingSection("ANCHOR")),
        1 => {}
        n => return Err(PatchError::MultipleAnchors(n)),
    }
    match replacements.len() {
        0 => return Err(PatchError::MissingSection("REPLACEMENT")),
        1 => {}
        n => return Err(PatchError::MultipleReplacements(n)),
    }
    let anchor = fence_body(anchors.into_iter().next().expect("one anchor"));
    if anchor.trim().is_empty() {
        return Err(PatchError::EmptyAnchor);
    }
    let target = match header_value(reply, "TARGET").map(|v| v.to_ascii_lowercase()) {
        None => PatchTarget::Rtl,
        Some(v) if v == "rtl" => PatchTarget::Rtl,
        Some(v) if v == "harness" => PatchTarget::Harness,
        Some(v) => return Err(PatchError::BadTarget(v)),
    };
    let mut rationale = String::new();
    let mut in_fence = false;
    for line in reply.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if !in_fence && header_value(line, "TARGET").is_none() {
            rationale.push_str(line);
            rationale.push('\n');
        }
    }
    Ok(PatchProposal {
        target,
        anchor,
        replacement: fence_body(replacements.into_iter().next().expect("one replacement")),
        rationale: rationale.trim().to_string(),
    })
}

/// Occurrences of `needle` in `hay`, overlapping ones included.
fn count_occurrences(hay: &str, needle: &str) -> usize {
    let mut count = 0;
    let mut from = 0;
    while let Some(pos) = hay[from..].find(needle) {
        count += 1;
        from += pos + needle[..].chars().next().map_or(1, char::len_utf8);
    }
    count
}

/// Replaces the single occurrence of the anchor. Bytes outside the anchor
/// span are unchanged.
pub fn apply_patch(file: &str, proposal: &PatchProposal) -> Result<String, PatchError> {
    let which = match proposal.target {
        PatchTarget::Rtl => "rtl",
        PatchTarget::Harness => "harness",
    };
    if proposal.anchor.is_empty() {
        return Err(PatchError::EmptyAnchor);
    }
    match count_occurrences(file, &proposal.anchor) {
        0 => Err(PatchError::AnchorAbsent(which)),
        1 => {
            let at = file.find(&proposal.anchor).expect("counted once");
            let mut out = String::with_capacity(file.len() + proposal.replacement.len());
            out.push_str(&file[..at]);
            out.push_str(&proposal.replacement);
            out.push_str(&file[at + proposal.anchor.len()..]);
            Ok(out)
        }
        count => Err(PatchError::AnchorAmbiguous { file: which, count }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(anchor: &str, replacement: &str) -> PatchProposal {
        PatchProposal {
            target: PatchTarget::Rtl,
            anchor: anchor.into(),
            replacement: replacement.into(),
            rationale: String::new(),
        }
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_patch("a;b;c", &p("b", "B")).unwrap(), "a;B;c");
        assert_eq!(apply_patch("a;b;c", &p("x", "X")), Err(PatchError::AnchorAbsent("rtl")));
        assert_eq!(apply_patch("a;b;c", &p(";", ",")), Err(PatchError::AnchorAmbiguous { file: "rtl", count: 2 }));
        // Overlapping occurrences count as ambiguous.
        assert!(matches!(apply_patch("aaa", &p("aa", "b")), Err(PatchError::AnchorAmbiguous { count: 2, .. })));
    }

    #[test]
    fn parse_examples() {
        let ok = "The shift is off by one.\nTARGET: rtl\n```ANCHOR\nassign y = x << 1;\n```\n```REPLACEMENT\nassign y = x << 2;\n```\n";
        let prop = parse_patch(ok).unwrap();
        assert_eq!(prop.anchor, "assign y = x << 1;");
        assert_eq!(prop.replacement, "assign y = x << 2;");
        assert_eq!(prop.rationale, "The shift is off by one.");
        assert_eq!(prop.target, PatchTarget::Rtl);

        let two = "```ANCHOR\na\n```\n```ANCHOR\nb\n```\n```REPLACEMENT\nc\n```\n";
        assert_eq!(parse_patch(two), Err(PatchError::MultipleAnchors(2)));
        assert_eq!(parse_patch("```ANCHOR\na\n```\n"), Err(PatchError::MissingSection("REPLACEMENT")));
        assert_eq!(parse_patch("```ANCHOR\n\n```\n```REPLACEMENT\nc\n```\n"), Err(PatchError::EmptyAnchor));
        let harness = "TARGET: harness\n```ANCHOR\nx\n```\n```REPLACEMENT\n```\n";
        let h = parse_patch(harness).unwrap();
        assert_eq!((h.target, h.replacement.as_str()), (PatchTarget::Harness, ""));
    }
}
