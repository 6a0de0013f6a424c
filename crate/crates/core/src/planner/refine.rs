// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::signature::parse_signature;
use super::PlanError;
use crate::gateway::{Gateway, Message, ModelRequest, Purpose, Transcript};
use crate::model::{CBundle, SymbolKind, Tier};
use crate::prompts::Prompts;
use crate::template::render;

/// Machine-written header naming the focus function and its ports.
pub fn interface_header(bundle: &CBundle) -> String {
    let mut out = format!("# Module `{}`\n\n", bundle.focus_function);
    match parse_signature(&bundle.source_text, &bundle.focus_function) {
        Some(sig) => {
            out.push_str("Interface derived from the C signature:\n");
            for p in sig.inputs().chain(sig.outputs()) {
                out.push_str(&format!("- {p}\n"));
            }
            if sig.ports.is_empty() {
                out.push_str("- (no ports)\n");
            }
        }
        None => out.push_str("Interface: the C signature could not be read; see the reference bundle.\n"),
    }
    out
}

/// Per-submodule specification: [`interface_header`], a blank line, then
/// the model's reply verbatim. The planning stage runs on the base tier.
pub fn refine_spec(
    design_spec: &str,
    bundle: &CBundle,
    gateway: &Gateway,
    transcript: &mut Transcript,
    prompts: &Prompts,
    request_id: &str,
) -> Result<String, PlanError> {
    let header = interface_header(bundle);
    let callees: Vec<&str> =
        bundle.required_symbols.iter().filter(|s| s.kind == SymbolKind::Function).map(|s| s.name.as_str()).collect();
    let mut v: BTreeMap<&str, String> = BTreeMap::new();
    v.insert("design_spec", design_spec.to_string());
    v.insert("function", bundle.focus_function.clone());
    v.insert("bundle", bundle.source_text.clone());
    v.insert("interface", header.clone());
    v.insert("callees", if callees.is_empty() { "none".into() } else { callees.join(", ") });
    let user = render(&prompts.spec_refine_user, &v).map_err(|e| PlanError::Template(e.to_string()))?;
    let request = ModelRequest::new(
        request_id,
        Tier::Base,
        Purpose::SpecRefine,
        vec![Message::system(prompts.spec_refine_system.trim_end()), Message::user(user)],
    )?;
    let reply = gateway.complete(&request, transcript)?;
    Ok(format!("{header}\n{}", reply.text))
}
