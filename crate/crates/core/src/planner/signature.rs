// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lex::{self, TokKind, TopItemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub c_type: String,
    /// Bit width when the type resolves to a fixed-width scalar.
    pub width: Option<u32>,
    pub direction: PortDirection,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            PortDirection::Input => "input",
            PortDirection::Output => "output",
        };
        match self.width {
            Some(w) => write!(f, "{dir} {} : {w}-bit ({})", self.name, self.c_type),
            None => write!(f, "{dir} {} : {}", self.name, self.c_type),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CSignature {
    pub name: String,
    pub return_type: String,
    pub ports: Vec<Port>,
}

impl CSignature {
    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == PortDirection::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == PortDirection::Output)
    }
}

fn builtin_width(ty: &str) -> Option<u32> {
    let t = ty.trim();
    let fixed = |prefix: &str| {
        t.strip_prefix(prefix)
            .and_then(|rest| rest.strip_suffix("_t").or(Some(rest)))
            .and_then(|n| n.parse::<u32>().ok())
    };
    for prefix in ["uint_fast", "int_fast", "uint_least", "int_least", "uint", "int", "u", "i"] {
        if let Some(w) = fixed(prefix) {
            if matches!(w, 1..=128) {
                return Some(w);
            }
        }
    }
    Some(match t {
        "bool" | "_Bool" => 1,
        "char" | "signed char" | "unsigned char" => 8,
        "short" | "unsigned short" | "short int" | "unsigned short int" => 16,
        "int" | "unsigned" | "unsigned int" | "signed" | "signed int" => 32,
        "long long" | "unsigned long long" | "long long int" | "unsigned long long int" => 64,
        "long" | "unsigned long" => 64,
        _ => return None,
    })
}

/// Typedef aliases declared in `source`: alias -> aliased type text.
fn typedef_aliases(source: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for item in lex::top_level_items(source) {
        if let TopItemKind::Declaration { names, typedef: true, record: false, .. } = &item.kind {
            let text = &source[item.span.clone()];
            for name in names {
                let body = text.trim_end_matches(';').trim();
                let Some(rest) = body.strip_prefix("typedef") else { continue };
                let Some(aliased) = rest.trim().strip_suffix(name.as_str()) else { continue };
                out.insert(name.clone(), aliased.split_whitespace().collect::<Vec<_>>().join(" "));
            }
        }
    }
    out
}

fn strip_qualifiers(ty: &str) -> String {
    ty.split_whitespace()
        .filter(|w| !matches!(*w, "const" | "volatile" | "restrict" | "static" | "inline" | "register" | "extern"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn resolve_width(ty: &str, aliases: &BTreeMap<String, String>) -> Option<u32> {
    let mut t = strip_qualifiers(ty);
    for _ in 0..16 {
        if let Some(w) = builtin_width(&t) {
            return Some(w);
        }
        t = strip_qualifiers(aliases.get(&t)?);
    }
    None
}

/// Splits `a, b(c, d), e` at top-level commas.
fn split_params(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = text[start..].trim();
    if !last.is_empty() {
        out.push(last);
    }
    out
}

/// Interface of the definition of `function` in `source`.
///
/// Parameters become inputs, pointer parameters outputs, and a non-void
/// return value the output port `result`. Widths resolve through the
/// fixed-width integer names and any typedefs in `source`.
pub fn parse_signature(source: &str, function: &str) -> Option<CSignature> {
    let item = lex::top_level_items(source).into_iter().find(
        |i| matches!(&i.kind, TopItemKind::Function { name } | TopItemKind::Prototype { name } if name == function),
    )?;
    let text = &source[item.span.clone()];
    let toks = lex::tokenize(text);
    let name_idx = toks.iter().position(|t| t.kind == TokKind::Ident && t.text(text) == function)?;
    let open = toks.get(name_idx + 1).filter(|t| t.text(text) == "(")?;
    let mut depth = 0;
    let mut close = None;
    for t in &toks[name_idx + 1..] {
        match t.text(text) {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    close = Some(t.span.start);
                    break;
                }
            }
            _ => {}
        }
    }
    let params_text = &text[open.span.end..close?];
    let return_type = strip_qualifiers(&text[..toks[name_idx].span.start]);
    let aliases = typedef_aliases(source);

    let mut ports = Vec::new();
    for (i, p) in split_params(params_text).into_iter().enumerate() {
        if p == "void" {
            continue;
        }
        let ptoks = lex::tokenize(p);
        let last_ident = ptoks.iter().rev().find(|t| t.kind == TokKind::Ident && !lex::is_keyword(t.text(p)));
        let (name, ty) = match last_ident {
            Some(t) if ptoks.len() > 1 => (t.text(p).to_string(), p[..t.span.start].trim().to_string()),
            _ => (format!("arg{i}"), p.to_string()),
        };
        let pointer = ty.contains('*') || p.contains('[');
        let base = ty.replace('*', " ");
        ports.push(Port {
            width: resolve_width(&base, &aliases),
            c_type: strip_qualifiers(&ty),
            name,
            direction: if pointer { PortDirection::Output } else { PortDirection::Input },
        });
    }
    if return_type != "void" {
        ports.push(Port {
            name: "result".into(),
            width: resolve_width(&return_type, &aliases),
            c_type: return_type.clone(),
            direction: PortDirection::Output,
        });
    }
    Some(CSignature { name: function.to_string(), return_type, ports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_binary_op() {
        let src = "typedef unsigned short uint16;\nuint16 f(uint16 a, uint16 b) { return a + b; }\n";
        let sig = parse_signature(src, "f").unwrap();
        let ins: Vec<_> = sig.inputs().map(|p| (p.name.as_str(), p.width)).collect();
        assert_eq!(ins, [("a", Some(16)), ("b", Some(16))]);
        let outs: Vec<_> = sig.outputs().map(|p| (p.name.as_str(), p.width)).collect();
        assert_eq!(outs, [("result", Some(16))]);
    }

    #[test]
    fn widths_and_pointers() {
        let src = "typedef uint_fast8_t exp_t;\n\
                   static inline void g(const uint32_t x, bool s, exp_t e, uint16_t *out) { *out = x; }";
        let sig = parse_signature(src, "g").unwrap();
        let got: Vec<_> = sig.ports.iter().map(|p| (p.name.as_str(), p.width, p.direction)).collect();
        assert_eq!(
            got,
            [
                ("x", Some(32), PortDirection::Input),
                ("s", Some(1), PortDirection::Input),
                ("e", Some(8), PortDirection::Input),
                ("out", Some(16), PortDirection::Output),
            ]
        );
        assert_eq!(sig.return_type, "void");
    }

    #[test]
    fn void_params_and_struct_return() {
        let src = "struct p { int a; };\nstruct p h(void) { struct p r = {0}; return r; }";
        let sig = parse_signature(src, "h").unwrap();
        assert_eq!(sig.ports.len(), 1);
        assert_eq!(sig.ports[0].width, None);
        assert!(parse_signature(src, "missing").is_none());
    }
}
