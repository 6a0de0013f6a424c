// SPDX-License-Identifier: Apache-2.0

//! A small C tokenizer.
//!
//! This is not a parser. It splits source text into identifiers, literals,
//! punctuation and whole preprocessor lines, which is enough for name
//! scanning and for splitting a file into its top-level items. Semantic
//! analysis comes from the compiler's AST dump.

use std::collections::BTreeSet;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    /// A full preprocessor directive, continuation lines included.
    Directive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub span: Range<usize>,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }
}

pub const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
    "_Alignas",
    "_Alignof",
    "_Atomic",
    "_Generic",
    "_Noreturn",
    "_Static_assert",
    "_Thread_local",
    "__inline",
    "__inline__",
    "__attribute__",
    "__restrict",
    "__extension__",
    "asm",
    "__asm__",
    "defined",
];

pub fn is_keyword(word: &str) -> bool {
    C_KEYWORDS.contains(&word)
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

const PUNCT3: &[&str] = &["<<=", ">>=", "..."];
const PUNCT2: &[&str] = &[
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "##",
];

/// Tokenizes `src`. Comments and whitespace are dropped; unterminated
/// literals and comments run to end of input rather than failing.
pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    // Directives are only recognised at the start of a line.
    let mut at_line_start = true;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\n' {
            at_line_start = true;
            i += 1;
            continue;
        }
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < bytes.len() && !(bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/')) {
                i += 1;
            }
            i = (i + 2).min(bytes.len());
            continue;
        }
        let start = i;
        if b == b'#' && at_line_start {
            i = directive_end(bytes, i);
            out.push(Token { kind: TokKind::Directive, span: start..i });
            continue;
        }
        at_line_start = false;
        if is_ident_start(b) {
            while i < bytes.len() && is_ident_continue(bytes[i]) {
                i += 1;
            }
            // Wide / unicode literal prefixes (L"..", u8'..') stay with the literal.
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let word = &src[start..i];
                if matches!(word, "L" | "u" | "U" | "u8") {
                    let quote = bytes[i];
                    i = literal_end(bytes, i, quote);
                    let kind = if quote == b'"' { TokKind::Str } else { TokKind::Char };
                    out.push(Token { kind, span: start..i });
                    continue;
                }
            }
            out.push(Token { kind: TokKind::Ident, span: start..i });
            continue;
        }
        if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() {
                let c = bytes[i];
                let exp = matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P');
                if c.is_ascii_alphanumeric() || c == b'.' || c == b'_' || (exp && (c == b'+' || c == b'-')) {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(Token { kind: TokKind::Number, span: start..i });
            continue;
        }
        if b == b'"' || b == b'\'' {
            i = literal_end(bytes, i, b);
            let kind = if b == b'"' { TokKind::Str } else { TokKind::Char };
            out.push(Token { kind, span: start..i });
            continue;
        }
        let rest = &src[i..];
        let len = PUNCT3
            .iter()
            .chain(PUNCT2)
            .find(|p| rest.starts_with(**p))
            .map(|p| p.len())
            .unwrap_or_else(|| rest.chars().next().map(char::len_utf8).unwrap_or(1));
        i += len;
        out.push(Token { kind: TokKind::Punct, span: start..i });
    }
    out
}

fn literal_end(bytes: &[u8], open: usize, quote: u8) -> usize {
    let mut i = open + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn directive_end(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if bytes.get(i + 1) == Some(&b'\n') => i += 2,
            b'\\' if bytes.get(i + 1) == Some(&b'\r') && bytes.get(i + 2) == Some(&b'\n') => i += 3,
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                // A block comment may legally span lines inside a directive.
                i += 2;
                while i < bytes.len() && !(bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/')) {
                    i += 1;
                }
                i = (i + 2).min(bytes.len());
            }
            b'\n' => return i,
            _ => i += 1,
        }
    }
    bytes.len()
}

/// Identifiers that `text` refers to, excluding keywords, member names
/// (after `.` or `->`), and anything inside preprocessor directives.
pub fn referenced_identifiers(text: &str) -> BTreeSet<String> {
    let toks = tokenize(text);
    let mut out = BTreeSet::new();
    for (i, tok) in toks.iter().enumerate() {
        if tok.kind != TokKind::Ident {
            continue;
        }
        let word = tok.text(text);
        if is_keyword(word) {
            continue;
        }
        if i > 0 {
            let prev = &toks[i - 1];
            if prev.kind == TokKind::Punct && matches!(prev.text(text), "." | "->") {
                continue;
            }
        }
        out.insert(word.to_string());
    }
    out
}

/// A parsed `#define`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDef {
    pub name: String,
    /// Parameter names for function-like macros.
    pub params: Option<Vec<String>>,
    pub body: String,
    /// The whole directive, `#` through the final continuation line.
    pub span: Range<usize>,
}

impl MacroDef {
    /// Identifiers used by the replacement list, parameters excluded.
    pub fn references(&self) -> BTreeSet<String> {
        let mut refs = referenced_identifiers(&self.body);
        if let Some(params) = &self.params {
            for p in params {
                refs.remove(p);
            }
        }
        refs.remove("__VA_ARGS__");
        refs
    }
}

/// Splits a directive token into (directive name, remainder).
pub fn directive_parts(text: &str) -> (&str, &str) {
    let rest = text.trim_start_matches('#').trim_start();
    let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
    (&rest[..end], &rest[end..])
}

pub fn parse_define(text: &str, span: Range<usize>) -> Option<MacroDef> {
    let (directive, rest) = directive_parts(text);
    if directive != "define" {
        return None;
    }
    let rest = rest.trim_start_matches([' ', '\t']);
    let name_len = rest.bytes().take_while(|b| is_ident_continue(*b)).count();
    if name_len == 0 || !is_ident_start(rest.as_bytes()[0]) {
        return None;
    }
    let name = rest[..name_len].to_string();
    let after = &rest[name_len..];
    let (params, body) = if let Some(stripped) = after.strip_prefix('(') {
        let close = stripped.find(')')?;
        let params = stripped[..close].split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
        (Some(params), &stripped[close + 1..])
    } else {
        (None, after)
    };
    let body = body.replace("\\\r\n", " ").replace("\\\n", " ").trim().to_string();
    Some(MacroDef { name, params, body, span })
}

/// All `#define`s in `src`, in source order.
pub fn scan_macros(src: &str) -> Vec<MacroDef> {
    tokenize(src)
        .into_iter()
        .filter(|t| t.kind == TokKind::Directive)
        .filter_map(|t| parse_define(t.text(src), t.span.clone()))
        .collect()
}

/// System include lines (`#include <...>`) in source order.
pub fn system_includes(src: &str) -> Vec<String> {
    tokenize(src)
        .into_iter()
        .filter(|t| t.kind == TokKind::Directive)
        .map(|t| t.text(src).trim().to_string())
        .filter(|line| {
            let (d, rest) = directive_parts(line);
            d == "include" && rest.trim_start().starts_with('<')
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopItemKind {
    Function {
        name: String,
    },
    Prototype {
        name: String,
    },
    /// typedef / struct / enum / variable; `names` are the identifiers it defines.
    Declaration {
        names: Vec<String>,
        typedef: bool,
        record: bool,
        enumeration: bool,
    },
    Macro(MacroDef),
    Include {
        system: bool,
    },
    OtherDirective {
        directive: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopItem {
    pub kind: TopItemKind,
    pub span: Range<usize>,
}

impl TopItem {
    pub fn function_name(&self) -> Option<&str> {
        match &self.kind {
            TopItemKind::Function { name } => Some(name),
            _ => None,
        }
    }

    pub fn defined_names(&self) -> Vec<&str> {
        match &self.kind {
            TopItemKind::Function { name } => vec![name.as_str()],
            TopItemKind::Declaration { names, .. } => names.iter().map(String::as_str).collect(),
            TopItemKind::Macro(m) => vec![m.name.as_str()],
            _ => Vec::new(),
        }
    }
}

/// Splits a translation unit into its top-level items by brace/paren
/// structure. Good enough for well-formed datapath C; malformed input
/// yields best-effort items rather than errors.
pub fn top_level_items(src: &str) -> Vec<TopItem> {
    let toks = tokenize(src);
    let mut items = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let tok = &toks[i];
        if tok.kind == TokKind::Directive {
            let text = tok.text(src);
            let (d, rest) = directive_parts(text);
            let kind = match d {
                "define" => match parse_define(text, tok.span.clone()) {
                    Some(m) => TopItemKind::Macro(m),
                    None => TopItemKind::OtherDirective { directive: d.to_string() },
                },
                "include" => TopItemKind::Include { system: rest.trim_start().starts_with('<') },
                _ => TopItemKind::OtherDirective { directive: d.to_string() },
            };
            items.push(TopItem { kind, span: tok.span.clone() });
            i += 1;
            continue;
        }
        let start = i;
        let mut depth = 0i32;
        let mut j = i;
        let mut end_kind = None;
        while j < toks.len() {
            let t = &toks[j];
            if t.kind == TokKind::Directive {
                if depth == 0 {
                    break;
                }
                j += 1;
                continue;
            }
            let text = t.text(src);
            match text {
                "(" | "[" => depth += 1,
                ")" | "]" => depth -= 1,
                "{" => {
                    if depth == 0 && j > start && toks[j - 1].text(src) == ")" {
                        let close = matching_brace(&toks, src, j);
                        end_kind = Some((close, true));
                        break;
                    }
                    depth += 1;
                }
                "}" => depth -= 1,
                ";" if depth == 0 => {
                    end_kind = Some((j, false));
                    break;
                }
                _ => {}
            }
            j += 1;
        }
        let Some((last, is_function)) = end_kind else {
            // Trailing junk or a directive interrupting a declaration.
            i = j.max(i + 1);
            continue;
        };
        let slice = &toks[start..=last];
        let span = slice[0].span.start..slice[slice.len() - 1].span.end;
        let kind = if is_function {
            match declarator_name(slice, src) {
                Some(name) => TopItemKind::Function { name },
                None => {
                    TopItemKind::Declaration { names: Vec::new(), typedef: false, record: false, enumeration: false }
                }
            }
        } else {
            classify_declaration(slice, src)
        };
        items.push(TopItem { kind, span });
        i = last + 1;
    }
    items
}

fn matching_brace(toks: &[Token], src: &str, open: usize) -> usize {
    let mut depth = 0;
    for (k, t) in toks.iter().enumerate().skip(open) {
        match t.text(src) {
            "{" => depth += 1,
            "}" => {
                depth -= 1;
                if depth == 0 {
                    return k;
                }
            }
            _ => {}
        }
    }
    toks.len() - 1
}

/// The identifier directly before the first top-level parameter list.
fn declarator_name(toks: &[Token], src: &str) -> Option<String> {
    let mut depth = 0;
    for (k, t) in toks.iter().enumerate() {
        match t.text(src) {
            "(" => {
                if depth == 0 && k > 0 && toks[k - 1].kind == TokKind::Ident {
                    let name = toks[k - 1].text(src);
                    if !is_keyword(name) {
                        return Some(name.to_string());
                    }
                }
                depth += 1;
            }
            ")" => depth -= 1,
            "{" | "=" => break,
            _ => {}
        }
    }
    None
}

fn classify_declaration(toks: &[Token], src: &str) -> TopItemKind {
    let words: Vec<&str> = toks.iter().map(|t| t.text(src)).collect();
    let typedef = words.first() == Some(&"typedef");
    let has_body = words.contains(&"{");
    let record = words.iter().any(|w| matches!(*w, "struct" | "union")) && has_body;
    let enumeration = words.contains(&"enum") && has_body;

    let mut names = Vec::new();
    // Tag of `struct tag {` / `enum tag {`.
    if has_body {
        if let Some(open) = words.iter().position(|w| *w == "{") {
            if open >= 2
                && matches!(words[open - 2], "struct" | "union" | "enum")
                && toks[open - 1].kind == TokKind::Ident
            {
                names.push(words[open - 1].to_string());
            }
            if enumeration {
                let mut depth = 0;
                let mut expect = true;
                for (k, w) in words.iter().enumerate().skip(open) {
                    match *w {
                        "{" | "(" => {
                            depth += 1;
                            if depth == 1 {
                                expect = true;
                            }
                        }
                        "}" | ")" => depth -= 1,
                        "," if depth == 1 => expect = true,
                        _ if depth == 1 && expect && toks[k].kind == TokKind::Ident => {
                            names.push(w.to_string());
                            expect = false;
                        }
                        _ if depth == 1 => expect = false,
                        _ => {}
                    }
                }
            }
        }
    }
    // Declarators after the closing brace (or after the type for plain declarations).
    let after_body = if has_body { words.iter().rposition(|w| *w == "}").map(|p| p + 1).unwrap_or(0) } else { 0 };
    let mut depth = 0;
    let mut candidate: Option<&str> = None;
    let mut in_init = false;
    let mut prototype = None;
    for (k, w) in words.iter().enumerate().skip(after_body) {
        match *w {
            "(" | "[" | "{" => {
                if *w == "("
                    && depth == 0
                    && !in_init
                    && toks[k.saturating_sub(1)].kind == TokKind::Ident
                    && candidate.is_some()
                    && !typedef
                {
                    prototype = candidate.map(str::to_string);
                }
                depth += 1;
            }
            ")" | "]" | "}" => depth -= 1,
            "=" if depth == 0 => {
                if let Some(c) = candidate.take() {
                    names.push(c.to_string());
                }
                in_init = true;
            }
            "," | ";" if depth == 0 => {
                if let Some(c) = candidate.take() {
                    names.push(c.to_string());
                }
                in_init = false;
            }
            _ if depth == 0 && !in_init && toks[k].kind == TokKind::Ident && !is_keyword(w) => {
                candidate = Some(w);
            }
            _ if depth == 1
                && typedef
                && toks[k].kind == TokKind::Ident
                && !is_keyword(w)
                && words.get(k.wrapping_sub(1)) == Some(&"*") =>
            {
                // typedef int (*fn)(int);
                candidate = Some(w);
            }
            _ => {}
        }
    }
    if let Some(name) = prototype {
        return TopItemKind::Prototype { name };
    }
    // In `static const uint16_t MASK = 1;` the type names precede the
    // declarator; keep only the last identifier before each `=`/`,`/`;`.
    TopItemKind::Declaration { names, typedef, record, enumeration }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_comments_literals_and_directives() {
        let src = "#define A(x) \\\n  ((x)+1)\nint f(void) { /* g() */ return A(2) + 'a' + \"h(\"; } // tail\n";
        let toks = tokenize(src);
        assert_eq!(toks[0].kind, TokKind::Directive);
        assert!(toks[0].text(src).ends_with("((x)+1)"));
        let idents: Vec<_> = toks.iter().filter(|t| t.kind == TokKind::Ident).map(|t| t.text(src)).collect();
        assert_eq!(idents, ["int", "f", "void", "return", "A"]);
    }

    #[test]
    fn referenced_identifiers_skip_members_and_keywords() {
        let refs = referenced_identifiers("uint16_t r = u.ui + p->v + MASK; return (uint16_t) r;");
        let refs: Vec<_> = refs.into_iter().collect();
        assert_eq!(refs, ["MASK", "p", "r", "u", "uint16_t"]);
    }

    #[test]
    fn macro_parsing() {
        let m = scan_macros("#define packToF16UI(sign, exp, sig) ((uint16_t) (((uint16_t) (sign)<<15) + ((uint16_t) (exp)<<10) + (sig)))\n#define LIMIT 0x1F\n");
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].name, "packToF16UI");
        assert_eq!(m[0].params.as_deref(), Some(&["sign".to_string(), "exp".into(), "sig".into()][..]));
        assert_eq!(m[0].references().into_iter().collect::<Vec<_>>(), ["uint16_t"]);
        assert_eq!(m[1].params, None);
        assert_eq!(m[1].body, "0x1F");
    }

    #[test]
    fn splits_top_level_items() {
        let src = r#"
#include <stdint.h>
#define W 16
typedef struct { uint16_t sig; int8_t exp; } exp8_sig16;
enum round_mode { RNE = 0, RTZ, RDN = W };
static const uint16_t MASK = 0xFF, OTHER = 1;
uint16_t g(uint16_t a);
struct pair { int a; int b; };
uint16_t f(uint16_t a) { if (a) { return g(a); } return 0; }
"#;
        let items = top_level_items(src);
        let kinds: Vec<_> = items.iter().map(|i| &i.kind).collect();
        assert!(matches!(kinds[0], TopItemKind::Include { system: true }));
        assert!(matches!(kinds[1], TopItemKind::Macro(m) if m.name == "W"));
        assert_eq!(items[2].defined_names(), ["exp8_sig16"]);
        assert_eq!(items[3].defined_names(), ["round_mode", "RNE", "RTZ", "RDN"]);
        assert_eq!(items[4].defined_names(), ["MASK", "OTHER"]);
        assert!(matches!(&kinds[5], TopItemKind::Prototype { name } if name == "g"));
        assert_eq!(items[6].defined_names(), ["pair"]);
        assert_eq!(items[7].function_name(), Some("f"));
        assert!(src[items[7].span.clone()].ends_with("return 0; }"));
    }
}
