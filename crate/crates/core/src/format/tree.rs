//! The generic document tree: `key: value` entries, `{ }` maps, `[ ]` lists
//! and text atoms, with `#` comments. Every node remembers where it started.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const HEADER: &str = "ci-engine/1";

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Text(String),
    List(Vec<Value>),
    Map(Vec<(String, Value)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub kind: Kind,
    pub line: usize,
    pub column: usize,
}

pub fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value {
            kind: Kind::Text(s.into()),
            line: 0,
            column: 0,
        }
    }

    pub fn list(items: Vec<Value>) -> Self {
        Value {
            kind: Kind::List(items),
            line: 0,
            column: 0,
        }
    }

    pub fn map(entries: Vec<(String, Value)>) -> Self {
        Value {
            kind: Kind::Map(entries),
            line: 0,
            column: 0,
        }
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        err(self.line, self.column, message)
    }

    pub fn as_text(&self) -> Result<&str> {
        match &self.kind {
            Kind::Text(s) => Ok(s),
            _ => Err(self.error("expected a text value")),
        }
    }

    pub fn as_list(&self) -> Result<&[Value]> {
        match &self.kind {
            Kind::List(v) => Ok(v),
            _ => Err(self.error("expected a list")),
        }
    }

    pub fn as_map(&self) -> Result<&[(String, Value)]> {
        match &self.kind {
            Kind::Map(v) => Ok(v),
            _ => Err(self.error("expected a map")),
        }
    }

    pub fn as_usize(&self) -> Result<usize> {
        self.as_text()?
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    /// The value under `key`; a missing key is reported at the map itself.
    pub fn get(&self, key: &str) -> Result<&Value> {
        self.opt(key)?.ok_or_else(|| self.error(format!("missing key `{key}`")))
    }

    pub fn opt(&self, key: &str) -> Result<Option<&Value>> {
        let entries = self.as_map()?;
        let mut found = None;
        for (k, v) in entries {
            if k == key {
                if found.is_some() {
                    return Err(v.error(format!("duplicate key `{key}`")));
                }
                found = Some(v);
            }
        }
        Ok(found)
    }

    /// Rejects keys outside `allowed`.
    pub fn only_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, v) in self.as_map()? {
            if !allowed.contains(&k.as_str()) {
                return Err(v.error(format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(char),
    Close(char),
    Colon,
    Comma,
    Text(String),
    End,
}

fn bare(c: char) -> bool {
    !c.is_whitespace() && !"{}[]:,#\"".contains(c)
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line,
            column: 1,
            _src: src,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    /// Next token with its start position.
    fn next(&mut self) -> Result<(Tok, usize, usize)> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, column) = (self.line, self.column);
        let Some(c) = self.bump() else {
            return Ok((Tok::End, line, column));
        };
        let tok = match c {
            '{' | '[' => Tok::Open(c),
            '}' | ']' => Tok::Close(c),
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '"' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return Err(err(line, column, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(err(self.line, self.column, "bad escape")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Text(s)
            }
            c if bare(c) => {
                let mut s = String::from(c);
                while let Some(n) = self.peek().filter(|&n| bare(n)) {
                    s.push(n);
                    self.bump();
                }
                Tok::Text(s)
            }
            other => return Err(err(line, column, format!("unexpected character `{other}`"))),
        };
        Ok((tok, line, column))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    ahead: Option<(Tok, usize, usize)>,
    depth: usize,
}

/// Nesting limit, so hostile input cannot exhaust the stack.
const MAX_DEPTH: usize = 64;

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(Tok, usize, usize)> {
        if self.ahead.is_none() {
            self.ahead = Some(self.lex.next()?);
        }
        Ok(self.ahead.as_ref().expect("filled above"))
    }

    fn take(&mut self) -> Result<(Tok, usize, usize)> {
        match self.ahead.take() {
            Some(t) => Ok(t),
            None => self.lex.next(),
        }
    }

    fn value(&mut self) -> Result<Value> {
        let (tok, line, column) = self.take()?;
        let kind = match tok {
            Tok::Text(s) => Kind::Text(s),
            Tok::Open(c) => {
                self.depth += 1;
                if self.depth > MAX_DEPTH {
                    return Err(err(line, column, "nesting too deep"));
                }
                let k = if c == '{' {
                    Kind::Map(self.entries(Some('}'))?)
                } else {
                    Kind::List(self.items()?)
                };
                self.depth -= 1;
                k
            }
            Tok::End => return Err(err(line, column, "unexpected end of input")),
            other => return Err(err(line, column, format!("expected a value, found {}", describe(&other)))),
        };
        Ok(Value { kind, line, column })
    }

    fn items(&mut self) -> Result<Vec<Value>> {
        let mut out = Vec::new();
        loop {
            match self.peek()?.0 {
                Tok::Close(']') => {
                    self.take()?;
                    return Ok(out);
                }
                Tok::Comma => {
                    self.take()?;
                }
                _ => out.push(self.value()?),
            }
        }
    }

    fn entries(&mut self, close: Option<char>) -> Result<Vec<(String, Value)>> {
        let mut out = Vec::new();
        loop {
            let (tok, line, column) = self.take()?;
            match tok {
                Tok::Close(c) if Some(c) == close => return Ok(out),
                Tok::End if close.is_none() => return Ok(out),
                Tok::Comma => continue,
                Tok::Text(key) => {
                    let (t, l, c) = self.take()?;
                    if t != Tok::Colon {
                        return Err(err(l, c, format!("expected `:` after key `{key}`")));
                    }
                    out.push((key, self.value()?));
                }
                other => return Err(err(line, column, format!("expected a key, found {}", describe(&other)))),
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Open(c) | Tok::Close(c) => format!("`{c}`"),
        Tok::Colon => "`:`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Text(s) => format!("`{s}`"),
        Tok::End => "end of input".into(),
    }
}

/// Parses a whole document: the header line, then top-level entries.
pub fn parse(src: &str) -> Result<Value> {
    let first = src.lines().next().unwrap_or("");
    if first.trim_end() != HEADER {
        return Err(err(1, 1, format!("expected header `{HEADER}`")));
    }
    let rest = &src[first.len()..];
    let mut p = Parser {
        lex: Lexer::new(rest, 1),
        ahead: None,
        depth: 0,
    };
    // the lexer starts at the newline ending the header
    p.lex.column = first.chars().count() + 1;
    let entries = p.entries(None)?;
    Ok(Value {
        kind: Kind::Map(entries),
        line: 1,
        column: 1,
    })
}

fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(bare) {
        return s.to_string();
    }
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const INLINE_WIDTH: usize = 72;

/// Single-line rendering, if it fits. Maps nest inline only under
/// single-entry maps such as `{causal: {system: A, dim: 2}}`.
fn inline(v: &Value) -> Option<String> {
    match &v.kind {
        Kind::Text(s) => Some(quote(s)),
        Kind::List(items) => {
            let parts = items.iter().map(inline).collect::<Option<Vec<_>>>()?;
            let s = format!("[{}]", parts.join(", "));
            (s.len() <= INLINE_WIDTH).then_some(s)
        }
        Kind::Map(entries) => {
            let parts = entries
                .iter()
                .map(|(k, v)| match v.kind {
                    Kind::Map(_) if entries.len() > 1 => None,
                    _ => inline(v).map(|s| format!("{}: {s}", quote(k))),
                })
                .collect::<Option<Vec<_>>>()?;
            let s = format!("{{{}}}", parts.join(", "));
            (s.len() <= INLINE_WIDTH).then_some(s)
        }
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    if let Some(s) = inline(v) {
        out.push_str(&s);
        return;
    }
    let pad = "  ".repeat(indent + 1);
    match &v.kind {
        Kind::Text(s) => out.push_str(&quote(s)),
        Kind::List(items) => {
            out.push_str("[\n");
            for item in items {
                out.push_str(&pad);
                write_value(out, item, indent + 1);
                out.push('\n');
            }
            let _ = write!(out, "{}]", "  ".repeat(indent));
        }
        Kind::Map(entries) => {
            out.push_str("{\n");
            write_entries(out, entries, indent + 1);
            let _ = write!(out, "{}}}", "  ".repeat(indent));
        }
    }
}

fn write_entries(out: &mut String, entries: &[(String, Value)], indent: usize) {
    for (k, v) in entries {
        let _ = write!(out, "{}{}: ", "  ".repeat(indent), quote(k));
        write_value(out, v, indent);
        out.push('\n');
    }
}

/// Canonical text of a document whose root is a map.
pub fn serialize(root: &[(String, Value)]) -> String {
    let mut out = format!("{HEADER}\n");
    write_entries(&mut out, root, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_values() {
        let doc = parse("ci-engine/1\n# note\na: 1/2\nb: [x, \"y z\", [1, 2]]\nc: {d: e}\n").unwrap();
        assert_eq!(doc.get("a").unwrap().as_text().unwrap(), "1/2");
        let b = doc.get("b").unwrap().as_list().unwrap();
        assert_eq!(b[1].as_text().unwrap(), "y z");
        assert_eq!(b[2].as_list().unwrap().len(), 2);
        assert_eq!(doc.get("c").unwrap().get("d").unwrap().as_text().unwrap(), "e");
        assert_eq!((b[0].line, b[0].column), (4, 5));
    }

    #[test]
    fn header_required() {
        assert!(matches!(parse("a: 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("ci-engine/1\na: [1, 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse("ci-engine/1\nok: 1\n  bad 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, column: 7, .. }), "{e}");
    }

    #[test]
    fn serializer_round_trips() {
        let src = "ci-engine/1\nm: {\n  a: [1, 2]\n  nested: {x: y}\n}\ns: \"has space\"\n";
        let doc = parse(src).unwrap();
        let out = serialize(doc.as_map().unwrap());
        assert_eq!(out, src);
        let again = parse(&out).unwrap();
        assert_eq!(serialize(again.as_map().unwrap()), out);
    }

    #[test]
    fn deep_nesting_rejected() {
        let src = format!("ci-engine/1\na: {}{}\n", "[".repeat(100), "]".repeat(100));
        assert!(parse(&src).is_err());
    }

    #[test]
    fn duplicate_keys_reported() {
        let doc = parse("ci-engine/1\na: 1\na: 2\n").unwrap();
        assert!(matches!(doc.get("a"), Err(Error::Parse { line: 3, .. })));
    }
}
