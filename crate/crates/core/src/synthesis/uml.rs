//! Parser and pretty-printer for the `plantuml-subset-v1` diagram dialect.
//!
//! The grammar is published in `docs/uml-subset.ebnf`. Anything outside it is a
//! [`ParseError::Syntax`] carrying the 1-based line of the offending input; errors found at the
//! end of input report the last line of the script.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{
    Annotation, AnnotationKey, DiagramKind, ElementKind, GraphError, Member, MemberKind, ModelElement, ModelGraph,
    Relation, RelationKind, Visibility,
};

pub const DIALECT: &str = "plantuml-subset-v1";
pub const START_MARKER: &str = "@startuml";
pub const END_MARKER: &str = "@enduml";

const KEYWORDS: [(&str, ElementKind); 3] =
    [("class", ElementKind::Class), ("component", ElementKind::Component), ("interface", ElementKind::Interface)];

// longest first so `..|>` wins over `..>`
const ARROWS: [(&str, RelationKind); 4] = [
    ("..|>", RelationKind::Realization),
    ("..>", RelationKind::Dependency),
    ("-->", RelationKind::Association),
    ("*--", RelationKind::Composition),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UmlScript {
    pub text: String,
    pub dialect: String,
    pub diagram_kind: DiagramKind,
}

impl UmlScript {
    pub fn new(text: impl Into<String>, diagram_kind: DiagramKind) -> Self {
        UmlScript { text: text.into(), dialect: DIALECT.to_string(), diagram_kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("line {line}: expected {expected}, found {found}")]
    Syntax { line: usize, expected: String, found: String },
    #[error("line {line}: element {name:?} is declared twice")]
    DuplicateElement { line: usize, name: String },
    #[error("unsupported dialect {0:?}")]
    UnsupportedDialect(String),
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } | ParseError::DuplicateElement { line, .. } => Some(*line),
            ParseError::UnsupportedDialect(_) => None,
        }
    }
}

pub fn parse_uml_script(script: &UmlScript) -> Result<ModelGraph, ParseError> {
    if script.dialect != DIALECT {
        return Err(ParseError::UnsupportedDialect(script.dialect.clone()));
    }
    parse_uml(&script.text, script.diagram_kind)
}

pub fn parse_uml(text: &str, diagram_kind: DiagramKind) -> Result<ModelGraph, ParseError> {
    Parser::new(text).script(diagram_kind)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    eof_line: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0, line: 1, eof_line: src.lines().count().max(1) }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.bump();
        }
    }

    fn at_eol(&self) -> bool {
        matches!(self.peek(), None | Some('\n')) || self.rest().starts_with("\r\n")
    }

    fn eat_eol(&mut self) -> bool {
        self.eat("\r\n") || self.eat("\n")
    }

    fn skip_to_eol(&mut self) {
        while !self.at_eol() {
            self.bump();
        }
    }

    fn found(&self) -> String {
        let mut chars = self.rest().chars();
        match chars.next() {
            None => "end of input".into(),
            Some('\n') | Some('\r') => "end of line".into(),
            Some(_) => {
                let token: String = self.rest().chars().take_while(|c| !c.is_whitespace()).take(16).collect();
                format!("{token:?}")
            }
        }
    }

    fn err<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let line = if self.at_eof() { self.eof_line } else { self.line };
        Err(ParseError::Syntax { line, expected: expected.into(), found: self.found() })
    }

    fn ident(&mut self, what: &str) -> PResult<&'a str> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return self.err(what),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        Ok(&self.src[start..self.pos])
    }

    fn expect_line_end(&mut self, expected: &str) -> PResult<()> {
        self.skip_ws();
        if self.at_eof() || self.eat_eol() {
            Ok(())
        } else {
            self.err(expected)
        }
    }

    fn script(mut self, diagram_kind: DiagramKind) -> PResult<ModelGraph> {
        // leading blank lines
        loop {
            self.skip_ws();
            if !self.eat_eol() {
                break;
            }
        }
        if !self.eat(START_MARKER) {
            return self.err(format!("`{START_MARKER}`"));
        }
        self.expect_line_end("end of line after `@startuml`")?;

        let mut graph = ModelGraph::new(diagram_kind);
        let mut relations: Vec<(Relation, usize)> = Vec::new();
        loop {
            self.skip_ws();
            if self.at_eof() {
                return self.err(format!("`{END_MARKER}`"));
            }
            if self.eat_eol() {
                continue;
            }
            if self.peek() == Some('\'') {
                self.skip_to_eol();
                continue;
            }
            if self.rest().starts_with(END_MARKER) {
                self.eat(END_MARKER);
                self.expect_line_end("end of line after `@enduml`")?;
                break;
            }
            let line = self.line;
            match self.keyword() {
                Some(kind) => {
                    let element = self.declaration(kind)?;
                    if graph.contains(&element.name) {
                        return Err(ParseError::DuplicateElement { line, name: element.name });
                    }
                    graph.elements.push(element);
                }
                None => relations.push((self.relation()?, line)),
            }
        }
        loop {
            self.skip_ws();
            if self.at_eof() {
                break;
            }
            if !self.eat_eol() {
                return self.err("end of script after `@enduml`");
            }
        }

        for (relation, line) in relations {
            for end in [&relation.from, &relation.to] {
                if !graph.contains(end) {
                    return Err(ParseError::Syntax {
                        line,
                        expected: "a declared element name".into(),
                        found: format!("{end:?}"),
                    });
                }
            }
            let found = format!("{} {} {}", relation.from, relation.kind.arrow(), relation.to);
            graph.insert_relation(relation).map_err(|e| match e {
                GraphError::DuplicateRelation { .. } => {
                    ParseError::Syntax { line, expected: "a relation not declared before".into(), found }
                }
                other => ParseError::Syntax { line, expected: "a valid relation".into(), found: other.to_string() },
            })?;
        }
        Ok(graph)
    }

    /// Consumes `class|component|interface` followed by whitespace, if present.
    fn keyword(&mut self) -> Option<ElementKind> {
        for (kw, kind) in KEYWORDS {
            if let Some(after) = self.rest().strip_prefix(kw) {
                if after.starts_with([' ', '\t']) {
                    self.eat(kw);
                    return Some(kind);
                }
            }
        }
        None
    }

    fn element_name(&mut self) -> PResult<String> {
        let start_line = self.line;
        let name = self.ident("an element name")?;
        if KEYWORDS.iter().any(|(kw, _)| *kw == name) {
            return Err(ParseError::Syntax {
                line: start_line,
                expected: "an element name".into(),
                found: format!("keyword {name:?}"),
            });
        }
        Ok(name.to_string())
    }

    fn declaration(&mut self, kind: ElementKind) -> PResult<ModelElement> {
        self.skip_ws();
        let mut element = ModelElement::new(self.element_name()?, kind);
        loop {
            self.skip_ws();
            if !self.rest().starts_with("<<") {
                break;
            }
            let line = self.line;
            let annotation = self.stereotype()?;
            if element.annotation(&annotation.key).is_some() {
                return Err(ParseError::Syntax {
                    line,
                    expected: "each stereotype at most once per element".into(),
                    found: format!("<<{}>>", annotation.key),
                });
            }
            element.annotations.push(annotation);
        }
        self.skip_ws();
        if self.peek() == Some('{') {
            self.bump();
            self.body(&mut element)?;
        }
        self.expect_line_end("end of line after declaration")?;
        Ok(element)
    }

    fn stereotype(&mut self) -> PResult<Annotation> {
        self.eat("<<");
        self.skip_ws();
        let name = self.ident("a stereotype name")?;
        let key = match name.to_ascii_lowercase().as_str() {
            "singleton" => AnnotationKey::Singleton,
            "cached" => AnnotationKey::Cached,
            "data_minimized" => AnnotationKey::DataMinimized,
            "encrypted" => AnnotationKey::Encrypted,
            _ => AnnotationKey::Other(name.to_string()),
        };
        self.skip_ws();
        let mut note = None;
        if self.peek() == Some(':') {
            self.bump();
            let start = self.pos;
            while !self.at_eol() && !self.rest().starts_with(">>") {
                self.bump();
            }
            let text = self.src[start..self.pos].trim();
            if !text.is_empty() {
                note = Some(text.to_string());
            }
        }
        if !self.eat(">>") {
            return self.err("`>>`");
        }
        Ok(Annotation { key, note })
    }

    fn body(&mut self, element: &mut ModelElement) -> PResult<()> {
        loop {
            self.skip_ws();
            match self.peek() {
                None => return self.err("`}`"),
                Some('}') => {
                    self.bump();
                    return Ok(());
                }
                Some(';') => {
                    self.bump();
                }
                Some('\'') => self.skip_to_eol(),
                _ if self.eat_eol() => {}
                _ => {
                    let line = self.line;
                    let member = self.member()?;
                    if element.member(&member.name).is_some() {
                        return Err(ParseError::Syntax {
                            line,
                            expected: format!("a member name not already declared in {}", element.name),
                            found: format!("{:?}", member.name),
                        });
                    }
                    element.members.push(member);
                    self.skip_ws();
                    if !(self.at_eol() || matches!(self.peek(), Some(';' | '}' | '\''))) {
                        return self.err("`;`, end of line or `}` after member");
                    }
                }
            }
        }
    }

    fn member(&mut self) -> PResult<Member> {
        let is_static = self.eat("{static}");
        self.skip_ws();
        let visibility = match self.peek() {
            Some('+') => Visibility::Public,
            Some('-') => Visibility::Private,
            _ => return self.err("member visibility `+` or `-`"),
        };
        self.bump();
        let name = self.ident("a member name")?.to_string();
        let mut params = None;
        if self.peek() == Some('(') {
            self.bump();
            let start = self.pos;
            while !matches!(self.peek(), None | Some(')' | '(' | '{' | '}' | ';' | '\n' | '\r')) {
                self.bump();
            }
            let raw = &self.src[start..self.pos];
            if !self.eat(")") {
                return self.err("`)`");
            }
            params = Some(normalize_params(raw));
        }
        self.skip_ws();
        let mut type_ref = None;
        if self.peek() == Some(':') {
            self.bump();
            let start = self.pos;
            while !matches!(self.peek(), None | Some(';' | '{' | '}' | '\n' | '\r')) {
                self.bump();
            }
            let t = self.src[start..self.pos].trim();
            if t.is_empty() {
                return self.err("a type name");
            }
            type_ref = Some(t.to_string());
        }
        let kind = if params.is_some() { MemberKind::Operation } else { MemberKind::Attribute };
        Ok(Member { name, kind, visibility, is_static, params, type_ref })
    }

    fn relation(&mut self) -> PResult<Relation> {
        let from = match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.element_name()?,
            _ => return self.err("a declaration, a relation or `@enduml`"),
        };
        self.skip_ws();
        let Some((arrow, kind)) = ARROWS.iter().find(|(a, _)| self.rest().starts_with(a)).copied() else {
            return self.err("a relation arrow (`-->`, `..>`, `..|>` or `*--`)");
        };
        self.eat(arrow);
        self.skip_ws();
        let to = self.element_name()?;
        self.skip_ws();
        let mut label = None;
        if self.peek() == Some(':') {
            self.bump();
            let start = self.pos;
            self.skip_to_eol();
            let text = self.src[start..self.pos].trim();
            if text.is_empty() {
                return self.err("a relation label");
            }
            label = Some(text.to_string());
        }
        self.expect_line_end("end of line after relation")?;
        Ok(Relation { from, to, kind, label })
    }
}

fn normalize_params(raw: &str) -> String {
    if raw.trim().is_empty() {
        return String::new();
    }
    raw.split(',').map(str::trim).collect::<Vec<_>>().join(", ")
}

/// Normal form: elements in declaration order, then relations; 2-space member indent;
/// stereotypes directly after the element name.
pub fn pretty_print(graph: &ModelGraph) -> String {
    let mut out = String::new();
    out.push_str(START_MARKER);
    out.push('\n');
    for e in &graph.elements {
        out.push_str(e.kind.keyword());
        out.push(' ');
        out.push_str(&e.name);
        for a in &e.annotations {
            match &a.note {
                Some(note) => write!(out, " <<{}: {}>>", a.key.stereotype(), note).unwrap(),
                None => write!(out, " <<{}>>", a.key.stereotype()).unwrap(),
            }
        }
        if e.members.is_empty() {
            out.push('\n');
            continue;
        }
        out.push_str(" {\n");
        for m in &e.members {
            out.push_str("  ");
            out.push_str(&format_member(m));
            out.push('\n');
        }
        out.push_str("}\n");
    }
    for r in &graph.relations {
        write!(out, "{} {} {}", r.from, r.kind.arrow(), r.to).unwrap();
        if let Some(label) = &r.label {
            write!(out, " : {label}").unwrap();
        }
        out.push('\n');
    }
    out.push_str(END_MARKER);
    out.push('\n');
    out
}

pub fn format_member(m: &Member) -> String {
    let mut s = String::new();
    if m.is_static {
        s.push_str("{static} ");
    }
    s.push(match m.visibility {
        Visibility::Public => '+',
        Visibility::Private => '-',
    });
    s.push_str(&m.name);
    if let Some(p) = &m.params {
        write!(s, "({p})").unwrap();
    }
    if let Some(t) = &m.type_ref {
        write!(s, ": {t}").unwrap();
    }
    s
}
