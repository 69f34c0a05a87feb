//! Penman notation reader and writer.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::{AmrGraph, Attribute, Concept, Constant, GraphError, Relation, Role, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    UnexpectedToken(String),
    UnbalancedParenthesis,
    UnterminatedString,
    MissingConcept,
    MissingTarget(String),
    DuplicateVariable(String),
    UndeclaredVariable(String),
    TrailingInput(String),
    Invalid(GraphError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}"),
            ParseErrorKind::UnbalancedParenthesis => write!(f, "unbalanced parenthesis"),
            ParseErrorKind::UnterminatedString => write!(f, "unterminated string literal"),
            ParseErrorKind::MissingConcept => write!(f, "missing concept after '/'"),
            ParseErrorKind::MissingTarget(r) => write!(f, "role {r} has no target"),
            ParseErrorKind::DuplicateVariable(v) => write!(f, "variable {v} declared twice"),
            ParseErrorKind::UndeclaredVariable(v) => {
                write!(f, "reference to undeclared variable {v}")
            }
            ParseErrorKind::TrailingInput(t) => write!(f, "trailing input after graph: {t:?}"),
            ParseErrorKind::Invalid(e) => write!(f, "{e}"),
        }
    }
}

/// A Penman syntax error with its byte offset and 1-based line/column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl ParseError {
    fn at(text: &str, offset: usize, kind: ParseErrorKind) -> Self {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
        ParseError { kind, offset, line, column }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Quoted(String),
    Symbol(String),
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Open => "(".into(),
            Tok::Close => ")".into(),
            Tok::Slash => "/".into(),
            Tok::Role(s) | Tok::Quoted(s) | Tok::Symbol(s) => s.clone(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push((Tok::Open, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::Close, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(ParseError::at(text, start, ParseErrorKind::UnterminatedString)),
                        Some(b'\\') => i += 2,
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                out.push((Tok::Quoted(text[start..i].to_string()), start));
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b'"')
                    // a slash ends a symbol, but roles and constants may not contain one either
                    && bytes[i] != b'/'
                {
                    i += 1;
                }
                let word = text[start..i].to_string();
                let tok = if word.starts_with(':') { Tok::Role(word) } else { Tok::Symbol(word) };
                out.push((tok, start));
            }
        }
    }
    Ok(out)
}

/// Splits Penman text into tokens: parentheses, slashes, variables, concepts,
/// roles and constants.
pub fn tokenize(text: &str) -> Result<Vec<String>, ParseError> {
    Ok(lex(text)?.into_iter().map(|(t, _)| t.text()).collect())
}

/// Joins tokens back into single-line Penman text.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for tok in tokens {
        let tok = tok.as_ref();
        if let Some(p) = prev {
            if p != "(" && tok != ")" {
                out.push(' ');
            }
        }
        out.push_str(tok);
        prev = Some(tok);
    }
    out
}

struct RawNode {
    var: String,
    var_pos: usize,
    concept: String,
    edges: Vec<(String, usize, RawTarget)>,
}

enum RawTarget {
    Node(RawNode),
    Quoted(String),
    Symbol(String, usize),
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError::at(self.text, offset, kind)
    }

    fn end_offset(&self) -> usize {
        self.text.len()
    }

    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(self.end_offset(), ParseErrorKind::UnexpectedEnd))?;
        self.pos += 1;
        Ok(t)
    }

    fn node(&mut self) -> Result<RawNode, ParseError> {
        let (open, open_pos) = self.next()?;
        if open != Tok::Open {
            return Err(self.err(open_pos, ParseErrorKind::UnexpectedToken(open.text())));
        }
        let (var, var_pos) = match self.next()? {
            (Tok::Symbol(s), p) => (s, p),
            (t, p) => return Err(self.err(p, ParseErrorKind::UnexpectedToken(t.text()))),
        };
        match self.next()? {
            (Tok::Slash, _) => {}
            (_, p) => return Err(self.err(p, ParseErrorKind::MissingConcept)),
        }
        let concept = match self.peek() {
            Some((Tok::Symbol(s), _)) => {
                let s = s.clone();
                self.pos += 1;
                s
            }
            Some((_, p)) => return Err(self.err(*p, ParseErrorKind::MissingConcept)),
            None => return Err(self.err(self.end_offset(), ParseErrorKind::MissingConcept)),
        };
        let mut edges = Vec::new();
        loop {
            match self.peek().cloned() {
                Some((Tok::Close, _)) => {
                    self.pos += 1;
                    break;
                }
                Some((Tok::Role(role), role_pos)) => {
                    self.pos += 1;
                    let target = match self.peek().cloned() {
                        Some((Tok::Open, _)) => RawTarget::Node(self.node()?),
                        Some((Tok::Quoted(q), _)) => {
                            self.pos += 1;
                            RawTarget::Quoted(q)
                        }
                        Some((Tok::Symbol(s), p)) => {
                            self.pos += 1;
                            RawTarget::Symbol(s, p)
                        }
                        Some((_, p)) => return Err(self.err(p, ParseErrorKind::MissingTarget(role))),
                        None => return Err(self.err(self.end_offset(), ParseErrorKind::UnbalancedParenthesis)),
                    };
                    edges.push((role, role_pos, target));
                }
                Some((t, p)) => return Err(self.err(p, ParseErrorKind::UnexpectedToken(t.text()))),
                None => return Err(self.err(self.end_offset(), ParseErrorKind::UnbalancedParenthesis)),
            }
        }
        Ok(RawNode { var, var_pos, concept, edges })
    }
}

/// Bare tokens shaped like AMR variables (`b`, `z12`, `p2`) that are never
/// declared are reported as errors rather than read as constants.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

/// Parses a single Penman graph.
///
/// A bare target token is a variable iff it is declared with `/ concept`
/// somewhere in the same graph; otherwise it is a constant. Exact duplicate
/// relations are collapsed with a warning.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { text, toks, pos: 0 };
    let root = p.node()?;
    if let Some((t, pos)) = p.peek() {
        let kind = if *t == Tok::Close {
            ParseErrorKind::UnbalancedParenthesis
        } else {
            ParseErrorKind::TrailingInput(t.text())
        };
        return Err(p.err(*pos, kind));
    }

    let mut declared: HashSet<String> = HashSet::new();
    let mut stack = vec![&root];
    while let Some(node) = stack.pop() {
        if !declared.insert(node.var.clone()) {
            return Err(p.err(node.var_pos, ParseErrorKind::DuplicateVariable(node.var.clone())));
        }
        for (_, _, t) in node.edges.iter().rev() {
            if let RawTarget::Node(n) = t {
                stack.push(n);
            }
        }
    }

    let invalid = |pos: usize, e: GraphError| ParseError::at(text, pos, ParseErrorKind::Invalid(e));
    let mut instances = Vec::new();
    let mut relations = Vec::new();
    let mut attributes = Vec::new();
    let mut seen_rel = HashSet::new();
    let mut stack = vec![&root];
    while let Some(node) = stack.pop() {
        let var = Variable::new(node.var.as_str()).map_err(|e| invalid(node.var_pos, e))?;
        let concept = Concept::new(node.concept.as_str()).map_err(|e| invalid(node.var_pos, e))?;
        instances.push((var.clone(), concept));
        for (role, role_pos, target) in &node.edges {
            let role = Role::new(role.as_str()).map_err(|e| invalid(*role_pos, e))?;
            match target {
                RawTarget::Node(child) => {
                    let target = Variable::new(child.var.as_str()).map_err(|e| invalid(child.var_pos, e))?;
                    relations.push(Relation { source: var.clone(), role, target });
                }
                RawTarget::Symbol(s, pos) if declared.contains(s) => {
                    let target = Variable::new(s.as_str()).map_err(|e| invalid(*pos, e))?;
                    let rel = Relation { source: var.clone(), role, target };
                    if !seen_rel.insert(rel.clone()) {
                        log::warn!("collapsing duplicate relation ({} {} {})", rel.source, rel.role, rel.target);
                    }
                    relations.push(rel);
                }
                RawTarget::Symbol(s, pos) if looks_like_variable(s) => {
                    return Err(p.err(*pos, ParseErrorKind::UndeclaredVariable(s.clone())));
                }
                RawTarget::Symbol(s, pos) => {
                    let value = Constant::new(s.as_str()).map_err(|e| invalid(*pos, e))?;
                    attributes.push(Attribute { source: var.clone(), role, value });
                }
                RawTarget::Quoted(q) => {
                    let value = Constant::new(q.as_str()).map_err(|e| invalid(*role_pos, e))?;
                    attributes.push(Attribute { source: var.clone(), role, value });
                }
            }
        }
        for (_, _, t) in node.edges.iter().rev() {
            if let RawTarget::Node(n) = t {
                stack.push(n);
            }
        }
    }
    // nodes are visited in document order; each node's edges keep their textual order
    let root_var = instances[0].0.clone();
    AmrGraph::new(root_var, instances, relations, attributes).map_err(|e| invalid(0, e))
}

struct Piece {
    text: String,
    newline_depth: Option<usize>,
}

fn emit(graph: &AmrGraph) -> Vec<Piece> {
    let mut kids: HashMap<&Variable, Vec<&Relation>> = HashMap::new();
    for r in graph.relations() {
        kids.entry(&r.source).or_default().push(r);
    }
    let mut attrs: HashMap<&Variable, Vec<&Attribute>> = HashMap::new();
    for a in graph.attributes() {
        attrs.entry(&a.source).or_default().push(a);
    }
    let mut emitter = Emitter { graph, kids, attrs, declared: HashSet::new(), out: Vec::new() };
    emitter.node(graph.root(), 0);
    emitter.out
}

struct Emitter<'g> {
    graph: &'g AmrGraph,
    kids: HashMap<&'g Variable, Vec<&'g Relation>>,
    attrs: HashMap<&'g Variable, Vec<&'g Attribute>>,
    declared: HashSet<&'g Variable>,
    out: Vec<Piece>,
}

impl<'g> Emitter<'g> {
    fn push(&mut self, text: &str, newline_depth: Option<usize>) {
        self.out.push(Piece { text: text.to_string(), newline_depth });
    }

    fn node(&mut self, var: &'g Variable, depth: usize) {
        self.declared.insert(var);
        self.push("(", None);
        self.push(var.as_str(), None);
        self.push("/", None);
        self.push(self.graph.concept(var).expect("checked invariant").as_str(), None);
        let graph_attrs = self.attrs.get(var).cloned().unwrap_or_default();
        for a in graph_attrs {
            self.push(a.role.as_str(), Some(depth + 1));
            self.push(a.value.as_str(), None);
        }
        let rels = self.kids.get(var).cloned().unwrap_or_default();
        for r in rels {
            self.push(r.role.as_str(), Some(depth + 1));
            if self.declared.contains(&r.target) {
                self.push(r.target.as_str(), None);
            } else {
                self.node(&r.target, depth + 1);
            }
        }
        self.push(")", None);
    }
}

/// Writes a graph in indented Penman notation.
///
/// The spanning tree is the depth-first traversal from the root with
/// attributes listed before relations and relations in stored order;
/// revisited variables are written bare.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    let mut out = String::new();
    let mut prev: Option<String> = None;
    for p in emit(graph) {
        if let Some(d) = p.newline_depth {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', 4 * d));
        } else if let Some(prev) = &prev {
            if prev != "(" && p.text != ")" {
                out.push(' ');
            }
        }
        out.push_str(&p.text);
        prev = Some(p.text);
    }
    out
}

/// The token sequence of the serialized graph.
pub fn linearize(graph: &AmrGraph) -> Vec<String> {
    emit(graph).into_iter().map(|p| p.text).collect()
}
