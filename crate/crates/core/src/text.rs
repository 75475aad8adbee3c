//! The line-oriented `.ucdf` format.
//!
//! ```text
//! ucdf 1
//! // free text
//! process main "main()"
//! process A
//! holder stack a "a" content "5"
//! timeline t1 on main start
//! t1 1 => A
//! A w> a
//! in main: a
//! ```
//!
//! One fact per line. Parsing stops at the first malformed line. Node
//! attributes are an in-memory annotation and are not written.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    is_valid_ident, Diagram, EdgeId, EdgeKind, Endpoint, HolderKind, Marker, ModelError, NodeId,
    NodeKind, NodeSpec, OrderMark, TimelineOwner, TimelineSpec,
};

pub const HEADER: &str = "ucdf 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    fn new(span: SourceSpan, expected: impl Into<String>, found: impl Into<String>) -> Self {
        ParseError {
            span,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: expected {}, found {}",
            self.span.line, self.span.column, self.expected, self.found
        )
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Int(u32),
    Str(String),
    Op(&'static str),
    Colon,
    Comma,
    At,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(_) => "string".into(),
            Tok::Op(o) => format!("{o:?}"),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::At => "'@'".into(),
        }
    }
}

const WORD_OPS: [(&str, &str); 6] = [
    ("w", "w>"),
    ("r", "r>"),
    ("x", "x>"),
    ("e", "e>"),
    ("has", "has>"),
    ("is", "is>"),
];

const SYMBOL_OPS: [&str; 8] = ["=>>", "=>", "->", "+>", "~~", "*>", "#>", "%>"];

fn op_kind(op: &str) -> Option<EdgeKind> {
    Some(match op {
        "->" => EdgeKind::DataFlow,
        "w>" => EdgeKind::DataUpdate,
        "r>" => EdgeKind::DataRead,
        "+>" => EdgeKind::Create,
        "x>" => EdgeKind::Destroy,
        "=>" => EdgeKind::ControlPar,
        "=>>" => EdgeKind::ControlReturn,
        "e>" => EdgeKind::ExceptionCtl,
        "has>" => EdgeKind::Has,
        "is>" => EdgeKind::Is,
        "~~" => EdgeKind::Alias(1),
        "*>" => EdgeKind::Ref,
        "#>" => EdgeKind::CommentAttach,
        "%>" => EdgeKind::Gate,
        _ => return None,
    })
}

fn kind_op(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::DataFlow => "->",
        EdgeKind::DataUpdate => "w>",
        EdgeKind::DataRead => "r>",
        EdgeKind::Create => "+>",
        EdgeKind::Destroy => "x>",
        EdgeKind::ControlPar => "=>",
        EdgeKind::ControlReturn => "=>>",
        EdgeKind::ExceptionCtl => "e>",
        EdgeKind::Has => "has>",
        EdgeKind::Is => "is>",
        EdgeKind::Alias(_) => "~~",
        EdgeKind::Ref => "*>",
        EdgeKind::CommentAttach => "#>",
        EdgeKind::Gate => "%>",
    }
}

fn lex_line(line: &str, line_no: u32) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let span = |start: usize, end: usize| SourceSpan {
        line: line_no,
        column: start as u32 + 1,
        length: (end - start) as u32,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == ' ' || c == '\t' || c == '\r' {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '>' {
                if let Some((_, op)) = WORD_OPS.iter().find(|(w, _)| *w == word) {
                    i += 1;
                    out.push((Tok::Op(op), span(start, i)));
                    continue;
                }
            }
            out.push((Tok::Word(word), span(start, i)));
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<u32>()
                .map_err(|_| ParseError::new(span(start, i), "integer below 2^32", text.clone()))?;
            out.push((Tok::Int(n), span(start, i)));
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => {
                        return Err(ParseError::new(span(start, i), "closing '\"'", "end of line"))
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = chars.get(i + 1).copied();
                        match esc {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            other => {
                                let found = other.map_or_else(|| "end of line".to_string(), |c| format!("'\\{c}'"));
                                return Err(ParseError::new(
                                    span(i, (i + 2).min(chars.len())),
                                    "escape \\\" \\\\ or \\n",
                                    found,
                                ));
                            }
                        }
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            out.push((Tok::Str(s), span(start, i)));
        } else if c == ':' {
            i += 1;
            out.push((Tok::Colon, span(start, i)));
        } else if c == ',' {
            i += 1;
            out.push((Tok::Comma, span(start, i)));
        } else if c == '@' {
            i += 1;
            out.push((Tok::At, span(start, i)));
        } else {
            let rest: String = chars[i..].iter().collect();
            match SYMBOL_OPS.iter().find(|op| rest.starts_with(**op)) {
                Some(op) => {
                    i += op.chars().count();
                    out.push((Tok::Op(op), span(start, i)));
                }
                None => {
                    return Err(ParseError::new(span(start, start + 1), "token", format!("{c:?}")));
                }
            }
        }
    }
    Ok(out)
}

struct Line {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    end: SourceSpan,
}

impl Line {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn found(&self) -> String {
        self.peek().map_or_else(|| "end of line".into(), Tok::describe)
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::new(self.span(), expected, self.found())
    }

    fn next(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            Some(Tok::Word(w)) if is_valid_ident(w) => {
                let (tok, span) = self.next().unwrap();
                match tok {
                    Tok::Word(w) => Ok((w, span)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err("identifier")),
        }
    }

    fn int(&mut self) -> Result<(u32, SourceSpan), ParseError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                let span = self.span();
                self.pos += 1;
                Ok((n, span))
            }
            _ => Err(self.err("integer")),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("string")),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            Err(self.err("end of line"))
        } else {
            Ok(())
        }
    }
}

fn model_err(span: SourceSpan, e: ModelError) -> ParseError {
    match e {
        ModelError::DuplicateIdent(id) => ParseError::new(span, "unique identifier", format!("duplicate {id:?}")),
        ModelError::NonIncreasingRank { rank, last, .. } => {
            ParseError::new(span, format!("rank above {last}"), format!("rank {rank}"))
        }
        ModelError::OwnerNotProcessLike(_) => {
            ParseError::new(span, "process-like timeline owner", "non-process node")
        }
        other => ParseError::new(span, "well-formed element", other.to_string()),
    }
}

enum PendingDst {
    Ready(Endpoint),
    EdgeIndex(u32, SourceSpan),
}

/// Parses `.ucdf` text. Elements get ids in declaration order; the
/// diagram is not validated.
pub fn parse(text: &str) -> Result<Diagram, ParseError> {
    let mut d = Diagram::new();
    let mut idents: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut pending: Vec<(EdgeKind, NodeId, PendingDst)> = Vec::new();
    let mut seen_header = false;

    if text.trim().is_empty() {
        return Ok(d);
    }

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx as u32 + 1;
        let trimmed = raw.trim_start_matches([' ', '\t']);
        let lead = (raw.chars().count() - trimmed.chars().count()) as u32;
        if !seen_header {
            let toks = lex_line(raw, line_no)?;
            let end = SourceSpan { line: line_no, column: raw.chars().count() as u32 + 1, length: 0 };
            let mut l = Line { toks, pos: 0, end };
            if !l.keyword("ucdf") {
                return Err(l.err("header \"ucdf 1\""));
            }
            let (v, span) = l.int()?;
            if v != 1 {
                return Err(ParseError::new(span, "format version 1", format!("version {v}")));
            }
            l.finish()?;
            seen_header = true;
            continue;
        }
        if trimmed.trim_end_matches(['\r', ' ', '\t']).is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("//") {
            d.push_remark(rest.trim().to_string());
            continue;
        }
        let toks = lex_line(raw, line_no)?;
        let end = SourceSpan { line: line_no, column: raw.chars().count() as u32 + 1, length: 0 };
        let mut l = Line { toks, pos: 0, end };
        let first_span = l.span();
        let _ = lead;

        let first = match l.peek() {
            Some(Tok::Word(w)) => w.clone(),
            _ => return Err(l.err("declaration")),
        };
        let node_kind = match first.as_str() {
            "process" => Some(NodeKind::Process),
            "module" => Some(NodeKind::Module),
            "decision" => Some(NodeKind::Decision),
            "orjoin" => Some(NodeKind::OrJoin),
            "human" => Some(NodeKind::HumanAction),
            "note" => Some(NodeKind::Comment),
            "mark" => Some(NodeKind::Mark),
            "holder" => None,
            _ => {
                parse_other(&mut d, &mut l, &idents, &mut pending, &first)?;
                continue;
            }
        };
        l.pos += 1;
        let kind = match node_kind {
            Some(k) => k,
            None => {
                let span = l.span();
                let word = match l.peek() {
                    Some(Tok::Word(w)) => w.clone(),
                    _ => return Err(l.err("holder kind")),
                };
                let hk = HolderKind::from_keyword(&word)
                    .ok_or_else(|| ParseError::new(span, "holder kind", format!("{word:?}")))?;
                l.pos += 1;
                NodeKind::Holder(hk)
            }
        };
        let (ident, ispan) = l.ident()?;
        let mut spec = NodeSpec::new(kind).ident(ident.clone());
        if let Some(Tok::Str(_)) = l.peek() {
            spec = spec.name(l.string()?);
        }
        if l.keyword("content") {
            spec = spec.content(l.string()?);
        }
        let ap_span = l.span();
        if l.keyword("asprocess") {
            if kind != NodeKind::Holder(HolderKind::Document) {
                return Err(ParseError::new(ap_span, "end of line (asprocess is for documents)", "\"asprocess\""));
            }
            spec = spec.as_process();
        }
        l.finish()?;
        let id = d.add_node(spec).map_err(|e| model_err(ispan, e))?;
        idents.insert(ident, id);
        let _ = first_span;
    }

    // edges are added in file order; `edge N` may point forward
    let total = pending.len() as u32;
    for (kind, src, dst) in pending {
        let dst = match dst {
            PendingDst::Ready(ep) => ep,
            PendingDst::EdgeIndex(n, span) => {
                if n == 0 || n > total {
                    return Err(ParseError::new(span, format!("edge number 1..={total}"), format!("edge {n}")));
                }
                Endpoint::EdgeRef(EdgeId(n))
            }
        };
        d.insert_edge_unchecked(kind, src, dst);
    }
    Ok(d)
}

fn lookup_node(
    idents: &BTreeMap<String, NodeId>,
    name: &str,
    span: SourceSpan,
) -> Result<NodeId, ParseError> {
    idents
        .get(name)
        .copied()
        .ok_or_else(|| ParseError::new(span, "declared node", format!("undeclared {name:?}")))
}

fn parse_other(
    d: &mut Diagram,
    l: &mut Line,
    idents: &BTreeMap<String, NodeId>,
    pending: &mut Vec<(EdgeKind, NodeId, PendingDst)>,
    first: &str,
) -> Result<(), ParseError> {
    match first {
        "timeline" => {
            l.pos += 1;
            let (ident, ispan) = l.ident()?;
            let mut spec = if l.keyword("on") {
                let (owner, ospan) = l.ident()?;
                TimelineSpec::on(lookup_node(idents, &owner, ospan)?)
            } else if l.keyword("root") {
                let label = match l.peek() {
                    Some(Tok::Str(_)) => Some(l.string()?),
                    _ => None,
                };
                TimelineSpec::root(label.as_deref())
            } else {
                return Err(l.err("\"on\" or \"root\""));
            };
            spec = spec.ident(ident);
            loop {
                let m = match l.peek() {
                    Some(Tok::Word(w)) => Marker::ALL.into_iter().find(|m| m.keyword() == w),
                    _ => None,
                };
                match m {
                    Some(m) => {
                        l.pos += 1;
                        spec = spec.marker(m);
                    }
                    None => break,
                }
            }
            l.finish()?;
            d.add_timeline(spec).map_err(|e| model_err(ispan, e))?;
            Ok(())
        }
        "in" => {
            l.pos += 1;
            let (parent, pspan) = l.ident()?;
            let parent = lookup_node(idents, &parent, pspan)?;
            l.expect(Tok::Colon, "':'")?;
            loop {
                let (child, cspan) = l.ident()?;
                let child = lookup_node(idents, &child, cspan)?;
                d.set_euler_parent(child, parent).map_err(|_| {
                    ParseError::new(cspan, "node without a container", "node already contained")
                })?;
                if l.peek() == Some(&Tok::Comma) {
                    l.pos += 1;
                } else {
                    break;
                }
            }
            l.finish()
        }
        _ => {
            let (src, sspan) = l.ident()?;
            if let Some(Tok::Int(_)) = l.peek() {
                // dispatch: timeline rank[@label] => target
                let tl = d
                    .timeline_by_ident(&src)
                    .map(|t| t.id())
                    .ok_or_else(|| ParseError::new(sspan, "declared timeline", format!("undeclared {src:?}")))?;
                let (rank, rspan) = l.int()?;
                let mark = if l.peek() == Some(&Tok::At) {
                    l.pos += 1;
                    let label_span = l.span();
                    let label = l.string()?;
                    if label.is_empty() {
                        return Err(ParseError::new(label_span, "non-empty mark label", "\"\""));
                    }
                    OrderMark::labeled(rank, label)
                } else {
                    OrderMark::new(rank)
                };
                l.expect(Tok::Op("=>"), "\"=>\"")?;
                let (target, tspan) = l.ident()?;
                let target = lookup_node(idents, &target, tspan)?;
                l.finish()?;
                if rank == 0 {
                    return Err(ParseError::new(rspan, "rank of at least 1", "rank 0"));
                }
                d.append_dispatch(tl, mark, target).map_err(|e| model_err(rspan, e))?;
                return Ok(());
            }
            let src = lookup_node(idents, &src, sspan)?;
            let op_span = l.span();
            let mut kind = match l.peek() {
                Some(Tok::Op(op)) => op_kind(op).ok_or_else(|| l.err("edge operator"))?,
                _ => return Err(l.err("edge operator or rank")),
            };
            l.pos += 1;
            let dst = if l.keyword("edge") {
                let (n, nspan) = l.int()?;
                PendingDst::EdgeIndex(n, nspan)
            } else {
                let (name, nspan) = l.ident()?;
                if l.peek() == Some(&Tok::Colon) {
                    l.pos += 1;
                    let (rank, _) = l.int()?;
                    let tl = d
                        .timeline_by_ident(&name)
                        .map(|t| t.id())
                        .ok_or_else(|| ParseError::new(nspan, "declared timeline", format!("undeclared {name:?}")))?;
                    PendingDst::Ready(Endpoint::TimelinePos(tl, rank))
                } else {
                    PendingDst::Ready(Endpoint::Node(lookup_node(idents, &name, nspan)?))
                }
            };
            if matches!(kind, EdgeKind::Alias(_)) {
                if l.keyword("x") {
                    let (n, _) = l.int()?;
                    kind = EdgeKind::Alias(n);
                }
            } else if matches!(l.peek(), Some(Tok::Word(w)) if w == "x") {
                return Err(ParseError::new(l.span(), "end of line (counts are for aliases)", "\"x\""));
            }
            l.finish()?;
            if kind == EdgeKind::ControlPar {
                if let PendingDst::Ready(Endpoint::TimelinePos(..)) = dst {
                    return Err(ParseError::new(op_span, "\"=>>\" for a return to a timeline position", "\"=>\""));
                }
            }
            pending.push((kind, src, dst));
            Ok(())
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical sort key of an edge: kind, source, destination. Edge
/// references sort by the key of the edge they point at.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum DstKey {
    Node(u32),
    Pos(u32, u32),
    Edge(Box<EdgeKey>),
    Cycle(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct EdgeKey(EdgeKind, u32, DstKey);

fn edge_key(d: &Diagram, id: EdgeId, stack: &mut Vec<EdgeId>) -> EdgeKey {
    let e = &d.edges[&id];
    stack.push(id);
    let dst = match e.dst {
        Endpoint::Node(n) => DstKey::Node(n.0),
        Endpoint::TimelinePos(t, r) => DstKey::Pos(t.0, r),
        Endpoint::EdgeRef(t) => {
            if stack.contains(&t) || !d.edges.contains_key(&t) {
                DstKey::Cycle(t.0)
            } else {
                DstKey::Edge(Box::new(edge_key(d, t, stack)))
            }
        }
    };
    stack.pop();
    EdgeKey(e.kind, e.src.0, dst)
}

fn sorted_edges(d: &Diagram) -> Vec<(EdgeKey, EdgeId)> {
    let mut v: Vec<(EdgeKey, EdgeId)> = d
        .edges
        .keys()
        .map(|id| (edge_key(d, *id, &mut Vec::new()), *id))
        .collect();
    v.sort();
    v
}

/// Canonical text: header, remarks, nodes by id, timelines by id with
/// their dispatches, edges by (kind, source, destination), containment.
pub fn serialize(d: &Diagram) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in &d.remarks {
        if r.is_empty() {
            out.push_str("//\n");
        } else {
            out.push_str("// ");
            out.push_str(r);
            out.push('\n');
        }
    }
    for n in d.nodes.values() {
        out.push_str(&n.kind.keyword());
        out.push(' ');
        out.push_str(&n.ident);
        if let Some(name) = &n.name {
            out.push(' ');
            out.push_str(&quote(name));
        }
        if let Some(content) = &n.content {
            out.push_str(" content ");
            out.push_str(&quote(content));
        }
        if n.as_process {
            out.push_str(" asprocess");
        }
        out.push('\n');
    }
    let node_ident = |n: NodeId| d.nodes.get(&n).map_or_else(|| n.to_string(), |n| n.ident.clone());
    for t in d.timelines.values() {
        out.push_str("timeline ");
        out.push_str(&t.ident);
        match &t.owner {
            TimelineOwner::Node(o) => {
                out.push_str(" on ");
                out.push_str(&node_ident(*o));
            }
            TimelineOwner::Root(label) => {
                out.push_str(" root");
                if let Some(l) = label {
                    out.push(' ');
                    out.push_str(&quote(l));
                }
            }
        }
        for m in &t.markers {
            out.push(' ');
            out.push_str(m.keyword());
        }
        out.push('\n');
        for dsp in &t.dispatches {
            out.push_str(&format!("{} {}", t.ident, dsp.mark.rank));
            if !dsp.mark.has_default_label() {
                out.push('@');
                out.push_str(&quote(&dsp.mark.label));
            }
            out.push_str(" => ");
            out.push_str(&node_ident(dsp.target));
            out.push('\n');
        }
    }
    let order = sorted_edges(d);
    let position: BTreeMap<EdgeId, usize> = order
        .iter()
        .enumerate()
        .map(|(i, (_, id))| (*id, i + 1))
        .collect();
    for (_, id) in &order {
        let e = &d.edges[id];
        out.push_str(&node_ident(e.src));
        out.push(' ');
        out.push_str(kind_op(e.kind));
        out.push(' ');
        match e.dst {
            Endpoint::Node(n) => out.push_str(&node_ident(n)),
            Endpoint::TimelinePos(t, r) => {
                let name = d.timelines.get(&t).map_or_else(|| t.to_string(), |t| t.ident.clone());
                out.push_str(&format!("{name}:{r}"));
            }
            Endpoint::EdgeRef(t) => {
                let n = position.get(&t).copied().unwrap_or(0);
                out.push_str(&format!("edge {n}"));
            }
        }
        if let EdgeKind::Alias(count) = e.kind {
            out.push_str(&format!(" x {count}"));
        }
        out.push('\n');
    }
    let mut groups: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (child, parent) in &d.euler {
        groups.entry(*parent).or_default().push(*child);
    }
    for (parent, children) in groups {
        out.push_str("in ");
        out.push_str(&node_ident(parent));
        out.push(':');
        for (i, c) in children.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            out.push_str(&node_ident(*c));
        }
        out.push('\n');
    }
    out
}

/// `serialize(parse(text))`.
pub fn canonicalize(text: &str) -> Result<String, ParseError> {
    parse(text).map(|d| serialize(&d))
}

/// Equality of everything the text format carries. Edges compare by
/// content (kind, endpoints, and for edge references the content of the
/// referenced edge), since edge numbers in the text are positions.
pub fn structurally_equal(a: &Diagram, b: &Diagram) -> bool {
    let nodes_eq = a.nodes.len() == b.nodes.len()
        && a.nodes.values().zip(b.nodes.values()).all(|(x, y)| {
            x.id == y.id
                && x.kind == y.kind
                && x.ident == y.ident
                && x.name == y.name
                && x.content == y.content
                && x.as_process == y.as_process
        });
    let keys = |d: &Diagram| -> Vec<EdgeKey> { sorted_edges(d).into_iter().map(|(k, _)| k).collect() };
    nodes_eq
        && a.timelines == b.timelines
        && a.euler == b.euler
        && a.remarks == b.remarks
        && keys(a) == keys(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{validate, RuleCode};

    #[test]
    fn parallel_processes() {
        let d = parse("ucdf 1\nprocess A\nprocess B\nA => B\n").unwrap();
        assert_eq!(d.node_count(), 2);
        let e = d.edges().next().unwrap();
        assert_eq!(e.kind, EdgeKind::ControlPar);
        assert!(validate(&d).is_empty());
    }

    #[test]
    fn empty_text_is_empty_diagram() {
        assert!(parse("").unwrap().is_empty());
        assert_eq!(serialize(&Diagram::new()), "ucdf 1\n");
    }

    #[test]
    fn dispatch_to_holder_parses_then_fails_validation() {
        let d = parse("ucdf 1\nholder stack a\ntimeline t1 root\nt1 1 => a\n").unwrap();
        let v = validate(&d);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule_code, RuleCode::Ctl01);
    }

    #[test]
    fn errors_point_into_the_offending_token() {
        let e = parse("ucdf 1\nprocess A\nA w> B\n").unwrap_err();
        assert_eq!(e.span.line, 3);
        assert_eq!(e.span.column, 6);
        assert_eq!(e.span.length, 1);
        let e = parse("ucdf 1\nprocess A\nprocess A\n").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (3, 9));
        let e = parse("process A\n").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (1, 1));
        let e = parse("ucdf 1\nprocess A \"open\n").unwrap_err();
        assert_eq!(e.span.column, 11);
    }

    #[test]
    fn strings_escape_round_trip() {
        let src = "ucdf 1\nholder document d \"a \\\"b\\\" \\\\ c\\nd\" content \"x\" asprocess\n";
        let d = parse(src).unwrap();
        let n = d.node_by_ident("d").unwrap();
        assert_eq!(n.name(), Some("a \"b\" \\ c\nd"));
        assert!(n.as_process());
        assert_eq!(serialize(&d), src);
    }

    #[test]
    fn canonical_ordering() {
        let shuffled = "ucdf 1\n\nprocess A\nholder stack x\nA w> x\n// note one\nx r> A\nA -> x\n";
        let canon = canonicalize(shuffled).unwrap();
        assert_eq!(
            canon,
            "ucdf 1\n// note one\nprocess A\nholder stack x\nA w> x\nx r> A\nA -> x\n"
        );
        assert_eq!(canonicalize(&canon).unwrap(), canon);
    }

    #[test]
    fn gates_may_point_forward() {
        let src = "ucdf 1\nprocess G\nprocess A\nholder stack x\nG %> edge 2\nA w> x\n";
        let d = parse(src).unwrap();
        let canon = serialize(&d);
        assert_eq!(canon, "ucdf 1\nprocess G\nprocess A\nholder stack x\nA w> x\nG %> edge 1\n");
        assert!(structurally_equal(&parse(&canon).unwrap(), &d));
        assert!(validate(&d).is_empty());
    }

    #[test]
    fn timelines_marks_and_containment() {
        let src = "ucdf 1\nprocess main\nprocess A\nprocess g\ntimeline t1 on main start done\nt1 1 => A\nt1 2@\"12:00\" => g\ng =>> t1:1\nin main: A, g\n";
        let d = parse(src).unwrap();
        assert_eq!(serialize(&d), src);
        let t = d.timeline_by_ident("t1").unwrap();
        assert_eq!(t.dispatches()[1].mark.label, "12:00");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse("ucdf 2\n").is_err());
        assert!(parse("ucdf 1\nprocess A\nA -> A x 2\n").is_err());
        assert!(parse("ucdf 1\nholder static s asprocess\n").is_err());
        assert!(parse("ucdf 1\nprocess A\ntimeline t on A\nt 2 => A\nt 1 => A\n").is_err());
        assert!(parse("ucdf 1\nprocess A\nA %> edge 3\n").is_err());
        assert!(parse("ucdf 1\nprocess A\nprocess A2\nA ~~ A2 x 2 3\n").is_err());
    }
}
