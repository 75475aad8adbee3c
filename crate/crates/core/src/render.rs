//! DOT and SVG output.
//!
//! Both emitters are pure functions of the diagram and a [`StyleTable`].
//! Order marks are drawn as small squares chained along their timeline,
//! so a returning line has something to point at.
//!
//! The style table has a line-oriented `key = value` text form:
//!
//! ```text
//! # comments and blank lines are ignored
//! node.process.shape = box
//! node.holder.stack.border = dashed
//! node.holder.const.underline = true
//! edge.update.head = open
//! edge.alias.label = {count}
//! ```

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::model::{Diagram, EdgeId, EdgeKind, Endpoint, HolderKind, NodeId, NodeKind, TimelineId, TimelineOwner};
use crate::validate::{validate, Violation};

pub const MARGIN: i32 = 20;
pub const CELL: i32 = 120;
pub const ROW: i32 = 80;
/// Side of an order-mark square.
pub const MARK: i32 = 20;
const NODE_W: i32 = 96;
const NODE_H: i32 = 40;

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $var:ident = $kw:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
        pub enum $name { $($(#[$vm])* $var),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn keyword(self) -> &'static str {
                match self { $($name::$var => $kw),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                Self::ALL.iter().copied().find(|v| v.keyword() == s)
            }
        }
    };
}

keyword_enum!(Shape {
    Box = "box",
    /// Box with doubled left and right borders.
    DoubleBox = "doublebox",
    Rhombus = "rhombus",
    SmallBox = "smallbox",
    WavyBox = "wavybox",
    Text = "text",
    Ellipse = "ellipse",
    DoubleEllipse = "doubleellipse",
    SmallEllipse = "smallellipse",
    Folder = "folder",
    /// Rectangle with a wavy bottom edge.
    WavyRect = "wavyrect",
});

keyword_enum!(Border {
    Solid = "solid",
    Dashed = "dashed",
    Dotted = "dotted",
    Double = "double",
});

keyword_enum!(Line {
    Solid = "solid",
    Dashed = "dashed",
    Dotted = "dotted",
    DotDash = "dotdash",
});

keyword_enum!(Head {
    None = "none",
    Normal = "normal",
    Open = "open",
    Both = "both",
    Dot = "dot",
});

keyword_enum!(Route {
    Straight = "straight",
    Orthogonal = "orthogonal",
    Angled = "angled",
    Curved = "curved",
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStyle {
    pub shape: Shape,
    pub border: Border,
    /// Fill colour, or `none`.
    pub fill: String,
    pub underline: bool,
    /// Text shown before the node's label.
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStyle {
    pub line: Line,
    pub thick: bool,
    pub head: Head,
    pub route: Route,
    /// Label template; `{count}` stands for an alias count.
    pub label: String,
}

/// Keys for the two timeline-only edge styles: the chain linking order
/// marks and the arrow from a mark to the process it dispatches.
pub const TIMELINE_KEY: &str = "timeline";
pub const DISPATCH_KEY: &str = "dispatch";
/// Key for the order-mark square node style.
pub const ORDER_MARK_KEY: &str = "ordermark";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleTable {
    nodes: BTreeMap<String, NodeStyle>,
    edges: BTreeMap<String, EdgeStyle>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for StyleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "style line {}: {}", self.line, self.message)
    }
}

impl core::error::Error for StyleError {}

fn node_style(shape: Shape, border: Border) -> NodeStyle {
    NodeStyle {
        shape,
        border,
        fill: String::from("none"),
        underline: false,
        prefix: String::new(),
    }
}

fn edge_style(line: Line, thick: bool, head: Head, route: Route, label: &str) -> EdgeStyle {
    EdgeStyle {
        line,
        thick,
        head,
        route,
        label: String::from(label),
    }
}

impl Default for StyleTable {
    fn default() -> Self {
        use Border as B;
        use Shape as S;
        let mut nodes = BTreeMap::new();
        let mut put = |k: NodeKind, s: NodeStyle| {
            nodes.insert(k.style_key(), s);
        };
        put(NodeKind::Process, node_style(S::Box, B::Solid));
        put(NodeKind::Module, node_style(S::DoubleBox, B::Solid));
        put(NodeKind::Decision, node_style(S::Rhombus, B::Solid));
        put(
            NodeKind::OrJoin,
            NodeStyle {
                prefix: String::from("OR"),
                ..node_style(S::SmallBox, B::Solid)
            },
        );
        put(
            NodeKind::HumanAction,
            NodeStyle {
                prefix: String::from("\u{2630}"),
                ..node_style(S::WavyBox, B::Solid)
            },
        );
        put(NodeKind::Comment, node_style(S::Box, B::Dashed));
        put(
            NodeKind::Mark,
            NodeStyle {
                prefix: String::from("\u{2605}"),
                ..node_style(S::Text, B::Solid)
            },
        );
        for h in HolderKind::ALL {
            let s = match h {
                HolderKind::Static => node_style(S::Ellipse, B::Solid),
                HolderKind::Stack => node_style(S::Ellipse, B::Dashed),
                HolderKind::Heap => node_style(S::Ellipse, B::Dotted),
                HolderKind::Register => node_style(S::DoubleEllipse, B::Solid),
                HolderKind::File => node_style(S::Folder, B::Solid),
                HolderKind::Document => node_style(S::WavyRect, B::Solid),
                HolderKind::Collection => node_style(S::Ellipse, B::Double),
                HolderKind::Address => node_style(S::SmallEllipse, B::Solid),
                HolderKind::Constant => NodeStyle {
                    underline: true,
                    ..node_style(S::Ellipse, B::Solid)
                },
            };
            put(NodeKind::Holder(h), s);
        }
        nodes.insert(String::from(ORDER_MARK_KEY), node_style(S::SmallBox, B::Solid));

        use Head as H;
        use Line as L;
        use Route as R;
        let mut edges = BTreeMap::new();
        let mut put = |k: &str, s: EdgeStyle| {
            edges.insert(String::from(k), s);
        };
        for k in [EdgeKind::DataUpdate, EdgeKind::DataRead, EdgeKind::DataFlow] {
            put(k.style_key(), edge_style(L::Solid, false, H::Open, R::Straight, ""));
        }
        put("create", edge_style(L::Solid, false, H::Open, R::Straight, "+"));
        put("destroy", edge_style(L::Solid, false, H::Open, R::Straight, "\u{d7}"));
        put("par", edge_style(L::Solid, true, H::Normal, R::Straight, ""));
        put("return", edge_style(L::Solid, true, H::Both, R::Straight, ""));
        put("exception", edge_style(L::Dashed, true, H::Normal, R::Straight, ""));
        put("has", edge_style(L::Solid, false, H::Normal, R::Orthogonal, ""));
        put("is", edge_style(L::Solid, false, H::None, R::Angled, "is"));
        put("alias", edge_style(L::DotDash, false, H::None, R::Straight, "{count}"));
        put("ref", edge_style(L::Dotted, false, H::Normal, R::Curved, ""));
        put("comment", edge_style(L::Solid, false, H::Dot, R::Angled, ""));
        put("gate", edge_style(L::Solid, false, H::Normal, R::Straight, ""));
        put(TIMELINE_KEY, edge_style(L::Solid, true, H::None, R::Straight, ""));
        put(DISPATCH_KEY, edge_style(L::Solid, true, H::Normal, R::Straight, ""));
        StyleTable { nodes, edges }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

impl StyleTable {
    pub fn node(&self, kind: NodeKind) -> &NodeStyle {
        &self.nodes[&kind.style_key()]
    }

    pub fn order_mark(&self) -> &NodeStyle {
        &self.nodes[ORDER_MARK_KEY]
    }

    pub fn edge(&self, kind: EdgeKind) -> &EdgeStyle {
        &self.edges[kind.style_key()]
    }

    pub fn timeline(&self) -> &EdgeStyle {
        &self.edges[TIMELINE_KEY]
    }

    pub fn dispatch(&self) -> &EdgeStyle {
        &self.edges[DISPATCH_KEY]
    }

    /// The defaults with the assignments in `text` applied on top.
    pub fn parse(text: &str) -> Result<Self, StyleError> {
        let mut t = StyleTable::default();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| StyleError { line: i + 1, message };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let (target, field) = key
                .rsplit_once('.')
                .ok_or_else(|| err(format!("key `{key}` has no field")))?;
            let bad = || err(format!("bad value `{value}` for `{key}`"));
            if let Some(k) = target.strip_prefix("node.") {
                let s = t.nodes.get_mut(k).ok_or_else(|| err(format!("unknown node kind `{k}`")))?;
                match field {
                    "shape" => s.shape = Shape::parse(value).ok_or_else(bad)?,
                    "border" => s.border = Border::parse(value).ok_or_else(bad)?,
                    "fill" => s.fill = String::from(value),
                    "underline" => s.underline = parse_bool(value).ok_or_else(bad)?,
                    "prefix" => s.prefix = String::from(value),
                    _ => return Err(err(format!("unknown node field `{field}`"))),
                }
            } else if let Some(k) = target.strip_prefix("edge.") {
                let s = t.edges.get_mut(k).ok_or_else(|| err(format!("unknown edge kind `{k}`")))?;
                match field {
                    "line" => s.line = Line::parse(value).ok_or_else(bad)?,
                    "thick" => s.thick = parse_bool(value).ok_or_else(bad)?,
                    "head" => s.head = Head::parse(value).ok_or_else(bad)?,
                    "route" => s.route = Route::parse(value).ok_or_else(bad)?,
                    "label" => s.label = String::from(value),
                    _ => return Err(err(format!("unknown edge field `{field}`"))),
                }
            } else {
                return Err(err(format!("key `{key}` must start with `node.` or `edge.`")));
            }
        }
        Ok(t)
    }

    /// Every entry in the text form; parsing it gives the same table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, s) in &self.nodes {
            let _ = writeln!(out, "node.{k}.shape = {}", s.shape.keyword());
            let _ = writeln!(out, "node.{k}.border = {}", s.border.keyword());
            let _ = writeln!(out, "node.{k}.fill = {}", s.fill);
            let _ = writeln!(out, "node.{k}.underline = {}", s.underline);
            let _ = writeln!(out, "node.{k}.prefix = {}", s.prefix);
        }
        for (k, s) in &self.edges {
            let _ = writeln!(out, "edge.{k}.line = {}", s.line.keyword());
            let _ = writeln!(out, "edge.{k}.thick = {}", s.thick);
            let _ = writeln!(out, "edge.{k}.head = {}", s.head.keyword());
            let _ = writeln!(out, "edge.{k}.route = {}", s.route.keyword());
            let _ = writeln!(out, "edge.{k}.label = {}", s.label);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenderError {
    /// The diagram breaks validation rules; pass `force` to draw it anyway.
    Invalid(Vec<Violation>),
}

impl fmt::Display for RenderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderError::Invalid(v) => write!(f, "diagram has {} violation(s)", v.len()),
        }
    }
}

impl core::error::Error for RenderError {}

fn check(d: &Diagram, force: bool) -> Result<(), RenderError> {
    if force {
        return Ok(());
    }
    let v = validate(d);
    if v.is_empty() {
        Ok(())
    } else {
        Err(RenderError::Invalid(v))
    }
}

fn edge_label(style: &EdgeStyle, kind: EdgeKind) -> String {
    match kind {
        EdgeKind::Alias(n) => style.label.replace("{count}", &n.to_string()),
        _ => style.label.clone(),
    }
}

/// Prefix, then the name (or the identifier when there is neither a
/// name nor content), then the content on its own line.
fn node_text(d: &Diagram, n: NodeId, style: &StyleTable) -> String {
    let node = d.node(n).expect("node");
    let s = style.node(node.kind());
    if node.kind() == NodeKind::OrJoin {
        return s.prefix.clone();
    }
    let mut lines: Vec<&str> = Vec::new();
    match (node.name(), node.content()) {
        (Some(name), Some(c)) if name == c => lines.push(name),
        (Some(name), Some(c)) => lines.extend([name, c]),
        (Some(name), None) => lines.push(name),
        (None, Some(c)) => lines.push(c),
        (None, None) => lines.push(node.ident()),
    }
    let text = lines.join("\n");
    if s.prefix.is_empty() {
        text
    } else {
        format!("{} {text}", s.prefix)
    }
}

/// Order-mark positions that need a drawn square: every dispatch, plus
/// the end of a timeline when a returning line points there.
fn mark_positions(d: &Diagram) -> BTreeMap<TimelineId, BTreeSet<u32>> {
    let mut out: BTreeMap<TimelineId, BTreeSet<u32>> = BTreeMap::new();
    for t in d.timelines() {
        out.entry(t.id())
            .or_default()
            .extend(t.dispatches().iter().map(|x| x.mark.rank));
    }
    for e in d.edges() {
        if let Endpoint::TimelinePos(t, r) = e.dst {
            out.entry(t).or_default().insert(r);
        }
    }
    out
}

fn gated_edges(d: &Diagram) -> BTreeSet<EdgeId> {
    d.edges()
        .filter_map(|e| match e.dst {
            Endpoint::EdgeRef(t) => Some(t),
            _ => None,
        })
        .collect()
}

// ---- DOT

fn dot_quote(s: &str) -> String {
    let mut out = String::from("\"");
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

fn dot_node_attrs(s: &NodeStyle) -> String {
    let (shape, mut peripheries, extra) = match s.shape {
        Shape::Box => ("box", 1, ""),
        Shape::DoubleBox => ("box", 2, ""),
        Shape::Rhombus => ("diamond", 1, ""),
        Shape::SmallBox => ("box", 1, ", width=0.3, height=0.3, fixedsize=true"),
        Shape::WavyBox => ("box", 1, ""),
        Shape::Text => ("plaintext", 0, ""),
        Shape::Ellipse => ("ellipse", 1, ""),
        Shape::DoubleEllipse => ("ellipse", 2, ""),
        Shape::SmallEllipse => ("ellipse", 1, ", width=0.6, height=0.3"),
        Shape::Folder => ("folder", 1, ""),
        Shape::WavyRect => ("note", 1, ""),
    };
    let mut styles = Vec::new();
    match s.border {
        Border::Solid => styles.push("solid"),
        Border::Dashed => styles.push("dashed"),
        Border::Dotted => styles.push("dotted"),
        Border::Double => {
            styles.push("solid");
            peripheries = 2;
        }
    }
    let mut out = format!("shape={shape}{extra}");
    if s.fill != "none" {
        styles.push("filled");
        let _ = write!(out, ", fillcolor={}", dot_quote(&s.fill));
    }
    let _ = write!(out, ", style={}", dot_quote(&styles.join(",")));
    if peripheries != 1 {
        let _ = write!(out, ", peripheries={peripheries}");
    }
    out
}

fn dot_edge_attrs(s: &EdgeStyle, label: &str) -> String {
    let style = match s.line {
        Line::Solid => "solid",
        Line::Dashed | Line::DotDash => "dashed",
        Line::Dotted => "dotted",
    };
    let mut out = format!("style={style}, penwidth={}", if s.thick { 2.5 } else { 1.0 });
    match s.head {
        Head::None => out.push_str(", arrowhead=none"),
        Head::Normal => out.push_str(", arrowhead=normal"),
        Head::Open => out.push_str(", arrowhead=vee"),
        Head::Both => out.push_str(", dir=both, arrowhead=normal, arrowtail=normal"),
        Head::Dot => out.push_str(", arrowhead=dot"),
    }
    if !label.is_empty() {
        let _ = write!(out, ", label={}", dot_quote(label));
    }
    out
}

fn dot_id(d: &Diagram, n: NodeId) -> String {
    dot_quote(d.node(n).map_or("?", |x| x.ident()))
}

fn dot_mark_id(d: &Diagram, t: TimelineId, r: u32) -> String {
    dot_quote(&format!("{}:{r}", d.timeline(t).map_or("?", |x| x.ident())))
}

/// Graphviz text for a diagram. Euler containment becomes nested
/// clusters; timelines become chains of order-mark squares.
pub fn emit_dot(d: &Diagram, style: &StyleTable, force: bool) -> Result<String, RenderError> {
    check(d, force)?;
    let mut out = String::from("digraph ucdf {\n");
    out.push_str("  graph [rankdir=TB, fontname=\"Helvetica\"];\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\"];\n");

    // euler clusters, parents before children
    let euler = d.euler();
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (c, p) in euler {
        children.entry(*p).or_default().push(*c);
    }
    fn emit_node(d: &Diagram, n: NodeId, style: &StyleTable, depth: usize, children: &BTreeMap<NodeId, Vec<NodeId>>, out: &mut String) {
        let pad = "  ".repeat(depth);
        let node = d.node(n).expect("node");
        let s = style.node(node.kind());
        let mut attrs = dot_node_attrs(s);
        if s.underline {
            attrs.push_str(", fontname=\"Helvetica-Oblique\"");
        }
        let _ = writeln!(out, "{pad}{} [label={}, {attrs}];", dot_id(d, n), dot_quote(&node_text(d, n, style)));
        if let Some(kids) = children.get(&n) {
            let _ = writeln!(out, "{pad}subgraph {} {{", dot_quote(&format!("cluster_{}", node.ident())));
            let _ = writeln!(out, "{pad}  label={};", dot_quote(node.label()));
            for &k in kids {
                emit_node(d, k, style, depth + 1, children, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
    }
    for n in d.nodes() {
        if !euler.contains_key(&n.id()) {
            emit_node(d, n.id(), style, 1, &children, &mut out);
        }
    }

    // timelines
    let positions = mark_positions(d);
    let mark_style = dot_node_attrs(style.order_mark());
    let chain = dot_edge_attrs(style.timeline(), "");
    let dispatch = dot_edge_attrs(style.dispatch(), "");
    for t in d.timelines() {
        let head = match t.owner() {
            TimelineOwner::Node(o) => dot_id(d, *o),
            TimelineOwner::Root(label) => {
                let id = dot_quote(&format!("{}:root", t.ident()));
                let text = label.clone().unwrap_or_default();
                let _ = writeln!(out, "  {id} [label={}, shape=plaintext];", dot_quote(&text));
                id
            }
        };
        let mut prev = head;
        if !t.markers().is_empty() {
            let text: Vec<&str> = t.markers().iter().map(|m| m.keyword()).collect();
            let _ = writeln!(out, "  // {}: {}", t.ident(), text.join(" "));
        }
        let ranks = positions.get(&t.id()).cloned().unwrap_or_default();
        for r in ranks {
            let label = t
                .dispatches()
                .iter()
                .find(|x| x.mark.rank == r)
                .map_or(String::new(), |x| x.mark.label.clone());
            let id = dot_mark_id(d, t.id(), r);
            let _ = writeln!(out, "  {id} [label={}, {mark_style}];", dot_quote(&label));
            let _ = writeln!(out, "  {prev} -> {id} [{chain}];");
            prev = id;
        }
        for x in t.dispatches() {
            let _ = writeln!(out, "  {} -> {} [{dispatch}];", dot_mark_id(d, t.id(), x.mark.rank), dot_id(d, x.target));
        }
    }

    // edges; a gated edge goes through a midpoint the gate can reach
    let gated = gated_edges(d);
    for e in d.edges() {
        let s = style.edge(e.kind);
        let attrs = dot_edge_attrs(s, &edge_label(s, e.kind));
        let src = dot_id(d, e.src);
        let dst = match e.dst {
            Endpoint::Node(n) => dot_id(d, n),
            Endpoint::TimelinePos(t, r) => dot_mark_id(d, t, r),
            Endpoint::EdgeRef(t) => dot_quote(&format!("edge{}:mid", t.0)),
        };
        if gated.contains(&e.id) {
            let mid = dot_quote(&format!("edge{}:mid", e.id.0));
            let _ = writeln!(out, "  {mid} [shape=point, width=0.05];");
            let _ = writeln!(out, "  {src} -> {mid} [{}, arrowhead=none];", dot_edge_attrs(s, ""));
            let _ = writeln!(out, "  {mid} -> {dst} [{attrs}];");
        } else {
            let _ = writeln!(out, "  {src} -> {dst} [{attrs}];");
        }
    }
    out.push_str("}\n");
    Ok(out)
}

// ---- SVG

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    x: i32,
    y: i32,
}

/// Grid layout. Each timeline gets a band of three rows: its owner, its
/// order marks at `x = MARGIN + rank * CELL`, and the targets it is the
/// first to dispatch. Holders sit next to their container, anything
/// left over goes into a final band.
struct Layout {
    nodes: BTreeMap<NodeId, Pos>,
    marks: BTreeMap<(TimelineId, u32), Pos>,
    roots: BTreeMap<TimelineId, Pos>,
    width: i32,
    height: i32,
}

fn container(d: &Diagram, n: NodeId) -> Option<NodeId> {
    d.euler().get(&n).copied().or_else(|| {
        d.edges()
            .find(|e| e.kind == EdgeKind::Has && e.dst == Endpoint::Node(n))
            .map(|e| e.src)
    })
}

fn layout(d: &Diagram, widths: &BTreeMap<NodeId, i32>) -> Layout {
    let mut l = Layout {
        nodes: BTreeMap::new(),
        marks: BTreeMap::new(),
        roots: BTreeMap::new(),
        width: 2 * MARGIN + CELL,
        height: 2 * MARGIN + ROW,
    };
    let positions = mark_positions(d);
    let mut band = 0;
    for t in d.timelines() {
        let top = MARGIN + band * 3 * ROW + NODE_H / 2;
        band += 1;
        match t.owner_node() {
            Some(o) => {
                l.nodes.entry(o).or_insert(Pos { x: MARGIN + NODE_W / 2, y: top });
            }
            None => {
                l.roots.insert(t.id(), Pos { x: MARGIN + NODE_W / 2, y: top });
            }
        }
        for r in positions.get(&t.id()).cloned().unwrap_or_default() {
            l.marks.insert((t.id(), r), Pos { x: MARGIN + r as i32 * CELL, y: top + ROW });
        }
        for x in t.dispatches() {
            let at = Pos {
                x: MARGIN + x.mark.rank as i32 * CELL + MARK / 2,
                y: top + 2 * ROW,
            };
            l.nodes.entry(x.target).or_insert(at);
        }
    }
    // contained nodes next to their container; a few passes settle
    // chains like collection -> element
    for _ in 0..4 {
        let mut used: BTreeMap<NodeId, i32> = BTreeMap::new();
        for n in d.nodes() {
            if l.nodes.contains_key(&n.id()) {
                continue;
            }
            let Some((c, at)) = container(d, n.id()).and_then(|c| l.nodes.get(&c).map(|p| (c, *p))) else {
                continue;
            };
            let k = used.entry(c).or_insert(0);
            *k += 1;
            l.nodes.insert(n.id(), Pos { x: at.x + *k * (CELL * 3 / 4), y: at.y + ROW / 2 });
        }
    }
    // anything left: rows packed by width
    let (mut x, mut y) = (MARGIN, MARGIN + band * 3 * ROW + NODE_H / 2);
    for n in d.nodes() {
        if l.nodes.contains_key(&n.id()) {
            continue;
        }
        let w = widths.get(&n.id()).copied().unwrap_or(NODE_W);
        if x > MARGIN && x + w > MARGIN + 8 * CELL {
            x = MARGIN;
            y += ROW;
        }
        l.nodes.insert(n.id(), Pos { x: x + NODE_W / 2, y });
        x += w + CELL / 4;
    }
    let all = l
        .nodes
        .values()
        .chain(l.marks.values())
        .chain(l.roots.values())
        .copied();
    for p in all {
        l.width = l.width.max(p.x + CELL + MARGIN);
        l.height = l.height.max(p.y + ROW / 2 + MARGIN);
    }
    l
}

fn xml(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn dash(b: Border) -> &'static str {
    match b {
        Border::Dashed => " stroke-dasharray=\"6 3\"",
        Border::Dotted => " stroke-dasharray=\"2 3\"",
        Border::Solid | Border::Double => "",
    }
}

fn line_dash(l: Line) -> &'static str {
    match l {
        Line::Solid => "",
        Line::Dashed => " stroke-dasharray=\"8 4\"",
        Line::Dotted => " stroke-dasharray=\"2 3\"",
        Line::DotDash => " stroke-dasharray=\"8 3 2 3\"",
    }
}

/// Box width that fits the longest label line at the 11px font size.
fn node_width(text: &str) -> i32 {
    let longest = text.lines().map(|l| l.chars().count()).max().unwrap_or(0) as i32;
    NODE_W.max(longest * 7 + 16)
}

fn svg_shape(out: &mut String, s: &NodeStyle, p: Pos, text: &str, small: bool) {
    let (w, h) = if small { (MARK, MARK) } else { (node_width(text), NODE_H) };
    // wide boxes grow to the right of their grid slot
    let p = if small { p } else { Pos { x: p.x - NODE_W / 2 + w / 2, y: p.y } };
    let (x0, y0) = (p.x - w / 2, p.y - h / 2);
    let stroke = format!(" fill=\"{}\" stroke=\"black\"{}", if s.fill == "none" { "white" } else { &s.fill }, dash(s.border));
    let ellipse = |out: &mut String, rx: i32, ry: i32| {
        let _ = writeln!(out, "<ellipse cx=\"{}\" cy=\"{}\" rx=\"{rx}\" ry=\"{ry}\"{stroke}/>", p.x, p.y);
    };
    match s.shape {
        Shape::Box | Shape::SmallBox => {
            let _ = writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{w}\" height=\"{h}\"{stroke}/>");
        }
        Shape::DoubleBox => {
            let _ = writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{w}\" height=\"{h}\"{stroke}/>");
            for x in [x0 + 4, x0 + w - 4] {
                let _ = writeln!(out, "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>", y0 + h);
            }
        }
        Shape::Rhombus => {
            let _ = writeln!(
                out,
                "<polygon points=\"{},{y0} {},{} {},{} {x0},{}\"{stroke}/>",
                p.x,
                x0 + w,
                p.y,
                p.x,
                y0 + h,
                p.y
            );
        }
        Shape::WavyBox | Shape::WavyRect => {
            let q = w / 4;
            let _ = writeln!(
                out,
                "<path d=\"M {x0} {y0} H {} V {} Q {} {} {} {} T {x0} {} Z\"{stroke}/>",
                x0 + w,
                y0 + h,
                x0 + w - q,
                y0 + h + 8,
                p.x,
                y0 + h,
                y0 + h
            );
        }
        Shape::Folder => {
            let _ = writeln!(
                out,
                "<path d=\"M {x0} {} H {} L {} {y0} H {} L {} {} H {} V {} H {x0} Z\"{stroke}/>",
                y0 + 6,
                x0 + 10,
                x0 + 16,
                x0 + 36,
                x0 + 42,
                y0 + 6,
                x0 + w,
                y0 + h
            );
        }
        Shape::Text => {}
        Shape::Ellipse => {
            ellipse(out, w / 2, h / 2);
            if s.border == Border::Double {
                ellipse(out, w / 2 - 3, h / 2 - 3);
            }
        }
        Shape::DoubleEllipse => {
            ellipse(out, w / 2, h / 2);
            ellipse(out, w / 2 - 6, h / 2 - 6);
        }
        Shape::SmallEllipse => ellipse(out, w / 4, h / 3),
    }
    let deco = if s.underline { " text-decoration=\"underline\"" } else { "" };
    for (i, line) in text.lines().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"{}\"{deco}>{}</text>",
            p.x,
            p.y + 4 + i as i32 * 12,
            if small { 10 } else { 11 },
            xml(line)
        );
    }
}

fn svg_line(out: &mut String, s: &EdgeStyle, a: Pos, b: Pos, label: &str) {
    let (x1, y1, x2, y2) = (a.x, a.y, b.x, b.y);
    let d = match s.route {
        Route::Straight => format!("M {x1} {y1} L {x2} {y2}"),
        Route::Orthogonal => format!("M {x1} {y1} V {y2} H {x2}"),
        Route::Angled => format!("M {x1} {y1} L {} {y1} L {x2} {y2}", (x1 + x2) / 2),
        Route::Curved => format!("M {x1} {y1} Q {} {} {x2} {y2}", (x1 + x2) / 2 + 20, (y1 + y2) / 2 - 20),
    };
    let head = match s.head {
        Head::None => "",
        Head::Normal => " marker-end=\"url(#head)\"",
        Head::Open => " marker-end=\"url(#open)\"",
        Head::Both => " marker-start=\"url(#head)\" marker-end=\"url(#head)\"",
        Head::Dot => " marker-end=\"url(#dot)\"",
    };
    let _ = writeln!(
        out,
        "<path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"{}{head}/>",
        if s.thick { "2.5" } else { "1" },
        line_dash(s.line)
    );
    if !label.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>",
            (x1 + x2) / 2,
            (y1 + y2) / 2 - 4,
            xml(label)
        );
    }
}

/// Self-contained SVG on a fixed grid (see [`MARGIN`], [`CELL`], [`ROW`]).
/// Shapes may overlap; the layout only promises to be deterministic.
pub fn emit_svg(d: &Diagram, style: &StyleTable, force: bool) -> Result<String, RenderError> {
    check(d, force)?;
    let widths: BTreeMap<NodeId, i32> = d
        .nodes()
        .map(|n| (n.id(), node_width(&node_text(d, n.id(), style))))
        .collect();
    let mut l = layout(d, &widths);
    for (n, w) in &widths {
        l.width = l.width.max(l.nodes[n].x - NODE_W / 2 + w + MARGIN);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"Helvetica, sans-serif\">",
        w = l.width,
        h = l.height
    );
    out.push_str("<defs>\n");
    out.push_str("<marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerUnits=\"userSpaceOnUse\" markerWidth=\"10\" markerHeight=\"10\" orient=\"auto-start-reverse\"><path d=\"M 0 0 L 10 5 L 0 10 Z\"/></marker>\n");
    out.push_str("<marker id=\"open\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerUnits=\"userSpaceOnUse\" markerWidth=\"10\" markerHeight=\"10\" orient=\"auto\"><path d=\"M 0 0 L 10 5 L 0 10\" fill=\"none\" stroke=\"black\"/></marker>\n");
    out.push_str("<marker id=\"dot\" viewBox=\"0 0 10 10\" refX=\"5\" refY=\"5\" markerUnits=\"userSpaceOnUse\" markerWidth=\"7\" markerHeight=\"7\"><circle cx=\"5\" cy=\"5\" r=\"4\"/></marker>\n");
    out.push_str("</defs>\n");

    // euler containers behind everything
    let mut members: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (c, p) in d.euler() {
        members.entry(*p).or_default().push(*c);
    }
    for (p, kids) in &members {
        let pts: Vec<Pos> = core::iter::once(p).chain(kids.iter()).filter_map(|n| l.nodes.get(n).copied()).collect();
        if pts.is_empty() {
            continue;
        }
        let x0 = pts.iter().map(|q| q.x).min().unwrap_or(0) - NODE_W / 2 - 8;
        let y0 = pts.iter().map(|q| q.y).min().unwrap_or(0) - NODE_H / 2 - 8;
        let x1 = pts.iter().map(|q| q.x).max().unwrap_or(0) + NODE_W / 2 + 8;
        let y1 = pts.iter().map(|q| q.y).max().unwrap_or(0) + NODE_H / 2 + 8;
        let _ = writeln!(
            out,
            "<rect class=\"euler\" x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" rx=\"16\" fill=\"none\" stroke=\"gray\"/>",
            x1 - x0,
            y1 - y0
        );
    }

    // timelines
    for t in d.timelines() {
        let head = match t.owner_node() {
            Some(o) => l.nodes[&o],
            None => {
                let p = l.roots[&t.id()];
                let text = match t.owner() {
                    TimelineOwner::Root(Some(s)) => s.clone(),
                    _ => String::new(),
                };
                let _ = writeln!(out, "<text class=\"root\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>", p.x, p.y, xml(&text));
                p
            }
        };
        let mut prev = Pos { x: head.x, y: head.y + NODE_H / 2 };
        let mut ranks: Vec<u32> = l.marks.keys().filter(|(id, _)| *id == t.id()).map(|(_, r)| *r).collect();
        ranks.sort_unstable();
        for r in &ranks {
            let p = l.marks[&(t.id(), *r)];
            let center = Pos { x: p.x + MARK / 2, y: p.y };
            svg_line(&mut out, style.timeline(), prev, Pos { x: p.x, y: p.y }, "");
            prev = Pos { x: p.x + MARK, y: p.y };
            let _ = center;
        }
        for m in t.markers() {
            let _ = writeln!(out, "<text class=\"marker\" x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>", prev.x + 4, prev.y + 4, m.keyword());
            prev.x += 30;
        }
        for r in &ranks {
            let p = l.marks[&(t.id(), *r)];
            let label = t
                .dispatches()
                .iter()
                .find(|x| x.mark.rank == *r)
                .map_or(String::new(), |x| x.mark.label.clone());
            let s = style.order_mark();
            let _ = writeln!(
                out,
                "<rect class=\"mark\" x=\"{}\" y=\"{}\" width=\"{MARK}\" height=\"{MARK}\" fill=\"white\" stroke=\"black\"{}/>",
                p.x,
                p.y - MARK / 2,
                dash(s.border)
            );
            let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>", p.x + MARK / 2, p.y + 4, xml(&label));
        }
        for x in t.dispatches() {
            let p = l.marks[&(t.id(), x.mark.rank)];
            let target = l.nodes[&x.target];
            svg_line(
                &mut out,
                style.dispatch(),
                Pos { x: p.x + MARK / 2, y: p.y + MARK / 2 },
                Pos { x: target.x, y: target.y - NODE_H / 2 },
                "",
            );
        }
    }

    // edges, with midpoints remembered for gates
    let mut mids: BTreeMap<EdgeId, Pos> = BTreeMap::new();
    let node_pos = |n: NodeId| l.nodes.get(&n).copied().unwrap_or(Pos { x: 0, y: 0 });
    for e in d.edges().filter(|e| e.kind != EdgeKind::Gate) {
        let a = node_pos(e.src);
        let b = match e.dst {
            Endpoint::Node(n) => node_pos(n),
            Endpoint::TimelinePos(t, r) => l.marks.get(&(t, r)).map_or(Pos { x: 0, y: 0 }, |p| Pos { x: p.x + MARK / 2, y: p.y - MARK / 2 }),
            Endpoint::EdgeRef(_) => continue,
        };
        mids.insert(e.id, Pos { x: (a.x + b.x) / 2, y: (a.y + b.y) / 2 });
        let s = style.edge(e.kind);
        svg_line(&mut out, s, a, b, &edge_label(s, e.kind));
    }
    for e in d.edges().filter(|e| e.kind == EdgeKind::Gate) {
        let a = node_pos(e.src);
        let b = match e.dst {
            Endpoint::EdgeRef(t) => mids.get(&t).copied().unwrap_or(Pos { x: 0, y: 0 }),
            Endpoint::Node(n) => node_pos(n),
            Endpoint::TimelinePos(..) => continue,
        };
        let s = style.edge(e.kind);
        svg_line(&mut out, s, a, b, &edge_label(s, e.kind));
    }

    // nodes on top
    for n in d.nodes() {
        let p = l.nodes[&n.id()];
        let _ = writeln!(out, "<g class=\"node\" id=\"{}\">", xml(n.ident()));
        svg_shape(&mut out, style.node(n.kind()), p, &node_text(d, n.id(), style), n.kind() == NodeKind::OrJoin);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeSpec, TimelineSpec};
    use crate::text::parse;

    #[test]
    fn style_table_is_total() {
        let s = StyleTable::default();
        for k in NodeKind::all() {
            let _ = s.node(k);
        }
        for k in EdgeKind::ALL {
            let _ = s.edge(k);
        }
        let _ = (s.timeline(), s.dispatch(), s.order_mark());
    }

    #[test]
    fn style_text_round_trips() {
        let s = StyleTable::default();
        assert_eq!(StyleTable::parse(&s.to_text()).unwrap(), s);
        let t = StyleTable::parse("# override\nnode.process.fill = #eeeeff\n\nedge.alias.line = dashed\n").unwrap();
        assert_eq!(t.node(NodeKind::Process).fill, "#eeeeff");
        assert_eq!(t.edge(EdgeKind::Alias(2)).line, Line::Dashed);
    }

    #[test]
    fn style_errors_carry_lines() {
        let e = StyleTable::parse("\nnode.process.shape = blob").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(StyleTable::parse("node.nothing.shape = box").is_err());
        assert!(StyleTable::parse("edge.has.colour = red").is_err());
        assert!(StyleTable::parse("just words").is_err());
        assert!(StyleTable::parse("shape = box").is_err());
    }

    #[test]
    fn empty_diagram() {
        let d = Diagram::new();
        let dot = emit_dot(&d, &StyleTable::default(), false).unwrap();
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 0);
        assert!(dot.starts_with("digraph ucdf {\n") && dot.ends_with("}\n"));
        let svg = emit_svg(&d, &StyleTable::default(), false).unwrap();
        assert!(svg.contains(&format!("width=\"{}\" height=\"{}\"", 2 * MARGIN + CELL, 2 * MARGIN + ROW)));
    }

    #[test]
    fn parallel_processes() {
        let d = parse("ucdf 1\nprocess A\nprocess B\nA => B\n").unwrap();
        let dot = emit_dot(&d, &StyleTable::default(), false).unwrap();
        assert_eq!(dot.lines().filter(|l| l.contains("shape=box")).count(), 2);
        let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edges, ["  \"A\" -> \"B\" [style=solid, penwidth=2.5, arrowhead=normal];"]);
    }

    #[test]
    fn order_marks_advance_by_cell() {
        let mut d = Diagram::new();
        let m = d.add_node(NodeSpec::new(NodeKind::Process).ident("m")).unwrap();
        let t = d.add_timeline(TimelineSpec::on(m).ident("t")).unwrap();
        for i in 0..3 {
            let p = d.add_node(NodeSpec::new(NodeKind::Process).ident(format!("p{i}"))).unwrap();
            d.dispatch_next(t, p).unwrap();
        }
        let svg = emit_svg(&d, &StyleTable::default(), false).unwrap();
        let xs: Vec<i32> = svg
            .lines()
            .filter(|l| l.starts_with("<rect class=\"mark\""))
            .map(|l| l.split("x=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(xs, [MARGIN + CELL, MARGIN + 2 * CELL, MARGIN + 3 * CELL]);
    }

    #[test]
    fn alias_is_dot_dash() {
        let d = parse("ucdf 1\nprocess f\nprocess f2\nf ~~ f2 x 2\n").unwrap();
        let svg = emit_svg(&d, &StyleTable::default(), false).unwrap();
        assert!(svg.contains("stroke-dasharray=\"8 3 2 3\""));
        assert!(svg.contains(">2</text>"));
    }

    #[test]
    fn refuses_invalid_unless_forced() {
        let d = parse("ucdf 1\nholder stack a\nholder stack b\na => b\n").unwrap();
        assert!(matches!(emit_dot(&d, &StyleTable::default(), false), Err(RenderError::Invalid(_))));
        assert!(emit_dot(&d, &StyleTable::default(), true).is_ok());
        assert!(emit_svg(&d, &StyleTable::default(), true).is_ok());
    }

    #[test]
    fn output_is_deterministic() {
        let src = "ucdf 1\nprocess main\nholder stack a \"a\"\ntimeline t on main start\nt 1 => main\nmain w> a\nin main: a\n";
        let d = parse(src).unwrap();
        let s = StyleTable::default();
        assert_eq!(emit_svg(&d, &s, false).unwrap(), emit_svg(&parse(src).unwrap(), &s, false).unwrap());
        assert_eq!(emit_dot(&d, &s, false).unwrap(), emit_dot(&parse(src).unwrap(), &s, false).unwrap());
    }
}
