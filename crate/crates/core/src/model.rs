//! The diagram graph: nodes, edges, timelines and Euler containment.
//!
//! Ids are sequential per element class and never reused, so a diagram
//! built by the same sequence of calls always has the same ids. Edge
//! endpoints are checked for existence when added; whether an endpoint
//! has the right *kind* is left to [`crate::validate`], so broken
//! diagrams can still be represented and reported.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimelineId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for TimelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HolderKind {
    Static,
    Stack,
    Heap,
    Register,
    File,
    Document,
    Collection,
    Address,
    Constant,
}

impl HolderKind {
    pub const ALL: [HolderKind; 9] = [
        HolderKind::Static,
        HolderKind::Stack,
        HolderKind::Heap,
        HolderKind::Register,
        HolderKind::File,
        HolderKind::Document,
        HolderKind::Collection,
        HolderKind::Address,
        HolderKind::Constant,
    ];

    /// Keyword used by the text format and style tables.
    pub fn keyword(self) -> &'static str {
        match self {
            HolderKind::Static => "static",
            HolderKind::Stack => "stack",
            HolderKind::Heap => "heap",
            HolderKind::Register => "register",
            HolderKind::File => "file",
            HolderKind::Document => "document",
            HolderKind::Collection => "collection",
            HolderKind::Address => "address",
            HolderKind::Constant => "const",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Process,
    Module,
    Decision,
    OrJoin,
    HumanAction,
    Comment,
    Mark,
    Holder(HolderKind),
}

impl NodeKind {
    /// Every kind, holders last.
    pub fn all() -> Vec<NodeKind> {
        let mut v = alloc::vec![
            NodeKind::Process,
            NodeKind::Module,
            NodeKind::Decision,
            NodeKind::OrJoin,
            NodeKind::HumanAction,
            NodeKind::Comment,
            NodeKind::Mark,
        ];
        v.extend(HolderKind::ALL.into_iter().map(NodeKind::Holder));
        v
    }

    pub fn is_holder(self) -> bool {
        matches!(self, NodeKind::Holder(_))
    }

    /// Keyword used by the text format (`holder stack`, `process`, ...).
    pub fn keyword(self) -> String {
        match self {
            NodeKind::Process => "process".into(),
            NodeKind::Module => "module".into(),
            NodeKind::Decision => "decision".into(),
            NodeKind::OrJoin => "orjoin".into(),
            NodeKind::HumanAction => "human".into(),
            NodeKind::Comment => "note".into(),
            NodeKind::Mark => "mark".into(),
            NodeKind::Holder(h) => format!("holder {}", h.keyword()),
        }
    }

    /// Short name used in style-table keys: `process`, `holder.stack`.
    pub fn style_key(self) -> String {
        match self {
            NodeKind::Holder(h) => format!("holder.{}", h.keyword()),
            other => other.keyword(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramNode {
    pub(crate) id: NodeId,
    pub(crate) kind: NodeKind,
    pub(crate) ident: String,
    pub(crate) name: Option<String>,
    pub(crate) content: Option<String>,
    pub(crate) as_process: bool,
    pub(crate) attrs: BTreeMap<String, String>,
}

impl DiagramNode {
    pub fn id(&self) -> NodeId {
        self.id
    }
    pub fn kind(&self) -> NodeKind {
        self.kind
    }
    /// The user-facing identifier used by the text format.
    pub fn ident(&self) -> &str {
        &self.ident
    }
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
    pub fn content(&self) -> Option<&str> {
        self.content.as_deref()
    }
    pub fn as_process(&self) -> bool {
        self.as_process
    }
    pub fn attrs(&self) -> &BTreeMap<String, String> {
        &self.attrs
    }
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    /// Processes, modules, decisions, human actions, and documents used as
    /// processes.
    pub fn is_process_like(&self) -> bool {
        match self.kind {
            NodeKind::Process | NodeKind::Module | NodeKind::Decision | NodeKind::HumanAction => {
                true
            }
            NodeKind::Holder(HolderKind::Document) => self.as_process,
            _ => false,
        }
    }

    pub fn is_holder(&self) -> bool {
        self.kind.is_holder()
    }

    /// Display text: name, falling back to the identifier.
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.ident)
    }
}

/// Builder for [`Diagram::add_node`].
#[derive(Debug, Clone)]
pub struct NodeSpec {
    kind: NodeKind,
    ident: Option<String>,
    name: Option<String>,
    content: Option<String>,
    as_process: bool,
    attrs: BTreeMap<String, String>,
}

impl NodeSpec {
    pub fn new(kind: NodeKind) -> Self {
        NodeSpec {
            kind,
            ident: None,
            name: None,
            content: None,
            as_process: false,
            attrs: BTreeMap::new(),
        }
    }

    pub fn holder(kind: HolderKind) -> Self {
        Self::new(NodeKind::Holder(kind))
    }

    pub fn ident(mut self, ident: impl Into<String>) -> Self {
        self.ident = Some(ident.into());
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }

    pub fn as_process(mut self) -> Self {
        self.as_process = true;
        self
    }

    pub fn attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    DataUpdate,
    DataRead,
    DataFlow,
    Create,
    Destroy,
    ControlPar,
    ControlReturn,
    ExceptionCtl,
    Has,
    Is,
    /// Dot-dash link between two shapes of one entity; carries the
    /// number of occurrences.
    Alias(u32),
    Ref,
    CommentAttach,
    Gate,
}

impl EdgeKind {
    /// One representative per variant (`Alias` with count 1).
    pub const ALL: [EdgeKind; 14] = [
        EdgeKind::DataUpdate,
        EdgeKind::DataRead,
        EdgeKind::DataFlow,
        EdgeKind::Create,
        EdgeKind::Destroy,
        EdgeKind::ControlPar,
        EdgeKind::ControlReturn,
        EdgeKind::ExceptionCtl,
        EdgeKind::Has,
        EdgeKind::Is,
        EdgeKind::Alias(1),
        EdgeKind::Ref,
        EdgeKind::CommentAttach,
        EdgeKind::Gate,
    ];

    pub fn is_data(self) -> bool {
        matches!(
            self,
            EdgeKind::DataUpdate | EdgeKind::DataRead | EdgeKind::DataFlow
        )
    }

    /// Short name used in style-table keys.
    pub fn style_key(self) -> &'static str {
        match self {
            EdgeKind::DataUpdate => "update",
            EdgeKind::DataRead => "read",
            EdgeKind::DataFlow => "flow",
            EdgeKind::Create => "create",
            EdgeKind::Destroy => "destroy",
            EdgeKind::ControlPar => "par",
            EdgeKind::ControlReturn => "return",
            EdgeKind::ExceptionCtl => "exception",
            EdgeKind::Has => "has",
            EdgeKind::Is => "is",
            EdgeKind::Alias(_) => "alias",
            EdgeKind::Ref => "ref",
            EdgeKind::CommentAttach => "comment",
            EdgeKind::Gate => "gate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Node(NodeId),
    /// A position on a timeline: an existing rank, or one past the last
    /// rank for the end of the timeline.
    TimelinePos(TimelineId, u32),
    EdgeRef(EdgeId),
}

impl Endpoint {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Endpoint::Node(n) => Some(n),
            _ => None,
        }
    }
}

impl From<NodeId> for Endpoint {
    fn from(n: NodeId) -> Self {
        Endpoint::Node(n)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Node(n) => write!(f, "{n}"),
            Endpoint::TimelinePos(t, r) => write!(f, "{t}:{r}"),
            Endpoint::EdgeRef(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub kind: EdgeKind,
    pub src: NodeId,
    pub dst: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderMark {
    pub rank: u32,
    pub label: String,
}

impl OrderMark {
    pub fn new(rank: u32) -> Self {
        OrderMark {
            rank,
            label: rank.to_string(),
        }
    }

    pub fn labeled(rank: u32, label: impl Into<String>) -> Self {
        OrderMark {
            rank,
            label: label.into(),
        }
    }

    pub fn has_default_label(&self) -> bool {
        self.label == self.rank.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispatch {
    pub mark: OrderMark,
    pub target: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Marker {
    Start,
    Stop,
    Done,
}

impl Marker {
    pub const ALL: [Marker; 3] = [Marker::Start, Marker::Stop, Marker::Done];

    pub fn keyword(self) -> &'static str {
        match self {
            Marker::Start => "start",
            Marker::Stop => "stop",
            Marker::Done => "done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimelineOwner {
    Node(NodeId),
    /// A processor-level timeline with an optional label.
    Root(Option<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    pub(crate) id: TimelineId,
    pub(crate) ident: String,
    pub(crate) owner: TimelineOwner,
    pub(crate) dispatches: Vec<Dispatch>,
    pub(crate) markers: BTreeSet<Marker>,
}

impl Timeline {
    pub fn id(&self) -> TimelineId {
        self.id
    }
    pub fn ident(&self) -> &str {
        &self.ident
    }
    pub fn owner(&self) -> &TimelineOwner {
        &self.owner
    }
    pub fn owner_node(&self) -> Option<NodeId> {
        match self.owner {
            TimelineOwner::Node(n) => Some(n),
            TimelineOwner::Root(_) => None,
        }
    }
    pub fn dispatches(&self) -> &[Dispatch] {
        &self.dispatches
    }
    pub fn markers(&self) -> &BTreeSet<Marker> {
        &self.markers
    }
    pub fn last_rank(&self) -> u32 {
        self.dispatches.last().map_or(0, |d| d.mark.rank)
    }
    /// Whether `rank` names a position on this timeline: an existing
    /// mark, or the end position one past the last mark.
    pub fn has_position(&self, rank: u32) -> bool {
        rank == self.last_rank() + 1 || self.dispatches.iter().any(|d| d.mark.rank == rank)
    }
}

/// Builder for [`Diagram::add_timeline`].
#[derive(Debug, Clone)]
pub struct TimelineSpec {
    ident: Option<String>,
    owner: TimelineOwner,
    markers: BTreeSet<Marker>,
}

impl TimelineSpec {
    pub fn on(owner: NodeId) -> Self {
        TimelineSpec {
            ident: None,
            owner: TimelineOwner::Node(owner),
            markers: BTreeSet::new(),
        }
    }

    pub fn root(label: Option<&str>) -> Self {
        TimelineSpec {
            ident: None,
            owner: TimelineOwner::Root(label.map(String::from)),
            markers: BTreeSet::new(),
        }
    }

    pub fn ident(mut self, ident: impl Into<String>) -> Self {
        self.ident = Some(ident.into());
        self
    }

    pub fn marker(mut self, m: Marker) -> Self {
        self.markers.insert(m);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    AsProcessOnNonDocument(NodeKind),
    InvalidIdent(String),
    DuplicateIdent(String),
    UnknownNode(NodeId),
    UnknownTimeline(TimelineId),
    UnknownEdge(EdgeId),
    OwnerNotProcessLike(NodeId),
    ZeroRank,
    EmptyLabel,
    NonIncreasingRank {
        timeline: TimelineId,
        rank: u32,
        last: u32,
    },
    EulerParentExists(NodeId),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::AsProcessOnNonDocument(k) => {
                write!(f, "asprocess is only allowed on documents, not {}", k.keyword())
            }
            ModelError::InvalidIdent(s) => write!(f, "invalid identifier {s:?}"),
            ModelError::DuplicateIdent(s) => write!(f, "duplicate identifier {s:?}"),
            ModelError::UnknownNode(n) => write!(f, "unknown node {n}"),
            ModelError::UnknownTimeline(t) => write!(f, "unknown timeline {t}"),
            ModelError::UnknownEdge(e) => write!(f, "unknown edge {e}"),
            ModelError::OwnerNotProcessLike(n) => {
                write!(f, "timeline owner {n} is not process-like")
            }
            ModelError::ZeroRank => f.write_str("order mark ranks start at 1"),
            ModelError::EmptyLabel => f.write_str("order mark label is empty"),
            ModelError::NonIncreasingRank {
                timeline,
                rank,
                last,
            } => write!(
                f,
                "rank {rank} on {timeline} does not exceed the previous rank {last}"
            ),
            ModelError::EulerParentExists(n) => {
                write!(f, "{n} already has an Euler container")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Words that cannot be used as identifiers in the text format.
pub const RESERVED_WORDS: &[&str] = &[
    "ucdf", "process", "module", "decision", "orjoin", "human", "note", "mark", "holder",
    "timeline", "in", "edge", "content", "asprocess", "on", "root", "start", "stop", "done",
];

pub fn is_valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !RESERVED_WORDS.contains(&s)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagram {
    pub(crate) nodes: BTreeMap<NodeId, DiagramNode>,
    pub(crate) edges: BTreeMap<EdgeId, Edge>,
    pub(crate) timelines: BTreeMap<TimelineId, Timeline>,
    /// child -> container
    pub(crate) euler: BTreeMap<NodeId, NodeId>,
    /// Free-text `//` lines carried by the text format, in file order.
    pub(crate) remarks: Vec<String>,
    pub(crate) next_node: u32,
    pub(crate) next_edge: u32,
    pub(crate) next_timeline: u32,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty() && self.timelines.is_empty()
    }

    pub fn add_node(&mut self, spec: NodeSpec) -> Result<NodeId, ModelError> {
        if spec.as_process && spec.kind != NodeKind::Holder(HolderKind::Document) {
            return Err(ModelError::AsProcessOnNonDocument(spec.kind));
        }
        let id = NodeId(self.next_node + 1);
        let ident = match spec.ident {
            Some(ident) => {
                if !is_valid_ident(&ident) {
                    return Err(ModelError::InvalidIdent(ident));
                }
                if self.node_by_ident(&ident).is_some() {
                    return Err(ModelError::DuplicateIdent(ident));
                }
                ident
            }
            None => {
                let mut ident = id.to_string();
                while self.node_by_ident(&ident).is_some() {
                    ident.push('_');
                }
                ident
            }
        };
        self.next_node += 1;
        self.nodes.insert(
            id,
            DiagramNode {
                id,
                kind: spec.kind,
                ident,
                name: spec.name,
                content: spec.content,
                as_process: spec.as_process,
                attrs: spec.attrs,
            },
        );
        Ok(id)
    }

    fn check_endpoint(&self, ep: Endpoint) -> Result<(), ModelError> {
        match ep {
            Endpoint::Node(n) => self.check_node(n),
            Endpoint::TimelinePos(t, _) => {
                if self.timelines.contains_key(&t) {
                    Ok(())
                } else {
                    Err(ModelError::UnknownTimeline(t))
                }
            }
            Endpoint::EdgeRef(e) => {
                if self.edges.contains_key(&e) {
                    Ok(())
                } else {
                    Err(ModelError::UnknownEdge(e))
                }
            }
        }
    }

    fn check_node(&self, n: NodeId) -> Result<(), ModelError> {
        if self.nodes.contains_key(&n) {
            Ok(())
        } else {
            Err(ModelError::UnknownNode(n))
        }
    }

    /// Stores an edge. Only existence of the endpoints is checked.
    pub fn add_edge(
        &mut self,
        kind: EdgeKind,
        src: NodeId,
        dst: impl Into<Endpoint>,
    ) -> Result<EdgeId, ModelError> {
        let dst = dst.into();
        self.check_node(src)?;
        self.check_endpoint(dst)?;
        self.next_edge += 1;
        let id = EdgeId(self.next_edge);
        self.edges.insert(id, Edge { id, kind, src, dst });
        Ok(id)
    }

    pub fn add_timeline(&mut self, spec: TimelineSpec) -> Result<TimelineId, ModelError> {
        if let TimelineOwner::Node(owner) = spec.owner {
            let node = self.node(owner).ok_or(ModelError::UnknownNode(owner))?;
            if !node.is_process_like() {
                return Err(ModelError::OwnerNotProcessLike(owner));
            }
        }
        let id = TimelineId(self.next_timeline + 1);
        let ident = match spec.ident {
            Some(ident) => {
                if !is_valid_ident(&ident) {
                    return Err(ModelError::InvalidIdent(ident));
                }
                if self.timeline_by_ident(&ident).is_some() || self.node_by_ident(&ident).is_some()
                {
                    return Err(ModelError::DuplicateIdent(ident));
                }
                ident
            }
            None => {
                let mut ident = id.to_string();
                while self.timeline_by_ident(&ident).is_some() || self.node_by_ident(&ident).is_some()
                {
                    ident.push('_');
                }
                ident
            }
        };
        self.next_timeline += 1;
        self.timelines.insert(
            id,
            Timeline {
                id,
                ident,
                owner: spec.owner,
                dispatches: Vec::new(),
                markers: spec.markers,
            },
        );
        Ok(id)
    }

    pub fn append_dispatch(
        &mut self,
        timeline: TimelineId,
        mark: OrderMark,
        target: NodeId,
    ) -> Result<(), ModelError> {
        self.check_node(target)?;
        if mark.rank == 0 {
            return Err(ModelError::ZeroRank);
        }
        if mark.label.is_empty() {
            return Err(ModelError::EmptyLabel);
        }
        let tl = self
            .timelines
            .get_mut(&timeline)
            .ok_or(ModelError::UnknownTimeline(timeline))?;
        let last = tl.last_rank();
        if mark.rank <= last {
            return Err(ModelError::NonIncreasingRank {
                timeline,
                rank: mark.rank,
                last,
            });
        }
        tl.dispatches.push(Dispatch { mark, target });
        Ok(())
    }

    /// Appends a dispatch at the next rank and returns that rank.
    pub fn dispatch_next(&mut self, timeline: TimelineId, target: NodeId) -> Result<u32, ModelError> {
        let rank = self
            .timelines
            .get(&timeline)
            .ok_or(ModelError::UnknownTimeline(timeline))?
            .last_rank()
            + 1;
        self.append_dispatch(timeline, OrderMark::new(rank), target)?;
        Ok(rank)
    }

    pub fn add_marker(&mut self, timeline: TimelineId, marker: Marker) -> Result<(), ModelError> {
        self.timelines
            .get_mut(&timeline)
            .ok_or(ModelError::UnknownTimeline(timeline))?
            .markers
            .insert(marker);
        Ok(())
    }

    /// Places `child` inside `container` in the Euler containment map.
    /// Cycles are stored and reported by validation.
    pub fn set_euler_parent(&mut self, child: NodeId, container: NodeId) -> Result<(), ModelError> {
        self.check_node(child)?;
        self.check_node(container)?;
        if self.euler.contains_key(&child) {
            return Err(ModelError::EulerParentExists(child));
        }
        self.euler.insert(child, container);
        Ok(())
    }

    pub fn set_attr(
        &mut self,
        node: NodeId,
        key: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<(), ModelError> {
        self.nodes
            .get_mut(&node)
            .ok_or(ModelError::UnknownNode(node))?
            .attrs
            .insert(key.into(), value.into());
        Ok(())
    }

    pub fn push_remark(&mut self, text: impl Into<String>) {
        self.remarks.push(text.into());
    }

    /// Inserts an edge whose edge reference may point forward; used by the
    /// text parser, which resolves `edge N` only after reading every line.
    pub(crate) fn insert_edge_unchecked(&mut self, kind: EdgeKind, src: NodeId, dst: Endpoint) -> EdgeId {
        self.next_edge += 1;
        let id = EdgeId(self.next_edge);
        self.edges.insert(id, Edge { id, kind, src, dst });
        id
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Option<Edge> {
        self.edges.remove(&id)
    }

    /// Removes the dispatch at `index` of a timeline; later ranks keep
    /// their values.
    pub fn remove_dispatch(&mut self, timeline: TimelineId, index: usize) -> Option<Dispatch> {
        let tl = self.timelines.get_mut(&timeline)?;
        if index < tl.dispatches.len() {
            Some(tl.dispatches.remove(index))
        } else {
            None
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&DiagramNode> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn timeline(&self, id: TimelineId) -> Option<&Timeline> {
        self.timelines.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &DiagramNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn timelines(&self) -> impl Iterator<Item = &Timeline> {
        self.timelines.values()
    }

    /// child -> container pairs.
    pub fn euler(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.euler
    }

    pub fn remarks(&self) -> &[String] {
        &self.remarks
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn timeline_count(&self) -> usize {
        self.timelines.len()
    }

    pub fn node_by_ident(&self, ident: &str) -> Option<&DiagramNode> {
        self.nodes.values().find(|n| n.ident == ident)
    }

    pub fn timeline_by_ident(&self, ident: &str) -> Option<&Timeline> {
        self.timelines.values().find(|t| t.ident == ident)
    }

    pub fn timelines_owned_by(&self, owner: NodeId) -> impl Iterator<Item = &Timeline> {
        self.timelines
            .values()
            .filter(move |t| t.owner == TimelineOwner::Node(owner))
    }

    /// Whether any edge of `kind` runs from `src` to `dst`.
    pub fn has_edge(&self, kind: EdgeKind, src: NodeId, dst: Endpoint) -> bool {
        self.edges
            .values()
            .any(|e| e.kind == kind && e.src == src && e.dst == dst)
    }

    /// Adds the edge unless an identical one exists; returns the id either way.
    pub fn add_edge_once(
        &mut self,
        kind: EdgeKind,
        src: NodeId,
        dst: impl Into<Endpoint>,
    ) -> Result<EdgeId, ModelError> {
        let dst = dst.into();
        if let Some(e) = self
            .edges
            .values()
            .find(|e| e.kind == kind && e.src == src && e.dst == dst)
        {
            return Ok(e.id);
        }
        self.add_edge(kind, src, dst)
    }

    /// Human-readable name of an endpoint using identifiers.
    pub fn describe(&self, ep: Endpoint) -> String {
        match ep {
            Endpoint::Node(n) => self
                .node(n)
                .map_or_else(|| n.to_string(), |n| n.ident.clone()),
            Endpoint::TimelinePos(t, r) => {
                let name = self
                    .timeline(t)
                    .map_or_else(|| t.to_string(), |t| t.ident.clone());
                format!("{name}:{r}")
            }
            Endpoint::EdgeRef(e) => format!("edge {}", e.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_diagram_is_empty() {
        let d = Diagram::new();
        assert_eq!(d.node_count(), 0);
        assert_eq!(d.edge_count(), 0);
        assert_eq!(d.timeline_count(), 0);
    }

    #[test]
    fn ids_are_sequential() {
        let mut d = Diagram::new();
        let a = d
            .add_node(NodeSpec::new(NodeKind::Process).name("functionA(arg a)"))
            .unwrap();
        let b = d
            .add_node(NodeSpec::holder(HolderKind::Stack).name("a").content("5"))
            .unwrap();
        assert_eq!(a, NodeId(1));
        assert_eq!(b, NodeId(2));
        assert_eq!(d.node(a).unwrap().ident(), "n1");
        assert_eq!(d.node(b).unwrap().content(), Some("5"));
        assert_eq!(d.node(a).unwrap().kind(), NodeKind::Process);
    }

    #[test]
    fn as_process_only_on_documents() {
        let mut d = Diagram::new();
        let err = d
            .add_node(NodeSpec::holder(HolderKind::Static).as_process())
            .unwrap_err();
        assert_eq!(
            err,
            ModelError::AsProcessOnNonDocument(NodeKind::Holder(HolderKind::Static))
        );
        let doc = d
            .add_node(NodeSpec::holder(HolderKind::Document).as_process())
            .unwrap();
        assert!(d.node(doc).unwrap().is_process_like());
    }

    #[test]
    fn dispatch_ranks_strictly_increase() {
        let mut d = Diagram::new();
        let main = d.add_node(NodeSpec::new(NodeKind::Process)).unwrap();
        let a = d.add_node(NodeSpec::new(NodeKind::Process)).unwrap();
        let b = d.add_node(NodeSpec::new(NodeKind::Process)).unwrap();
        let t = d.add_timeline(TimelineSpec::on(main)).unwrap();
        d.append_dispatch(t, OrderMark::new(1), a).unwrap();
        d.append_dispatch(t, OrderMark::new(2), b).unwrap();
        assert!(matches!(
            d.append_dispatch(t, OrderMark::new(2), b),
            Err(ModelError::NonIncreasingRank { rank: 2, last: 2, .. })
        ));
        let targets: Vec<_> = d.timeline(t).unwrap().dispatches().iter().map(|x| x.target).collect();
        assert_eq!(targets, [a, b]);
    }

    #[test]
    fn timeline_owner_must_be_process_like() {
        let mut d = Diagram::new();
        let h = d.add_node(NodeSpec::holder(HolderKind::Stack)).unwrap();
        assert_eq!(
            d.add_timeline(TimelineSpec::on(h)),
            Err(ModelError::OwnerNotProcessLike(h))
        );
    }

    #[test]
    fn one_callee_on_two_timelines() {
        let mut d = Diagram::new();
        let p = d.add_node(NodeSpec::new(NodeKind::Process).ident("P")).unwrap();
        let q = d.add_node(NodeSpec::new(NodeKind::Process).ident("Q")).unwrap();
        let f = d.add_node(NodeSpec::new(NodeKind::Process).ident("F")).unwrap();
        let tm = d.add_timeline(TimelineSpec::on(p).ident("tM")).unwrap();
        let tn = d.add_timeline(TimelineSpec::on(q).ident("tN")).unwrap();
        d.append_dispatch(tm, OrderMark::labeled(1, "M"), f).unwrap();
        d.append_dispatch(tn, OrderMark::labeled(1, "N"), f).unwrap();
        let incoming = d
            .timelines()
            .flat_map(|t| t.dispatches())
            .filter(|x| x.target == f)
            .count();
        assert_eq!(incoming, 2);
    }

    #[test]
    fn unresolved_endpoints_are_rejected() {
        let mut d = Diagram::new();
        let a = d.add_node(NodeSpec::new(NodeKind::Process)).unwrap();
        assert_eq!(
            d.add_edge(EdgeKind::DataUpdate, a, NodeId(9)),
            Err(ModelError::UnknownNode(NodeId(9)))
        );
        assert_eq!(
            d.add_edge(EdgeKind::ControlReturn, a, Endpoint::TimelinePos(TimelineId(1), 1)),
            Err(ModelError::UnknownTimeline(TimelineId(1)))
        );
        assert_eq!(
            d.add_edge(EdgeKind::Gate, a, Endpoint::EdgeRef(EdgeId(1))),
            Err(ModelError::UnknownEdge(EdgeId(1)))
        );
    }

    #[test]
    fn duplicate_and_reserved_idents() {
        let mut d = Diagram::new();
        d.add_node(NodeSpec::new(NodeKind::Process).ident("A")).unwrap();
        assert_eq!(
            d.add_node(NodeSpec::new(NodeKind::Process).ident("A")),
            Err(ModelError::DuplicateIdent("A".into()))
        );
        assert!(matches!(
            d.add_node(NodeSpec::new(NodeKind::Process).ident("timeline")),
            Err(ModelError::InvalidIdent(_))
        ));
    }
}
