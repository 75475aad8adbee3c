//! Static extraction: resolved Flow-C program to diagram.
//!
//! Every node the extractor creates carries a few attributes that are not
//! part of the text format but let other passes line the diagram up with
//! the program:
//!
//! * `key`: a name for the node that does not depend on granularity or
//!   creation order (`fn:3`, `sym:7`, `stmt:12`, ...), used to compare
//!   diagrams extracted with different options;
//! * `sites`: the program sites (statements, blocks, calls) whose runtime
//!   effects the node accounts for;
//! * `calls` / `jumps`: `site:timeline:rank` triples giving the dispatch
//!   that stands for a call site, and the return position of a `goto`;
//! * `fn`, `sym`: the function a process belongs to, the symbol a holder
//!   stores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::flowc::ast::*;
use crate::flowc::print::{expr_text, signature, stmt_head, type_text};
use crate::flowc::{Span, Storage, SymbolId, SymbolKind, SymbolTable};
use crate::graph::{contract, GraphError};
use crate::model::{
    is_valid_ident, Diagram, EdgeKind, Endpoint, HolderKind, Marker, NodeId, NodeKind, NodeSpec,
    TimelineId, TimelineSpec,
};

pub const ATTR_KEY: &str = "key";
pub const ATTR_SITES: &str = "sites";
pub const ATTR_CALLS: &str = "calls";
pub const ATTR_JUMPS: &str = "jumps";
pub const ATTR_FN: &str = "fn";
pub const ATTR_SYM: &str = "sym";
pub const ATTR_FINGERPRINT: &str = "fingerprint";
pub const ATTR_STRAIGHT: &str = "straight_line";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    /// Every statement is a process.
    #[default]
    Operator,
    /// Functions, blocks, branches, loops and handlers.
    Block,
    /// Functions only.
    Function,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Operator, Granularity::Block, Granularity::Function];

    pub fn keyword(self) -> &'static str {
        match self {
            Granularity::Operator => "op",
            Granularity::Block => "block",
            Granularity::Function => "func",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CallStyle {
    /// Arguments flow straight into parameters.
    #[default]
    Simplified,
    /// Each argument is copied by a process into a slot holder first.
    Full,
}

impl CallStyle {
    pub fn keyword(self) -> &'static str {
        match self {
            CallStyle::Simplified => "simplified",
            CallStyle::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [CallStyle::Simplified, CallStyle::Full].into_iter().find(|c| c.keyword() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    #[default]
    Has,
    Euler,
}

impl Grouping {
    pub fn keyword(self) -> &'static str {
        match self {
            Grouping::Has => "has",
            Grouping::Euler => "euler",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Grouping::Has, Grouping::Euler].into_iter().find(|g| g.keyword() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractOptions {
    pub granularity: Granularity,
    pub call_style: CallStyle,
    pub grouping: Grouping,
    /// `None` disables aliasing; otherwise at least 2.
    pub alias_threshold: Option<u32>,
    /// Entry point; `None` means `main`, falling back to the first
    /// top-level block.
    pub entry: Option<String>,
    /// Name of the module node.
    pub unit_name: String,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            granularity: Granularity::default(),
            call_style: CallStyle::default(),
            grouping: Grouping::default(),
            alias_threshold: None,
            entry: None,
            unit_name: String::from("unit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnresolvedCall {
    pub site: SiteId,
    pub span: Span,
    pub pointer: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub nodes: BTreeMap<String, usize>,
    pub edges: BTreeMap<String, usize>,
    pub timelines: usize,
}

impl ExtractStats {
    pub fn of(d: &Diagram) -> Self {
        let mut s = ExtractStats {
            timelines: d.timeline_count(),
            ..ExtractStats::default()
        };
        for n in d.nodes() {
            *s.nodes.entry(n.kind().keyword()).or_default() += 1;
        }
        for e in d.edges() {
            *s.edges.entry(e.kind.style_key().to_string()).or_default() += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractReport {
    pub diagram: Diagram,
    pub stats: ExtractStats,
    pub unresolved_indirect_calls: Vec<UnresolvedCall>,
    /// No branches, loops, jumps or exceptions, and returns only at the
    /// end of bodies: every statement of a called function runs.
    pub straight_line: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    UnknownEntry(String),
    UnknownProcess(String),
    Graph(GraphError),
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::UnknownEntry(n) => write!(f, "no function or block named `{n}`"),
            ExtractError::UnknownProcess(n) => write!(f, "no process named `{n}`"),
            ExtractError::Graph(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for ExtractError {}

/// Builds the diagram of a resolved program.
pub fn extract(
    program: &Program,
    symbols: &SymbolTable,
    options: &ExtractOptions,
) -> Result<ExtractReport, ExtractError> {
    let entry = match &options.entry {
        Some(n) => Some(symbols.entry(Some(n)).ok_or_else(|| ExtractError::UnknownEntry(n.clone()))?),
        None => symbols.entry(None),
    };
    let mut x = Extractor::new(program, symbols, options);
    x.run(entry);
    let straight_line = is_straight_line(program);
    x.d.set_attr(x.module, ATTR_STRAIGHT, if straight_line { "1" } else { "0" })
        .expect("module");
    let diagram = x.d;
    Ok(ExtractReport {
        stats: ExtractStats::of(&diagram),
        diagram,
        unresolved_indirect_calls: x.unresolved,
        straight_line,
    })
}

/// The compact view of one process: [`contract`] applied to the
/// extracted diagram.
pub fn extract_compact(
    program: &Program,
    symbols: &SymbolTable,
    options: &ExtractOptions,
    process: &str,
) -> Result<Diagram, ExtractError> {
    let report = extract(program, symbols, options)?;
    let node = find_process(&report.diagram, symbols, process)
        .ok_or_else(|| ExtractError::UnknownProcess(String::from(process)))?;
    contract(&report.diagram, node).map_err(ExtractError::Graph)
}

/// A function or block by source name, or any process by identifier.
pub fn find_process(d: &Diagram, symbols: &SymbolTable, name: &str) -> Option<NodeId> {
    let by_symbol = symbols
        .symbols()
        .iter()
        .filter(|s| s.name == name && matches!(s.kind, SymbolKind::Func | SymbolKind::Block))
        .find_map(|s| node_by_key(d, &format!("fn:{}", s.id.0)));
    by_symbol.or_else(|| {
        d.node_by_ident(name)
            .filter(|n| n.is_process_like())
            .map(|n| n.id())
    })
}

pub fn node_by_key(d: &Diagram, key: &str) -> Option<NodeId> {
    d.nodes().find(|n| n.attr(ATTR_KEY) == Some(key)).map(|n| n.id())
}

fn is_straight_line(p: &Program) -> bool {
    fn block(b: &Block) -> bool {
        b.stmts.iter().enumerate().all(|(i, s)| match &s.kind {
            StmtKind::If { .. }
            | StmtKind::While { .. }
            | StmtKind::Goto(_)
            | StmtKind::Label(_)
            | StmtKind::Break
            | StmtKind::Continue
            | StmtKind::Try { .. }
            | StmtKind::Throw(_) => false,
            StmtKind::Return(_) => i + 1 == b.stmts.len(),
            StmtKind::Block(inner) => inner.stmts.iter().all(|s| !matches!(s.kind, StmtKind::Return(_))) && block(inner),
            StmtKind::Func(f) => block(&f.body),
            _ => true,
        })
    }
    p.items.iter().all(|i| match &i.kind {
        ItemKind::Func(f) => block(&f.body),
        ItemKind::Block(b) => block(&b.block),
        _ => true,
    })
}

/// Where a returning line lands, possibly known only after the walk.
#[derive(Debug, Clone, Copy)]
enum Target {
    Pos(TimelineId, u32),
    Label(SymbolId),
    LoopEnd(SiteId),
    Handler(SiteId),
}

#[derive(Debug, Clone, Copy)]
struct Ctx {
    func: SymbolId,
    /// Nearest block-level node: owns declarations.
    block: NodeId,
    tl: TimelineId,
    cont: Option<Target>,
    brk: Option<Target>,
    handler: Option<Target>,
}

struct Extractor<'a> {
    p: &'a Program,
    t: &'a SymbolTable,
    o: &'a ExtractOptions,
    d: Diagram,
    idents: BTreeSet<String>,
    module: NodeId,
    fn_node: BTreeMap<SymbolId, NodeId>,
    fn_tl: BTreeMap<SymbolId, TimelineId>,
    rec_node: BTreeMap<SymbolId, NodeId>,
    holder: BTreeMap<SymbolId, NodeId>,
    ret_holder: BTreeMap<SymbolId, NodeId>,
    const_fn: BTreeMap<SymbolId, NodeId>,
    lit: BTreeMap<(NodeId, String), NodeId>,
    elem: BTreeMap<(SymbolId, String), NodeId>,
    sites: BTreeMap<NodeId, BTreeSet<SiteId>>,
    calls: BTreeMap<NodeId, Vec<String>>,
    jumps: BTreeMap<NodeId, Vec<String>>,
    pending: Vec<(NodeId, Target, Option<SiteId>)>,
    label_pos: BTreeMap<SymbolId, (TimelineId, u32)>,
    loop_end: BTreeMap<SiteId, (TimelineId, u32)>,
    handler_start: BTreeMap<SiteId, (TimelineId, u32)>,
    fp_targets: BTreeMap<SymbolId, BTreeSet<SymbolId>>,
    unresolved: Vec<UnresolvedCall>,
    tmp_count: u32,
    thread_count: u32,
}

fn sanitize(base: &str) -> String {
    let mut s: String = base
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert_str(0, "n_");
    }
    if !is_valid_ident(&s) {
        s.push('_');
    }
    s
}

impl<'a> Extractor<'a> {
    fn new(p: &'a Program, t: &'a SymbolTable, o: &'a ExtractOptions) -> Self {
        Extractor {
            p,
            t,
            o,
            d: Diagram::new(),
            idents: BTreeSet::new(),
            module: NodeId(0),
            fn_node: BTreeMap::new(),
            fn_tl: BTreeMap::new(),
            rec_node: BTreeMap::new(),
            holder: BTreeMap::new(),
            ret_holder: BTreeMap::new(),
            const_fn: BTreeMap::new(),
            lit: BTreeMap::new(),
            elem: BTreeMap::new(),
            sites: BTreeMap::new(),
            calls: BTreeMap::new(),
            jumps: BTreeMap::new(),
            pending: Vec::new(),
            label_pos: BTreeMap::new(),
            loop_end: BTreeMap::new(),
            handler_start: BTreeMap::new(),
            fp_targets: BTreeMap::new(),
            unresolved: Vec::new(),
            tmp_count: 0,
            thread_count: 0,
        }
    }

    fn op(&self) -> bool {
        self.o.granularity == Granularity::Operator
    }

    fn func_level(&self) -> bool {
        self.o.granularity == Granularity::Function
    }

    fn fresh(&mut self, base: &str) -> String {
        let base = sanitize(base);
        let mut candidate = base.clone();
        let mut k = 2;
        while self.idents.contains(&candidate) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        self.idents.insert(candidate.clone());
        candidate
    }

    fn node(&mut self, spec: NodeSpec, ident: &str, key: String) -> NodeId {
        let ident = self.fresh(ident);
        self.d
            .add_node(spec.ident(ident).attr(ATTR_KEY, key))
            .expect("extractor nodes are well formed")
    }

    fn timeline(&mut self, owner: NodeId, suffix: &str) -> TimelineId {
        let base = format!("t_{}{suffix}", self.d.node(owner).expect("owner").ident());
        let ident = self.fresh(&base);
        self.d
            .add_timeline(TimelineSpec::on(owner).ident(ident))
            .expect("owner is process-like")
    }

    fn dispatch(&mut self, tl: TimelineId, target: NodeId) -> u32 {
        self.d.dispatch_next(tl, target).expect("dispatch")
    }

    fn next_rank(&self, tl: TimelineId) -> u32 {
        self.d.timeline(tl).expect("timeline").last_rank() + 1
    }

    fn own(&mut self, parent: NodeId, child: NodeId) {
        match self.o.grouping {
            Grouping::Has => {
                self.d.add_edge_once(EdgeKind::Has, parent, child).expect("has");
            }
            Grouping::Euler => {
                self.d.set_euler_parent(child, parent).expect("single container");
            }
        }
    }

    fn edge(&mut self, kind: EdgeKind, src: NodeId, dst: NodeId) {
        self.d.add_edge_once(kind, src, dst).expect("edge");
    }

    fn read(&mut self, holder: NodeId, by: NodeId) {
        let exact = by == self.module || self.op();
        self.edge(if exact { EdgeKind::DataRead } else { EdgeKind::DataFlow }, holder, by);
    }

    fn write(&mut self, by: NodeId, holder: NodeId) {
        let exact = by == self.module || self.op();
        self.edge(if exact { EdgeKind::DataUpdate } else { EdgeKind::DataFlow }, by, holder);
    }

    fn cover(&mut self, site: SiteId, node: NodeId) {
        self.sites.entry(node).or_default().insert(site);
    }

    fn comments(&mut self, cs: &[Comment], target: NodeId) {
        if cs.is_empty() {
            return;
        }
        let text: Vec<&str> = cs.iter().map(|c| c.text.as_str()).collect();
        let key = format!("comment:{}", cs[0].span.offset);
        let c = self.node(NodeSpec::new(NodeKind::Comment).content(text.join("\n")), "note", key);
        self.edge(EdgeKind::CommentAttach, c, target);
    }

    fn process(&mut self, kind: NodeKind, name: String, ident: &str, key: String, func: SymbolId) -> NodeId {
        let n = self.node(NodeSpec::new(kind).name(name), ident, key);
        self.d.set_attr(n, ATTR_FN, func.0.to_string()).expect("node");
        n
    }

    // ---- holders

    fn holder_kind(&self, sym: SymbolId) -> HolderKind {
        let s = self.t.get(sym);
        match s.storage {
            Some(Storage::Heap) => HolderKind::Heap,
            Some(Storage::ConstFnAddress) => HolderKind::Constant,
            storage => match &s.ty {
                Some(t) if t.is_address() => HolderKind::Address,
                Some(t) if t.is_array() => HolderKind::Collection,
                _ if storage == Some(Storage::Static) => HolderKind::Static,
                _ => HolderKind::Stack,
            },
        }
    }

    fn holder_name(&self, sym: SymbolId) -> String {
        let s = self.t.get(sym);
        match &s.ty {
            Some(t) => format!("{}: {}", type_text(t), s.name),
            None => s.name.clone(),
        }
    }

    fn make_holder(&mut self, sym: SymbolId, parent: NodeId) -> NodeId {
        let kind = self.holder_kind(sym);
        let name = self.holder_name(sym);
        let s = self.t.get(sym);
        let (ident, key) = if s.kind == SymbolKind::Ret {
            (String::from("ret"), format!("ret:{}", s.owner.expect("ret owner").0))
        } else {
            (s.name.clone(), format!("sym:{}", sym.0))
        };
        let h = self.node(NodeSpec::holder(kind).name(name), &ident, key);
        self.d.set_attr(h, ATTR_SYM, sym.0.to_string()).expect("node");
        self.own(parent, h);
        if let Some(rec) = s.ty.as_ref().and_then(|t| self.t.record_of(t)) {
            if let Some(&r) = self.rec_node.get(&rec) {
                self.edge(EdgeKind::Is, h, r);
            }
        }
        self.holder.insert(sym, h);
        h
    }

    fn holder_of(&mut self, ident: &Ident) -> Option<NodeId> {
        let sym = self.t.resolve(ident)?;
        if self.t.get(sym).kind == SymbolKind::Func {
            return Some(self.const_fn(sym));
        }
        self.holder.get(&sym).copied()
    }

    fn const_fn(&mut self, f: SymbolId) -> NodeId {
        if let Some(&n) = self.const_fn.get(&f) {
            return n;
        }
        let name = self.t.get(f).name.clone();
        let h = self.node(
            NodeSpec::holder(HolderKind::Constant).name(name.clone()),
            &format!("{name}_addr"),
            format!("constfn:{}", f.0),
        );
        self.d.set_attr(h, ATTR_SYM, f.0.to_string()).expect("node");
        let module = self.module;
        self.own(module, h);
        self.const_fn.insert(f, h);
        h
    }

    fn literal(&mut self, text: String, owner: NodeId) -> NodeId {
        if let Some(&n) = self.lit.get(&(owner, text.clone())) {
            return n;
        }
        let owner_key = self.d.node(owner).and_then(|n| n.attr(ATTR_KEY)).unwrap_or("").to_string();
        let h = self.node(
            NodeSpec::holder(HolderKind::Constant).name(text.clone()).content(text.clone()),
            "lit",
            format!("lit:{owner_key}:{text}"),
        );
        self.own(owner, h);
        self.lit.insert((owner, text), h);
        h
    }

    fn tmp(&mut self, key: String, owner: NodeId) -> NodeId {
        self.tmp_count += 1;
        let name = format!("tmp{}", self.tmp_count);
        let h = self.node(NodeSpec::holder(HolderKind::Stack).name(name.clone()), &name, key);
        self.own(owner, h);
        h
    }

    /// Holder written through an lvalue.
    fn target_holder(&mut self, l: &LValue) -> Option<NodeId> {
        match l {
            LValue::Var(n) | LValue::Field(n, _) => self.holder_of(n),
            LValue::Index(n, i) => {
                let sym = self.t.resolve(n)?;
                let text = expr_text(i);
                if let Some(&h) = self.elem.get(&(sym, text.clone())) {
                    return Some(h);
                }
                let coll = *self.holder.get(&sym)?;
                let kind = match self.t.get(sym).storage {
                    Some(Storage::Heap) => HolderKind::Heap,
                    Some(Storage::Static) => HolderKind::Static,
                    _ => HolderKind::Stack,
                };
                let name = format!("{}[{text}]", n.name);
                let h = self.node(
                    NodeSpec::holder(kind).name(name),
                    &format!("{}_elem", n.name),
                    format!("elem:{}:{text}", sym.0),
                );
                self.d.set_attr(h, ATTR_SYM, sym.0.to_string()).expect("node");
                self.own(coll, h);
                let elem_ty = match &self.t.get(sym).ty {
                    Some(Type::Array(inner, _)) => Some((**inner).clone()),
                    _ => None,
                };
                if let Some(rec) = elem_ty.as_ref().and_then(|t| self.t.record_of(t)) {
                    if let Some(&r) = self.rec_node.get(&rec) {
                        self.edge(EdgeKind::Is, h, r);
                    }
                }
                self.elem.insert((sym, text), h);
                Some(h)
            }
        }
    }

    // ---- function-address analysis

    fn fn_value(&self, e: &Expr) -> Option<SymbolId> {
        let n = match e {
            Expr::Place(LValue::Var(n)) | Expr::AddrOf(n) => n,
            _ => return None,
        };
        let s = self.t.resolve(n)?;
        (self.t.get(s).kind == SymbolKind::Func).then_some(s)
    }

    fn fn_var(&self, e: &Expr) -> Option<SymbolId> {
        let Expr::Place(LValue::Var(n)) = e else { return None };
        let s = self.t.resolve(n)?;
        let sym = self.t.get(s);
        (matches!(sym.kind, SymbolKind::Var | SymbolKind::Param) && sym.ty.as_ref().is_some_and(Type::is_fn))
            .then_some(s)
    }

    /// Flow-insensitive: which functions can each address variable hold.
    fn analyse_addresses(&mut self) {
        let mut direct: Vec<(SymbolId, SymbolId)> = Vec::new();
        let mut copies: Vec<(SymbolId, SymbolId)> = Vec::new();
        let mut assign = |this: &Self, target: Option<SymbolId>, value: &Expr| {
            let Some(t) = target else { return };
            if let Some(f) = this.fn_value(value) {
                direct.push((t, f));
            } else if let Some(v) = this.fn_var(value) {
                copies.push((v, t));
            }
        };
        let mut stmts: Vec<&Stmt> = Vec::new();
        fn collect<'b>(b: &'b Block, out: &mut Vec<&'b Stmt>) {
            for s in &b.stmts {
                out.push(s);
                for inner in s.blocks() {
                    collect(inner, out);
                }
            }
        }
        for item in &self.p.items {
            match &item.kind {
                ItemKind::Global(s) => stmts.push(s),
                ItemKind::Func(f) => collect(&f.body, &mut stmts),
                ItemKind::Block(b) => collect(&b.block, &mut stmts),
                ItemKind::Record(_) => {}
            }
        }
        for s in stmts {
            let mut calls = stmt_calls(s);
            if let StmtKind::Spawn(c) = &s.kind {
                calls.push(c);
            }
            match &s.kind {
                StmtKind::VarDecl(v) => {
                    if let Some(init) = &v.init {
                        assign(self, self.t.resolve(&v.name), init.expr());
                    }
                }
                StmtKind::Assign { target: LValue::Var(n), value } => {
                    assign(self, self.t.resolve(n), value);
                }
                _ => {}
            }
            for c in calls {
                let Callee::Direct(n) = &c.callee else { continue };
                let Some(f) = self.t.resolve(n) else { continue };
                let params: Vec<SymbolId> = self.t.params(f).to_vec();
                for (a, p) in c.args.iter().zip(params) {
                    assign(self, Some(p), a);
                }
            }
        }
        for (t, f) in direct {
            self.fp_targets.entry(t).or_default().insert(f);
        }
        loop {
            let mut changed = false;
            for (from, to) in &copies {
                let src = self.fp_targets.get(from).cloned().unwrap_or_default();
                let dst = self.fp_targets.entry(*to).or_default();
                for f in src {
                    changed |= dst.insert(f);
                }
            }
            if !changed {
                break;
            }
        }
    }

    // ---- driver

    fn run(&mut self, entry: Option<SymbolId>) {
        self.analyse_addresses();
        let unit = self.o.unit_name.clone();
        self.module = self.node(NodeSpec::new(NodeKind::Module).name(unit.clone()), &unit, String::from("module"));
        let fp = format!("{:016x}", self.t.fingerprint());
        self.d.set_attr(self.module, ATTR_FINGERPRINT, fp).expect("module");

        // declarations first so bodies can refer to anything
        for item in &self.p.items {
            if let ItemKind::Record(r) = &item.kind {
                let sym = self.t.resolve(&r.name).expect("resolved");
                let n = self.node(
                    NodeSpec::new(NodeKind::Module).name(format!("record {}", r.name.name)),
                    &r.name.name,
                    format!("rec:{}", sym.0),
                );
                let module = self.module;
                self.own(module, n);
                self.rec_node.insert(sym, n);
                self.comments(&item.doc, n);
            }
        }
        for item in &self.p.items {
            match &item.kind {
                ItemKind::Record(_) => {}
                ItemKind::Global(s) => {
                    let StmtKind::VarDecl(v) = &s.kind else { continue };
                    let sym = self.t.resolve(&v.name).expect("resolved");
                    let module = self.module;
                    let h = self.make_holder(sym, module);
                    self.comments(&item.doc, h);
                }
                ItemKind::Func(f) => {
                    let parent = self.member_parent(f).unwrap_or(self.module);
                    let n = self.declare_func(f, parent);
                    self.comments(&item.doc, n);
                }
                ItemKind::Block(b) => {
                    let sym = self.t.by_site(b.block.site).expect("block symbol");
                    let name = self.t.get(sym).name.clone();
                    let n = self.process(NodeKind::Process, name.clone(), &name, format!("fn:{}", sym.0), sym);
                    let module = self.module;
                    self.own(module, n);
                    let tl = self.timeline(n, "");
                    self.fn_node.insert(sym, n);
                    self.fn_tl.insert(sym, tl);
                    self.comments(&item.doc, n);
                }
            }
        }
        if let Some(e) = entry {
            let target = self.fn_node[&e];
            let site = self.t.get(e).site.expect("entry site");
            let ident = self.fresh("thread0");
            let tl = self
                .d
                .add_timeline(TimelineSpec::root(Some("thread 0")).ident(ident).marker(Marker::Start))
                .expect("root timeline");
            let rank = self.dispatch(tl, target);
            let module = self.module;
            self.calls.entry(module).or_default().push(format!("{site}:{}:{rank}", tl.0));
        }
        for item in &self.p.items {
            match &item.kind {
                ItemKind::Global(s) => self.global_init(s),
                ItemKind::Func(f) => self.walk_func(f),
                ItemKind::Block(b) => {
                    let sym = self.t.by_site(b.block.site).expect("block symbol");
                    let ctx = Ctx {
                        func: sym,
                        block: self.fn_node[&sym],
                        tl: self.fn_tl[&sym],
                        cont: None,
                        brk: None,
                        handler: None,
                    };
                    self.cover(b.block.site, ctx.block);
                    self.walk_block(&b.block, ctx);
                }
                ItemKind::Record(_) => {}
            }
        }
        let module = self.module;
        self.comments(&self.p.trailing.clone(), module);
        self.resolve_pending();
        self.write_attrs();
        if let Some(k) = self.o.alias_threshold {
            self.alias(k.max(2));
        }
    }

    fn member_parent(&self, f: &FuncDecl) -> Option<NodeId> {
        let first = f.params.first()?;
        if first.name.name != "this_" {
            return None;
        }
        let rec = self.t.record_of(&first.ty)?;
        self.rec_node.get(&rec).copied()
    }

    fn declare_func(&mut self, f: &FuncDecl, parent: NodeId) -> NodeId {
        let sym = self.t.by_site(f.site).expect("function symbol");
        let n = self.process(NodeKind::Process, signature(f), &f.name.name, format!("fn:{}", sym.0), sym);
        self.own(parent, n);
        for p in self.t.params(sym).to_vec() {
            self.make_holder(p, n);
        }
        if let Some(r) = self.t.ret(sym) {
            let h = self.make_holder(r, n);
            self.ret_holder.insert(sym, h);
        }
        let tl = self.timeline(n, "");
        self.fn_node.insert(sym, n);
        self.fn_tl.insert(sym, tl);
        n
    }

    fn walk_func(&mut self, f: &FuncDecl) {
        let sym = self.t.by_site(f.site).expect("function symbol");
        let n = self.fn_node[&sym];
        self.cover(f.site, n);
        self.cover(f.body.site, n);
        let ctx = Ctx {
            func: sym,
            block: n,
            tl: self.fn_tl[&sym],
            cont: None,
            brk: None,
            handler: None,
        };
        self.walk_block(&f.body, ctx);
    }

    fn walk_block(&mut self, b: &Block, ctx: Ctx) {
        for s in &b.stmts {
            self.stmt(s, ctx);
        }
        self.comments(&b.trailing, ctx.block);
    }

    fn global_init(&mut self, s: &Stmt) {
        let StmtKind::VarDecl(v) = &s.kind else { return };
        let Some(init) = &v.init else { return };
        let module = self.module;
        self.cover(s.site, module);
        let target = self.holder_of(&v.name).expect("global holder");
        if let Some(f) = self.fn_value(init.expr()) {
            self.address_transfer(f, target);
        } else {
            self.expr_reads(init.expr(), module, None);
            self.write(module, target);
            self.address_ref(init.expr(), target);
        }
    }

    /// `fp = func`: the constant flows into the variable, which then
    /// refers to it.
    fn address_transfer(&mut self, f: SymbolId, target: NodeId) {
        let c = self.const_fn(f);
        self.edge(EdgeKind::DataFlow, c, target);
        self.refer(target, c);
    }

    fn refer(&mut self, from: NodeId, to: NodeId) {
        let is_address = self.d.node(from).is_some_and(|n| n.kind() == NodeKind::Holder(HolderKind::Address));
        if is_address {
            self.edge(EdgeKind::Ref, from, to);
        }
    }

    fn address_ref(&mut self, value: &Expr, target: NodeId) {
        if let Expr::AddrOf(n) = value {
            if let Some(h) = self.holder_of(n) {
                self.refer(target, h);
            }
        }
    }

    /// Reads performed by `by` when it evaluates `e`. Call results are
    /// read from the callee's `ret`, looked up in `rets`.
    fn expr_reads(&mut self, e: &Expr, by: NodeId, rets: Option<&BTreeMap<SiteId, NodeId>>) {
        match e {
            Expr::Int(..) | Expr::Str(..) | Expr::AddrOf(_) => {}
            Expr::Place(l) => {
                let base = l.base();
                let is_fn = self
                    .t
                    .resolve(base)
                    .is_some_and(|s| self.t.get(s).kind == SymbolKind::Func);
                if !is_fn {
                    if let Some(h) = self.holder_of(base) {
                        self.read(h, by);
                    }
                }
                if let LValue::Index(_, i) = l {
                    self.expr_reads(i, by, rets);
                }
            }
            Expr::Call(c) => {
                if let Some(r) = rets.and_then(|m| m.get(&c.site)) {
                    self.read(*r, by);
                }
            }
            Expr::Binary(l, _, r) => {
                self.expr_reads(l, by, rets);
                self.expr_reads(r, by, rets);
            }
        }
    }

    fn is_simple_arg(&self, e: &Expr) -> bool {
        matches!(e, Expr::Int(..) | Expr::Str(..) | Expr::Call(_) | Expr::Place(LValue::Var(_)))
    }

    fn needs_own_process(&self, s: &Stmt) -> bool {
        let mut calls = stmt_calls(s);
        if let StmtKind::Spawn(c) = &s.kind {
            calls.push(c);
        }
        let complex_args = calls.iter().any(|c| c.args.iter().any(|a| !self.is_simple_arg(a)));
        let transfer = |this: &Self, target: &LValue, value: &Expr| {
            matches!(target, LValue::Var(_)) && (matches!(value, Expr::Call(_)) || this.fn_value(value).is_some())
        };
        match &s.kind {
            StmtKind::VarDecl(v) => match &v.init {
                None => complex_args,
                Some(i) => complex_args || !transfer(self, &LValue::Var(v.name.clone()), i.expr()),
            },
            StmtKind::Assign { target, value } => complex_args || !transfer(self, target, value),
            StmtKind::Call(_) => complex_args,
            StmtKind::Func(_)
            | StmtKind::Block(_)
            | StmtKind::If { .. }
            | StmtKind::While { .. }
            | StmtKind::Try { .. } => false,
            _ => true,
        }
    }

    /// Handles one call: argument flows, the dispatch, the call-site
    /// record. Returns the callee's result holder.
    fn call(
        &mut self,
        c: &Call,
        ctx: Ctx,
        by: NodeId,
        dispatch_tl: TimelineId,
        rets: &BTreeMap<SiteId, NodeId>,
    ) -> Option<NodeId> {
        let callee = match &c.callee {
            Callee::Direct(n) => self.t.resolve(n),
            Callee::Indirect(fp) => {
                if let Some(h) = self.holder_of(fp) {
                    self.read(h, by);
                }
                let fsym = self.t.resolve(fp);
                let cands = fsym.and_then(|s| self.fp_targets.get(&s)).cloned().unwrap_or_default();
                if cands.len() == 1 {
                    cands.into_iter().next()
                } else {
                    self.unresolved.push(UnresolvedCall {
                        site: c.site,
                        span: c.span,
                        pointer: fp.name.clone(),
                    });
                    None
                }
            }
        };
        let target = match callee {
            Some(f) => self.fn_node[&f],
            None => {
                let name = format!("?({})", c.callee.ident().name);
                self.process(NodeKind::Process, name, "unresolved", format!("unresolved:{}", c.site), ctx.func)
            }
        };
        let params: Vec<SymbolId> = callee.map(|f| self.t.params(f).to_vec()).unwrap_or_default();
        for (i, a) in c.args.iter().enumerate() {
            let src = match a {
                Expr::Int(..) | Expr::Str(..) => Some(self.literal(expr_text(a), ctx.block)),
                Expr::Place(LValue::Var(n)) => self.holder_of(n),
                Expr::Call(inner) => {
                    let tmp = self.tmp(format!("tmp:{}:{i}", c.site), ctx.block);
                    if let Some(r) = rets.get(&inner.site) {
                        self.edge(EdgeKind::DataFlow, *r, tmp);
                    }
                    Some(tmp)
                }
                _ => {
                    let tmp = self.tmp(format!("tmp:{}:{i}", c.site), ctx.block);
                    self.expr_reads(a, by, Some(rets));
                    self.write(by, tmp);
                    if let Some(f) = self.fn_value(a) {
                        let cf = self.const_fn(f);
                        self.edge(EdgeKind::DataFlow, cf, tmp);
                    }
                    Some(tmp)
                }
            };
            let (Some(src), Some(&param)) = (src, params.get(i)) else { continue };
            let param = self.holder[&param];
            match self.o.call_style {
                CallStyle::Simplified => self.edge(EdgeKind::DataFlow, src, param),
                CallStyle::Full => {
                    let pname = self.t.get(params[i]).name.clone();
                    let slot = self.node(
                        NodeSpec::holder(HolderKind::Stack).name(format!("{pname}'")),
                        &format!("{pname}_slot"),
                        format!("slot:{}:{i}", c.site),
                    );
                    self.own(ctx.block, slot);
                    let copy = self.process(
                        NodeKind::Process,
                        format!("copy {pname}"),
                        &format!("copy_{pname}"),
                        format!("copy:{}:{i}", c.site),
                        ctx.func,
                    );
                    self.own(ctx.block, copy);
                    self.dispatch(ctx.tl, copy);
                    self.edge(EdgeKind::DataRead, src, copy);
                    self.edge(EdgeKind::DataUpdate, copy, slot);
                    self.edge(EdgeKind::DataFlow, slot, param);
                }
            }
        }
        let rank = self.dispatch(dispatch_tl, target);
        self.cover(c.site, by);
        self.calls
            .entry(by)
            .or_default()
            .push(format!("{}:{}:{rank}", c.site, dispatch_tl.0));
        callee.and_then(|f| self.ret_holder.get(&f).copied())
    }

    /// Dispatches every call in the statement's expressions, inner first.
    fn dispatch_calls(&mut self, s: &Stmt, ctx: Ctx, by: NodeId) -> BTreeMap<SiteId, NodeId> {
        let mut rets = BTreeMap::new();
        for c in stmt_calls(s) {
            if let Some(r) = self.call(c, ctx, by, ctx.tl, &rets) {
                rets.insert(c.site, r);
            }
        }
        rets
    }

    fn stmt(&mut self, s: &Stmt, ctx: Ctx) {
        match &s.kind {
            StmtKind::If { cond, then, els } => self.branch(s, ctx, cond, then, els.as_ref()),
            StmtKind::While { cond, body } => self.looping(s, ctx, cond, body),
            StmtKind::Block(b) => {
                if self.func_level() {
                    self.cover(s.site, ctx.block);
                    self.cover(b.site, ctx.block);
                    self.comments(&s.doc, ctx.block);
                    self.walk_block(b, ctx);
                    return;
                }
                let n = self.process(NodeKind::Process, String::from("block"), &format!("b{}", s.site), format!("site:{}", s.site), ctx.func);
                self.own(ctx.block, n);
                self.dispatch(ctx.tl, n);
                let tl = self.timeline(n, "");
                self.cover(s.site, n);
                self.cover(b.site, n);
                self.comments(&s.doc, n);
                self.walk_block(b, Ctx { block: n, tl, ..ctx });
            }
            StmtKind::Try { body, var, handler } => self.try_catch(s, ctx, body, var, handler),
            StmtKind::Func(f) => {
                let n = self.declare_func(f, ctx.block);
                self.comments(&s.doc, n);
                self.walk_func(f);
            }
            _ => self.simple(s, ctx),
        }
    }

    fn simple(&mut self, s: &Stmt, ctx: Ctx) {
        // declarations come first: the holder exists before anything
        // refers to it
        let declared = match &s.kind {
            StmtKind::VarDecl(v) => Some(&v.name),
            StmtKind::HeapAlloc { name, .. } => Some(name),
            _ => None,
        };
        let decl_holder = declared.map(|n| {
            let sym = self.t.resolve(n).expect("resolved");
            self.make_holder(sym, ctx.block)
        });
        let own_node = if self.op() && self.needs_own_process(s) {
            let kind = NodeKind::Process;
            Some(self.process(kind, stmt_head(s), &format!("s{}", s.site), format!("stmt:{}", s.site), ctx.func))
        } else {
            None
        };
        let by = own_node.unwrap_or(ctx.block);
        self.cover(s.site, by);
        let rets = self.dispatch_calls(s, ctx, by);
        match &s.kind {
            StmtKind::VarDecl(v) => {
                if let Some(init) = &v.init {
                    let h = decl_holder.expect("declared");
                    self.assign(init.expr(), &LValue::Var(v.name.clone()), Some(h), by, &rets);
                }
            }
            StmtKind::HeapAlloc { .. } => {
                self.edge(EdgeKind::Create, by, decl_holder.expect("declared"));
            }
            StmtKind::Delete(n) => {
                if let Some(h) = self.holder_of(n) {
                    self.edge(EdgeKind::Destroy, by, h);
                }
            }
            StmtKind::Assign { target, value } => {
                let h = self.target_holder(target);
                self.assign(value, target, h, by, &rets);
            }
            StmtKind::Call(_) => {}
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr_reads(e, by, Some(&rets));
                    if let Some(&r) = self.ret_holder.get(&ctx.func) {
                        self.write(by, r);
                    }
                }
            }
            StmtKind::Throw(e) => {
                self.expr_reads(e, by, Some(&rets));
                if let Some(h) = ctx.handler {
                    self.pending.push((by, h, None));
                }
            }
            StmtKind::Goto(l) => {
                let sym = self.t.resolve(l).expect("label");
                self.pending.push((by, Target::Label(sym), Some(s.site)));
            }
            StmtKind::Break => {
                let t = ctx.brk.expect("inside loop");
                self.pending.push((by, t, None));
            }
            StmtKind::Continue => {
                let t = ctx.cont.expect("inside loop");
                self.pending.push((by, t, None));
            }
            StmtKind::Label(l) => {
                let sym = self.t.resolve(l).expect("label");
                // the label's own process is dispatched just below, so
                // either way the next rank is where control resumes
                let rank = self.next_rank(ctx.tl);
                self.label_pos.insert(sym, (ctx.tl, rank));
            }
            StmtKind::Spawn(c) => {
                self.thread_count += 1;
                let label = format!("thread {}", self.thread_count);
                let ident = self.fresh(&format!("thread{}", self.thread_count));
                let tl = self
                    .d
                    .add_timeline(TimelineSpec::root(Some(&label)).ident(ident).marker(Marker::Start))
                    .expect("root timeline");
                let mut rets = rets.clone();
                if let Some(r) = self.call(c, ctx, by, tl, &rets) {
                    rets.insert(c.site, r);
                }
                let target = self.d.timeline(tl).expect("tl").dispatches()[0].target;
                self.edge(EdgeKind::ControlPar, by, target);
            }
            _ => unreachable!("structured statements are handled by stmt()"),
        }
        if let Some(n) = own_node {
            self.dispatch(ctx.tl, n);
        }
        let doc_target = decl_holder.unwrap_or(by);
        self.comments(&s.doc, doc_target);
    }

    fn assign(
        &mut self,
        value: &Expr,
        target: &LValue,
        holder: Option<NodeId>,
        by: NodeId,
        rets: &BTreeMap<SiteId, NodeId>,
    ) {
        let plain = matches!(target, LValue::Var(_));
        if plain {
            if let Some(f) = self.fn_value(value) {
                if let Some(h) = holder {
                    self.address_transfer(f, h);
                }
                return;
            }
            if let Expr::Call(c) = value {
                if let (Some(r), Some(h)) = (rets.get(&c.site), holder) {
                    self.edge(EdgeKind::DataFlow, *r, h);
                }
                return;
            }
        }
        self.expr_reads(value, by, Some(rets));
        if let LValue::Index(_, i) = target {
            self.expr_reads(i, by, Some(rets));
        }
        if let Some(h) = holder {
            self.write(by, h);
            self.address_ref(value, h);
        }
    }

    fn branch(&mut self, s: &Stmt, ctx: Ctx, cond: &Expr, then: &Block, els: Option<&Block>) {
        if self.func_level() {
            self.cover(s.site, ctx.block);
            let rets = self.dispatch_calls(s, ctx, ctx.block);
            self.expr_reads(cond, ctx.block, Some(&rets));
            self.comments(&s.doc, ctx.block);
            self.cover(then.site, ctx.block);
            self.walk_block(then, ctx);
            if let Some(e) = els {
                self.cover(e.site, ctx.block);
                self.walk_block(e, ctx);
            }
            return;
        }
        let d = self.process(NodeKind::Decision, stmt_head(s), &format!("if{}", s.site), format!("site:{}", s.site), ctx.func);
        self.own(ctx.block, d);
        self.cover(s.site, d);
        let rets = self.dispatch_calls(s, ctx, d);
        self.dispatch(ctx.tl, d);
        self.expr_reads(cond, d, Some(&rets));
        self.comments(&s.doc, d);
        let then_tl = self.timeline(d, "");
        self.cover(then.site, d);
        self.walk_block(then, Ctx { block: d, tl: then_tl, ..ctx });
        if let Some(e) = els {
            let else_tl = self.timeline(d, "_else");
            self.cover(e.site, d);
            self.walk_block(e, Ctx { block: d, tl: else_tl, ..ctx });
        }
    }

    fn looping(&mut self, s: &Stmt, ctx: Ctx, cond: &Expr, body: &Block) {
        if self.func_level() {
            let start = (ctx.tl, self.next_rank(ctx.tl));
            self.cover(s.site, ctx.block);
            let rets = self.dispatch_calls(s, ctx, ctx.block);
            self.expr_reads(cond, ctx.block, Some(&rets));
            self.comments(&s.doc, ctx.block);
            self.cover(body.site, ctx.block);
            let inner = Ctx {
                cont: Some(Target::Pos(start.0, start.1)),
                brk: Some(Target::LoopEnd(s.site)),
                ..ctx
            };
            self.walk_block(body, inner);
            let end = self.next_rank(ctx.tl);
            self.loop_end.insert(s.site, (ctx.tl, end));
            return;
        }
        let d = self.process(NodeKind::Decision, stmt_head(s), &format!("while{}", s.site), format!("site:{}", s.site), ctx.func);
        self.own(ctx.block, d);
        self.cover(s.site, d);
        let rets = self.dispatch_calls(s, ctx, d);
        let rank = self.dispatch(ctx.tl, d);
        self.expr_reads(cond, d, Some(&rets));
        self.comments(&s.doc, d);
        let body_tl = self.timeline(d, "");
        self.cover(body.site, d);
        let inner = Ctx {
            block: d,
            tl: body_tl,
            cont: Some(Target::Pos(body_tl, 1)),
            brk: Some(Target::Pos(ctx.tl, rank + 1)),
            ..ctx
        };
        self.walk_block(body, inner);
    }

    fn try_catch(&mut self, s: &Stmt, ctx: Ctx, body: &Block, var: &Ident, handler: &Block) {
        let var_sym = self.t.resolve(var).expect("catch variable");
        if self.func_level() {
            let f = ctx.block;
            self.cover(s.site, f);
            self.cover(body.site, f);
            self.cover(handler.site, f);
            self.edge(EdgeKind::ExceptionCtl, f, f);
            self.comments(&s.doc, f);
            self.walk_block(body, Ctx { handler: Some(Target::Handler(s.site)), ..ctx });
            self.handler_start.insert(s.site, (ctx.tl, self.next_rank(ctx.tl)));
            let h = self.make_holder(var_sym, f);
            self.write(f, h);
            self.walk_block(handler, ctx);
            return;
        }
        let t = self.process(NodeKind::Process, String::from("try"), &format!("try{}", s.site), format!("site:{}", s.site), ctx.func);
        self.own(ctx.block, t);
        self.dispatch(ctx.tl, t);
        let c = self.process(
            NodeKind::Process,
            format!("catch ({})", var.name),
            &format!("catch{}", s.site),
            format!("catch:{}", s.site),
            ctx.func,
        );
        self.own(ctx.block, c);
        self.edge(EdgeKind::ExceptionCtl, t, c);
        let t_tl = self.timeline(t, "");
        let c_tl = self.timeline(c, "");
        self.cover(s.site, t);
        self.cover(body.site, t);
        self.cover(handler.site, c);
        self.comments(&s.doc, t);
        self.walk_block(
            body,
            Ctx {
                block: t,
                tl: t_tl,
                handler: Some(Target::Pos(c_tl, 1)),
                ..ctx
            },
        );
        let h = self.make_holder(var_sym, c);
        self.write(c, h);
        self.walk_block(handler, Ctx { block: c, tl: c_tl, ..ctx });
    }

    // ---- finishing

    fn resolve_pending(&mut self) {
        for (src, target, goto_site) in core::mem::take(&mut self.pending) {
            let (tl, rank) = match target {
                Target::Pos(t, r) => (t, r),
                Target::Label(l) => self.label_pos[&l],
                Target::LoopEnd(s) => self.loop_end[&s],
                Target::Handler(s) => self.handler_start[&s],
            };
            self.d
                .add_edge_once(EdgeKind::ControlReturn, src, Endpoint::TimelinePos(tl, rank))
                .expect("return edge");
            if let Some(site) = goto_site {
                self.jumps.entry(src).or_default().push(format!("{site}:{}:{rank}", tl.0));
            }
        }
    }

    fn write_attrs(&mut self) {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        for (n, sites) in core::mem::take(&mut self.sites) {
            let v = join(&mut sites.iter().map(|s| s.to_string()));
            self.d.set_attr(n, ATTR_SITES, v).expect("node");
        }
        for (n, calls) in core::mem::take(&mut self.calls) {
            self.d.set_attr(n, ATTR_CALLS, calls.join(" ")).expect("node");
        }
        for (n, jumps) in core::mem::take(&mut self.jumps) {
            self.d.set_attr(n, ATTR_JUMPS, jumps.join(" ")).expect("node");
        }
    }

    /// Replaces all but the first dispatch of a busy function by alias
    /// copies.
    fn alias(&mut self, threshold: u32) {
        let funcs: Vec<(SymbolId, NodeId)> = self.fn_node.iter().map(|(s, n)| (*s, *n)).collect();
        let mut by_node: Vec<(NodeId, SymbolId)> = funcs.into_iter().map(|(s, n)| (n, s)).collect();
        by_node.sort();
        for (f, sym) in by_node {
            let mut occurrences: Vec<(TimelineId, usize)> = Vec::new();
            for tl in self.d.timelines() {
                for (i, dsp) in tl.dispatches().iter().enumerate() {
                    if dsp.target == f {
                        occurrences.push((tl.id(), i));
                    }
                }
            }
            let count = occurrences.len() as u32;
            if count < threshold {
                continue;
            }
            let (name, ident) = {
                let n = self.d.node(f).expect("function");
                (String::from(n.label()), String::from(n.ident()))
            };
            for (k, (tl, i)) in occurrences.into_iter().enumerate().skip(1) {
                let copy = self.process(NodeKind::Process, name.clone(), &format!("{ident}_alias"), format!("alias:{}:{k}", sym.0), sym);
                self.d.timelines.get_mut(&tl).expect("timeline").dispatches[i].target = copy;
                self.edge(EdgeKind::Alias(count), f, copy);
            }
        }
    }
}

/// Calls every top-level expression of a statement (not of its
/// sub-blocks), in evaluation order.
pub fn stmt_exprs<'a>(s: &'a Stmt, f: &mut dyn FnMut(&'a Expr)) {
    match &s.kind {
        StmtKind::VarDecl(v) => {
            if let Some(i) = &v.init {
                f(i.expr());
            }
        }
        StmtKind::Assign { target, value } => {
            f(value);
            if let LValue::Index(_, i) = target {
                f(i);
            }
        }
        StmtKind::Call(c) | StmtKind::Spawn(c) => {
            for a in &c.args {
                f(a);
            }
        }
        StmtKind::Return(Some(e)) | StmtKind::Throw(e) => f(e),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => f(cond),
        _ => {}
    }
}

/// Calls a statement makes on its enclosing timeline, inner first. A
/// spawned call is not among them; its arguments' calls are.
pub fn stmt_calls(s: &Stmt) -> Vec<&Call> {
    let mut calls = Vec::new();
    stmt_exprs(s, &mut |e| e.calls(&mut calls));
    if let StmtKind::Call(c) = &s.kind {
        calls.push(c);
    }
    calls
}

/// The diagram described through node keys instead of identifiers, so
/// that two extractions of the same program can be compared regardless
/// of how nodes, edges and timelines were numbered. Nodes without a key
/// fall back to their identifier.
pub fn keyed_view(d: &Diagram) -> BTreeSet<String> {
    let key = |n: NodeId| -> String {
        d.node(n)
            .map(|x| String::from(x.attr(ATTR_KEY).unwrap_or(x.ident())))
            .unwrap_or_else(|| format!("{n:?}"))
    };
    let tl_name = |t: TimelineId| -> String {
        let Some(tl) = d.timeline(t) else { return format!("{t:?}") };
        match tl.owner_node() {
            Some(o) => {
                let k = d.timelines_owned_by(o).position(|x| x.id() == t).unwrap_or(0);
                format!("{}#{k}", key(o))
            }
            None => format!("root:{}", tl.ident()),
        }
    };
    let mut out = BTreeSet::new();
    for n in d.nodes() {
        out.insert(format!(
            "node {} {} {:?} {:?}",
            key(n.id()),
            n.kind().keyword(),
            n.label(),
            n.content()
        ));
    }
    for tl in d.timelines() {
        let name = tl_name(tl.id());
        out.insert(format!("timeline {name} {:?}", tl.markers()));
        for dsp in tl.dispatches() {
            out.insert(format!("{name} {} {:?} => {}", dsp.mark.rank, dsp.mark.label, key(dsp.target)));
        }
    }
    for e in d.edges() {
        let dst = match e.dst {
            Endpoint::Node(n) => key(n),
            Endpoint::TimelinePos(t, r) => format!("{}:{r}", tl_name(t)),
            Endpoint::EdgeRef(id) => match d.edge(id) {
                Some(r) => format!("[{:?} {}]", r.kind, key(r.src)),
                None => format!("{id:?}"),
            },
        };
        out.insert(format!("{:?} {} {dst}", e.kind, key(e.src)));
    }
    for (child, parent) in d.euler() {
        out.insert(format!("in {}: {}", key(*parent), key(*child)));
    }
    out
}

/// Equal up to renumbering, by [`keyed_view`].
pub fn isomorphic(a: &Diagram, b: &Diagram) -> bool {
    keyed_view(a) == keyed_view(b)
}

/// Collapses the argument copies of a full-style extraction: each
/// `src -> copy -> slot -> param` chain becomes `src -> param`, the copy
/// processes and slots disappear, and the timelines that dispatched the
/// copies are renumbered with returning lines following their ranks.
pub fn elide_copy_machinery(full: &Diagram) -> Diagram {
    let with_prefix = |p: &str| -> BTreeSet<NodeId> {
        full.nodes()
            .filter(|n| n.attr(ATTR_KEY).is_some_and(|k| k.starts_with(p)))
            .map(|n| n.id())
            .collect()
    };
    let copies = with_prefix("copy:");
    let slots = with_prefix("slot:");
    let doomed: BTreeSet<NodeId> = copies.union(&slots).copied().collect();
    let mut out = full.clone();

    let mut shortcuts = Vec::new();
    for &c in &copies {
        let srcs: Vec<NodeId> = full
            .edges()
            .filter(|e| e.kind == EdgeKind::DataRead && e.dst == Endpoint::Node(c))
            .map(|e| e.src)
            .collect();
        for slot in full
            .edges()
            .filter(|e| e.kind == EdgeKind::DataUpdate && e.src == c)
            .filter_map(|e| e.dst.node())
        {
            for param in full
                .edges()
                .filter(|e| e.kind == EdgeKind::DataFlow && e.src == slot)
                .filter_map(|e| e.dst.node())
            {
                shortcuts.extend(srcs.iter().map(|&s| (s, param)));
            }
        }
    }

    let gone: Vec<_> = full
        .edges()
        .filter(|e| doomed.contains(&e.src) || e.dst.node().is_some_and(|n| doomed.contains(&n)))
        .map(|e| e.id)
        .collect();
    for id in gone {
        out.remove_edge(id);
    }
    for n in &doomed {
        out.nodes.remove(n);
        out.euler.remove(n);
    }
    for (s, p) in shortcuts {
        out.add_edge_once(EdgeKind::DataFlow, s, p).expect("holders");
    }

    let mut rank_map: BTreeMap<TimelineId, BTreeMap<u32, u32>> = BTreeMap::new();
    for tl in out.timelines.values_mut() {
        if !tl.dispatches.iter().any(|d| doomed.contains(&d.target)) {
            continue;
        }
        let mut map = BTreeMap::new();
        let mut next = 1;
        for dsp in &tl.dispatches {
            map.insert(dsp.mark.rank, next);
            if !doomed.contains(&dsp.target) {
                next += 1;
            }
        }
        map.insert(tl.last_rank() + 1, next);
        tl.dispatches.retain(|d| !doomed.contains(&d.target));
        for dsp in tl.dispatches.iter_mut() {
            let r = map[&dsp.mark.rank];
            if dsp.mark.has_default_label() {
                dsp.mark = crate::model::OrderMark::new(r);
            } else {
                dsp.mark.rank = r;
            }
        }
        rank_map.insert(tl.id, map);
    }
    for e in out.edges.values_mut() {
        if let Endpoint::TimelinePos(t, r) = e.dst {
            if let Some(m) = rank_map.get(&t) {
                e.dst = Endpoint::TimelinePos(t, m.get(&r).copied().unwrap_or(r));
            }
        }
    }
    out
}

/// Contracts every function, block, branch, loop and handler of an
/// operator-level extraction, which should give the block-level one.
pub fn coarsen_to_blocks(op: &Diagram) -> Result<Diagram, GraphError> {
    let blocky: Vec<String> = op
        .nodes()
        .filter_map(|n| n.attr(ATTR_KEY))
        .filter(|k| k.starts_with("fn:") || k.starts_with("site:") || k.starts_with("catch:"))
        .map(String::from)
        .collect();
    let mut d = op.clone();
    for k in blocky {
        if let Some(n) = node_by_key(&d, &k) {
            d = contract(&d, n)?;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowc::compile;
    use crate::text::serialize;
    use crate::validate::validate;

    const FUNCTION_A: &str = "record arg { int v; }\n\
        void functionA(arg a) { arg b(a); }\n\
        B: { arg a(5); functionA(a); }";

    fn run(src: &str, g: Granularity) -> ExtractReport {
        let (p, t) = compile(src).unwrap();
        let o = ExtractOptions {
            granularity: g,
            ..ExtractOptions::default()
        };
        extract(&p, &t, &o).unwrap()
    }

    #[test]
    fn function_a_is_valid_at_every_level() {
        for g in Granularity::ALL {
            let r = run(FUNCTION_A, g);
            let v = validate(&r.diagram);
            assert!(v.is_empty(), "{g:?}: {v:?}\n{}", serialize(&r.diagram));
            assert!(r.straight_line);
        }
    }

    const EVERYTHING: &str = "record r { int v; int[3] xs; }\n\
        int g = 1;\n\
        void (*fp)(int);\n\
        int inc(int x) { return x + 1; }\n\
        void show(int v) { g = v; }\n\
        void each(int[3] xs, fn(int) cb) { int i = 0; while (i < 3) { (*cb)(xs[i]); i = i + 1; if (i == 2) { break; } else { continue; } } }\n\
        void main() {\n\
            int[3] xs; xs[0] = inc(g); fp = show; each(xs, fp);\n\
            q = new r; q.v = inc(inc(2)); delete q;\n\
            try { throw 3; } catch (e) { show(e); }\n\
            { int k = g - 1; }\n\
            L: g = g + 1; if (g < 5) { goto L; }\n\
            spawn show(g + 2);\n\
        }";

    #[test]
    fn everything_is_valid_in_every_configuration() {
        let (p, t) = compile(EVERYTHING).unwrap();
        for g in Granularity::ALL {
            for c in [CallStyle::Simplified, CallStyle::Full] {
                for grouping in [Grouping::Has, Grouping::Euler] {
                    for alias in [None, Some(2)] {
                        let o = ExtractOptions {
                            granularity: g,
                            call_style: c,
                            grouping,
                            alias_threshold: alias,
                            ..ExtractOptions::default()
                        };
                        let r = extract(&p, &t, &o).unwrap();
                        let v = validate(&r.diagram);
                        assert!(v.is_empty(), "{o:?}: {v:?}\n{}", serialize(&r.diagram));
                        assert!(!r.straight_line);
                        assert!(r.unresolved_indirect_calls.is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn operator_level_coarsens_to_block_level() {
        let (p, t) = compile(EVERYTHING).unwrap();
        for c in [CallStyle::Simplified, CallStyle::Full] {
            let at = |g| {
                let o = ExtractOptions { granularity: g, call_style: c, ..ExtractOptions::default() };
                extract(&p, &t, &o).unwrap().diagram
            };
            let coarse = coarsen_to_blocks(&at(Granularity::Operator)).unwrap();
            let block = at(Granularity::Block);
            assert!(!isomorphic(&at(Granularity::Operator), &block));
            let (a, b) = (keyed_view(&coarse), keyed_view(&block));
            let only_a: Vec<_> = a.difference(&b).collect();
            let only_b: Vec<_> = b.difference(&a).collect();
            assert!(only_a.is_empty() && only_b.is_empty(), "{c:?}\ncoarse only: {only_a:#?}\nblock only: {only_b:#?}");
        }
    }

    #[test]
    fn ambiguous_pointer_stays_unresolved() {
        let src = "void a() { } void b() { }\n\
            void main() { fn() fp = a; if (1 == 1) { fp = b; } (*fp)(); }";
        let r = run(src, Granularity::Block);
        assert_eq!(r.unresolved_indirect_calls.len(), 1);
        assert_eq!(r.unresolved_indirect_calls[0].pointer, "fp");
        let q = r.diagram.nodes().find(|n| n.label() == "?(fp)").expect("placeholder");
        assert!(r.diagram.timelines().any(|t| t.dispatches().iter().any(|d| d.target == q.id())));
        assert!(validate(&r.diagram).is_empty());
    }

    #[test]
    fn single_candidate_pointer_resolves() {
        let src = "void a() { } void run(fn() cb) { (*cb)(); } void main() { run(a); }";
        let r = run(src, Granularity::Function);
        assert!(r.unresolved_indirect_calls.is_empty());
        let a = r.diagram.node_by_ident("a").unwrap().id();
        let t_run = r.diagram.timeline_by_ident("t_run").unwrap();
        assert_eq!(t_run.dispatches()[0].target, a);
    }

    #[test]
    fn busy_function_gets_aliases() {
        let src = "void f() { } void main() { f(); f(); f(); }";
        let (p, t) = compile(src).unwrap();
        let o = ExtractOptions {
            alias_threshold: Some(3),
            granularity: Granularity::Function,
            ..ExtractOptions::default()
        };
        let d = extract(&p, &t, &o).unwrap().diagram;
        let f = d.node_by_ident("f").unwrap().id();
        let aliases: Vec<_> = d.edges().filter(|e| e.kind == EdgeKind::Alias(3)).collect();
        assert_eq!(aliases.len(), 2);
        assert!(aliases.iter().all(|e| e.src == f));
        let t_main = d.timeline_by_ident("t_main").unwrap();
        assert_eq!(t_main.dispatches()[0].target, f);
        assert_ne!(t_main.dispatches()[1].target, f);
        assert!(validate(&d).is_empty());

        let o = ExtractOptions { alias_threshold: Some(4), ..o };
        let d = extract(&p, &t, &o).unwrap().diagram;
        assert_eq!(d.edges().filter(|e| matches!(e.kind, EdgeKind::Alias(_))).count(), 0);
    }

    #[test]
    fn spawn_gets_a_root_timeline_and_parallel_edge() {
        let src = "void w(int n) { } void main() { spawn w(1); }";
        let d = run(src, Granularity::Operator).diagram;
        let w = d.node_by_ident("w").unwrap().id();
        let t1 = d.timeline_by_ident("thread1").unwrap();
        assert!(t1.owner_node().is_none());
        assert_eq!(t1.dispatches()[0].target, w);
        assert!(d.edges().any(|e| e.kind == EdgeKind::ControlPar && e.dst == Endpoint::Node(w)));
    }

    #[test]
    fn compact_view_collapses_statements() {
        let (p, t) = compile(FUNCTION_A).unwrap();
        let b = t.entry(Some("B")).unwrap().0.to_string();
        let full = extract(&p, &t, &ExtractOptions::default()).unwrap().diagram;
        let stmts_of_b = |d: &Diagram| {
            d.nodes()
                .filter(|n| n.attr(ATTR_KEY).is_some_and(|k| k.starts_with("stmt:")))
                .filter(|n| n.attr(ATTR_FN) == Some(b.as_str()))
                .count()
        };
        assert_eq!(stmts_of_b(&full), 1);
        let d = extract_compact(&p, &t, &ExtractOptions::default(), "B").unwrap();
        assert_eq!(stmts_of_b(&d), 0);
        assert!(validate(&d).is_empty());
        assert_eq!(
            extract_compact(&p, &t, &ExtractOptions::default(), "nope"),
            Err(ExtractError::UnknownProcess(String::from("nope")))
        );
    }

    #[test]
    fn unknown_entry() {
        let (p, t) = compile(FUNCTION_A).unwrap();
        let o = ExtractOptions {
            entry: Some(String::from("zzz")),
            ..ExtractOptions::default()
        };
        assert_eq!(extract(&p, &t, &o).unwrap_err(), ExtractError::UnknownEntry(String::from("zzz")));
    }

    #[test]
    fn full_style_elides_to_simplified() {
        let (p, t) = compile(EVERYTHING).unwrap();
        for g in Granularity::ALL {
            let at = |c| {
                let o = ExtractOptions { granularity: g, call_style: c, ..ExtractOptions::default() };
                extract(&p, &t, &o).unwrap().diagram
            };
            let full = at(CallStyle::Full);
            let simple = at(CallStyle::Simplified);
            assert!(!isomorphic(&full, &simple));
            let (a, b) = (keyed_view(&elide_copy_machinery(&full)), keyed_view(&simple));
            let only_a: Vec<_> = a.difference(&b).collect();
            let only_b: Vec<_> = b.difference(&a).collect();
            assert!(only_a.is_empty() && only_b.is_empty(), "{g:?}\nelided only: {only_a:#?}\nsimplified only: {only_b:#?}");
        }
    }
}
