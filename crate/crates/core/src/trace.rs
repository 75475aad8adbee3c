//! Reference interpreter for Flow-C and the conformance check of an
//! extracted diagram against an execution trace.
//!
//! Threads run to completion at the point they are spawned, so a program
//! always produces the same trace. Every event carries the site of the
//! statement, call or block that caused it; the extractor records the
//! same sites on the nodes it builds, which is how the two are matched.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::extract::{ATTR_CALLS, ATTR_FINGERPRINT, ATTR_FN, ATTR_JUMPS, ATTR_KEY, ATTR_SITES, ATTR_STRAIGHT, ATTR_SYM};
use crate::flowc::ast::*;
use crate::flowc::{Storage, SymbolId, SymbolKind, SymbolTable};
use crate::graph::alias_classes;
use crate::model::{Diagram, EdgeId, EdgeKind, Endpoint, NodeId, TimelineId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// `caller` is `None` for the entry call and for spawned threads.
    Call { caller: Option<SymbolId>, callee: SymbolId },
    IndirectCall { pointer: SymbolId, callee: SymbolId },
    /// `transfer` marks a plain copy of another holder's value (a call
    /// result, a function address, an argument into a parameter).
    Write { holder: SymbolId, transfer: bool },
    Read { holder: SymbolId },
    Alloc { holder: SymbolId },
    Free { holder: SymbolId },
    Spawn { child: u32, callee: SymbolId },
    Throw,
    Catch { try_site: SiteId, handler: SiteId },
    Jump { label: SymbolId },
    EnterBlock { block: SiteId },
    ExitBlock { block: SiteId },
    Return { func: SymbolId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub thread: u32,
    pub site: SiteId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    /// Fingerprint of the symbol table of the program that ran.
    pub fingerprint: u64,
    pub events: Vec<Event>,
}

impl Trace {
    /// One event per line: seq, thread, event name, arguments, site.
    /// Fields are tab separated, symbols are written as `name#id`.
    pub fn to_text(&self, symbols: &SymbolTable) -> String {
        let tag = |s: SymbolId| symbols.tag(s);
        let mut out = String::new();
        for e in &self.events {
            let (name, args): (&str, Vec<String>) = match &e.kind {
                EventKind::Call { caller, callee } => (
                    "Call",
                    alloc::vec![caller.map_or(String::from("-"), tag), tag(*callee)],
                ),
                EventKind::IndirectCall { pointer, callee } => ("IndirectCall", alloc::vec![tag(*pointer), tag(*callee)]),
                EventKind::Write { holder, transfer } => {
                    let mut a = alloc::vec![tag(*holder)];
                    if *transfer {
                        a.push(String::from("transfer"));
                    }
                    ("Write", a)
                }
                EventKind::Read { holder } => ("Read", alloc::vec![tag(*holder)]),
                EventKind::Alloc { holder } => ("Alloc", alloc::vec![tag(*holder)]),
                EventKind::Free { holder } => ("Free", alloc::vec![tag(*holder)]),
                EventKind::Spawn { child, callee } => ("Spawn", alloc::vec![format!("thread{child}"), tag(*callee)]),
                EventKind::Throw => ("Throw", Vec::new()),
                EventKind::Catch { try_site, handler } => ("Catch", alloc::vec![format!("try@{try_site}"), format!("b{handler}")]),
                EventKind::Jump { label } => ("Jump", alloc::vec![tag(*label)]),
                EventKind::EnterBlock { block } => ("EnterBlock", alloc::vec![format!("b{block}")]),
                EventKind::ExitBlock { block } => ("ExitBlock", alloc::vec![format!("b{block}")]),
                EventKind::Return { func } => ("Return", alloc::vec![tag(*func)]),
            };
            out.push_str(&format!("{}\t{}\t{name}", e.seq, e.thread));
            for a in args {
                out.push('\t');
                out.push_str(&a);
            }
            out.push_str(&format!("\t@{}\n", e.site));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLimits {
    pub max_steps: u64,
    pub max_threads: u32,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            max_steps: 100_000,
            max_threads: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    NoEntry(Option<String>),
    EntryTakesParameters(String),
    StepLimit(u64),
    ThreadLimit(u32),
    UncaughtThrow(String),
    FreedRead(String),
    NullFunctionPointer(String),
    IndexOutOfRange { array: String, index: i64 },
    TypeMismatch(String),
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::NoEntry(Some(n)) => write!(f, "no entry point named `{n}`"),
            RuntimeError::NoEntry(None) => f.write_str("program has no `main` and no top-level block"),
            RuntimeError::EntryTakesParameters(n) => write!(f, "entry point `{n}` takes parameters"),
            RuntimeError::StepLimit(n) => write!(f, "step limit of {n} exceeded"),
            RuntimeError::ThreadLimit(n) => write!(f, "more than {n} threads"),
            RuntimeError::UncaughtThrow(v) => write!(f, "uncaught throw of {v}"),
            RuntimeError::FreedRead(n) => write!(f, "read of freed holder `{n}`"),
            RuntimeError::NullFunctionPointer(n) => write!(f, "call through null function pointer `{n}`"),
            RuntimeError::IndexOutOfRange { array, index } => write!(f, "index {index} out of range for `{array}`"),
            RuntimeError::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
        }
    }
}

impl core::error::Error for RuntimeError {}

/// A failed run, with the events produced up to the failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFailure {
    pub error: RuntimeError,
    pub partial: Trace,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Int(i64),
    Str(String),
    Fn(SymbolId),
    Addr(SymbolId),
    Null,
    Record(BTreeMap<String, Value>),
    Array(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Fn(s) | Value::Addr(s) => write!(f, "&{s}"),
            Value::Null => f.write_str("null"),
            Value::Record(_) => f.write_str("record"),
            Value::Array(_) => f.write_str("array"),
        }
    }
}

impl Value {
    fn truthy(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Str(s) => !s.is_empty(),
            Value::Null => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    value: Value,
    freed: bool,
}

enum Flow {
    Normal,
    Return,
    Break,
    Continue,
    Goto(SymbolId),
    Throw(Value),
}

type Exec<T> = Result<T, RuntimeError>;

struct Interp<'a> {
    t: &'a SymbolTable,
    funcs: BTreeMap<SymbolId, &'a FuncDecl>,
    blocks: BTreeMap<SymbolId, &'a Block>,
    limits: RunLimits,
    events: Vec<Event>,
    globals: BTreeMap<SymbolId, Slot>,
    frames: Vec<BTreeMap<SymbolId, Slot>>,
    func_stack: Vec<SymbolId>,
    thread: u32,
    threads: u32,
    steps: u64,
}

/// Runs the program from its entry point (see [`SymbolTable::entry`]).
pub fn run(program: &Program, symbols: &SymbolTable, entry: Option<&str>, limits: RunLimits) -> Result<Trace, RunFailure> {
    let mut i = Interp {
        t: symbols,
        funcs: BTreeMap::new(),
        blocks: BTreeMap::new(),
        limits,
        events: Vec::new(),
        globals: BTreeMap::new(),
        frames: Vec::new(),
        func_stack: Vec::new(),
        thread: 0,
        threads: 1,
        steps: 0,
    };
    let result = i.start(program, entry);
    let trace = Trace {
        fingerprint: symbols.fingerprint(),
        events: i.events,
    };
    match result {
        Ok(()) => Ok(trace),
        Err(error) => Err(RunFailure { error, partial: trace }),
    }
}

fn collect_funcs<'a>(b: &'a Block, t: &SymbolTable, out: &mut BTreeMap<SymbolId, &'a FuncDecl>) {
    for s in &b.stmts {
        if let StmtKind::Func(f) = &s.kind {
            if let Some(sym) = t.by_site(f.site) {
                out.insert(sym, f);
            }
        }
        for inner in s.blocks() {
            collect_funcs(inner, t, out);
        }
    }
}

impl<'a> Interp<'a> {
    fn emit(&mut self, site: SiteId, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            seq,
            thread: self.thread,
            site,
            kind,
        });
    }

    fn step(&mut self) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(RuntimeError::StepLimit(self.limits.max_steps));
        }
        Ok(())
    }

    fn start(&mut self, p: &'a Program, entry: Option<&str>) -> Exec<()> {
        for item in &p.items {
            match &item.kind {
                ItemKind::Func(f) => {
                    if let Some(sym) = self.t.by_site(f.site) {
                        self.funcs.insert(sym, f);
                    }
                    collect_funcs(&f.body, self.t, &mut self.funcs);
                }
                ItemKind::Block(b) => {
                    if let Some(sym) = self.t.by_site(b.block.site) {
                        self.blocks.insert(sym, &b.block);
                    }
                    collect_funcs(&b.block, self.t, &mut self.funcs);
                }
                _ => {}
            }
        }
        let entry_sym = self
            .t
            .entry(entry)
            .ok_or_else(|| RuntimeError::NoEntry(entry.map(String::from)))?;
        if !self.t.params(entry_sym).is_empty() {
            return Err(RuntimeError::EntryTakesParameters(self.t.get(entry_sym).name.clone()));
        }
        for item in &p.items {
            if let ItemKind::Global(s) = &item.kind {
                self.step()?;
                self.frames.push(BTreeMap::new());
                let flow = self.stmt(s)?;
                self.frames.pop();
                debug_assert!(matches!(flow, Flow::Normal));
            }
        }
        let site = self.t.get(entry_sym).site.unwrap_or(0);
        match self.invoke(entry_sym, None, Vec::new(), site)? {
            Err(v) => Err(RuntimeError::UncaughtThrow(v.to_string())),
            Ok(_) => Ok(()),
        }
    }

    fn default_value(&self, ty: Option<&Type>) -> Value {
        match ty {
            Some(Type::Int) | None => Value::Int(0),
            Some(Type::Str) => Value::Str(String::new()),
            Some(Type::Fn(_)) | Some(Type::Ptr(_)) => Value::Null,
            Some(Type::Array(inner, n)) => Value::Array((0..*n).map(|_| self.default_value(Some(inner))).collect()),
            Some(t @ Type::Named(_)) => match self.t.record_of(t) {
                Some(rec) => Value::Record(
                    self.t
                        .fields(rec)
                        .iter()
                        .map(|f| {
                            let f = self.t.get(*f);
                            (f.name.clone(), self.default_value(f.ty.as_ref()))
                        })
                        .collect(),
                ),
                None => Value::Int(0),
            },
        }
    }

    fn is_global(&self, sym: SymbolId) -> bool {
        let s = self.t.get(sym);
        s.owner.is_none() || s.storage == Some(Storage::Static)
    }

    fn slot(&mut self, sym: SymbolId) -> &mut Slot {
        let fresh = Slot {
            value: self.default_value(self.t.get(sym).ty.as_ref()),
            freed: false,
        };
        if self.is_global(sym) {
            self.globals.entry(sym).or_insert(fresh)
        } else {
            self.frames.last_mut().expect("frame").entry(sym).or_insert(fresh)
        }
    }

    fn load(&mut self, sym: SymbolId) -> Exec<Value> {
        let name = self.t.get(sym).name.clone();
        let slot = self.slot(sym);
        if slot.freed {
            return Err(RuntimeError::FreedRead(name));
        }
        Ok(slot.value.clone())
    }

    fn store(&mut self, sym: SymbolId, v: Value) {
        self.slot(sym).value = v;
    }

    fn current_func(&self) -> Option<SymbolId> {
        self.func_stack.last().copied()
    }

    /// Calls `f` with evaluated arguments. The inner result is `Err` when
    /// the callee throws.
    fn invoke(&mut self, f: SymbolId, caller: Option<SymbolId>, args: Vec<Value>, site: SiteId) -> Exec<Result<Value, Value>> {
        self.emit(site, EventKind::Call { caller, callee: f });
        let mut frame = BTreeMap::new();
        let params = self.t.params(f).to_vec();
        for (p, v) in params.iter().zip(args) {
            frame.insert(*p, Slot { value: v, freed: false });
        }
        self.frames.push(frame);
        self.func_stack.push(f);
        for p in &params {
            self.emit(site, EventKind::Write { holder: *p, transfer: true });
        }
        let body: &'a Block = match self.funcs.get(&f) {
            Some(d) => &d.body,
            None => self.blocks[&f],
        };
        let flow = self.block_stmts(body);
        let ret_sym = self.t.ret(f);
        let result = match flow {
            Ok(Flow::Throw(v)) => Err(v),
            Ok(_) => Ok(match ret_sym {
                Some(r) => self.frames.last().and_then(|fr| fr.get(&r)).map_or(Value::Int(0), |s| s.value.clone()),
                None => Value::Null,
            }),
            Err(e) => return Err(e),
        };
        self.emit(site, EventKind::Return { func: f });
        self.func_stack.pop();
        self.frames.pop();
        Ok(result)
    }

    /// Runs the statements of a block, resolving jumps to its labels.
    fn block_stmts(&mut self, b: &'a Block) -> Exec<Flow> {
        let mut i = 0;
        while i < b.stmts.len() {
            match self.stmt(&b.stmts[i])? {
                Flow::Normal => i += 1,
                Flow::Goto(l) => {
                    let here = b
                        .stmts
                        .iter()
                        .position(|s| matches!(&s.kind, StmtKind::Label(n) if self.t.resolve(n) == Some(l)));
                    match here {
                        Some(k) => i = k,
                        None => return Ok(Flow::Goto(l)),
                    }
                }
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn nested(&mut self, b: &'a Block) -> Exec<Flow> {
        self.emit(b.site, EventKind::EnterBlock { block: b.site });
        let flow = self.block_stmts(b)?;
        self.emit(b.site, EventKind::ExitBlock { block: b.site });
        Ok(flow)
    }

    fn call(&mut self, c: &'a Call, site: SiteId) -> Exec<Result<Value, Value>> {
        let mut args = Vec::new();
        for a in &c.args {
            match self.expr(a, site)? {
                Ok(v) => args.push(v),
                Err(thrown) => return Ok(Err(thrown)),
            }
        }
        let callee = self.callee(c)?;
        self.invoke(callee, self.current_func(), args, c.site)
    }

    fn callee(&mut self, c: &Call) -> Exec<SymbolId> {
        match &c.callee {
            Callee::Direct(n) => Ok(self.t.resolve(n).expect("resolved")),
            Callee::Indirect(n) => {
                let fp = self.t.resolve(n).expect("resolved");
                self.emit(c.site, EventKind::Read { holder: fp });
                match self.load(fp)? {
                    Value::Fn(f) => {
                        self.emit(c.site, EventKind::IndirectCall { pointer: fp, callee: f });
                        Ok(f)
                    }
                    _ => Err(RuntimeError::NullFunctionPointer(n.name.clone())),
                }
            }
        }
    }

    fn func_value(&self, n: &Ident) -> Option<SymbolId> {
        let s = self.t.resolve(n)?;
        (self.t.get(s).kind == SymbolKind::Func).then_some(s)
    }

    /// Evaluates an expression; `Err` inside means a callee threw.
    fn expr(&mut self, e: &'a Expr, site: SiteId) -> Exec<Result<Value, Value>> {
        Ok(Ok(match e {
            Expr::Int(v, _) => Value::Int(*v),
            Expr::Str(s, _) => Value::Str(s.clone()),
            Expr::AddrOf(n) => match self.func_value(n) {
                Some(f) => Value::Fn(f),
                None => Value::Addr(self.t.resolve(n).expect("resolved")),
            },
            Expr::Place(l) => {
                if let (LValue::Var(_), Some(f)) = (l, self.func_value(l.base())) {
                    return Ok(Ok(Value::Fn(f)));
                }
                let base = self.t.resolve(l.base()).expect("resolved");
                let index = match l {
                    LValue::Index(_, i) => match self.expr(i, site)? {
                        Ok(v) => Some(v),
                        Err(t) => return Ok(Err(t)),
                    },
                    _ => None,
                };
                self.emit(site, EventKind::Read { holder: base });
                let v = self.load(base)?;
                match l {
                    LValue::Var(_) => v,
                    LValue::Field(n, field) => match v {
                        Value::Record(mut m) => m.remove(&field.name).unwrap_or(Value::Int(0)),
                        _ => return Err(RuntimeError::TypeMismatch(format!("`{}` is not a record", n.name))),
                    },
                    LValue::Index(n, _) => {
                        let i = self.as_int(index.expect("index"))?;
                        match v {
                            Value::Array(items) => usize::try_from(i)
                                .ok()
                                .and_then(|k| items.get(k).cloned())
                                .ok_or(RuntimeError::IndexOutOfRange {
                                    array: n.name.clone(),
                                    index: i,
                                })?,
                            _ => return Err(RuntimeError::TypeMismatch(format!("`{}` is not an array", n.name))),
                        }
                    }
                }
            }
            Expr::Call(c) => {
                let r = self.call(c, site)?;
                match r {
                    Ok(v) => {
                        let callee_ret = self.last_callee_ret();
                        if let Some(r) = callee_ret {
                            self.emit(site, EventKind::Read { holder: r });
                        }
                        v
                    }
                    Err(t) => return Ok(Err(t)),
                }
            }
            Expr::Binary(l, op, r) => {
                let a = match self.expr(l, site)? {
                    Ok(v) => v,
                    Err(t) => return Ok(Err(t)),
                };
                let b = match self.expr(r, site)? {
                    Ok(v) => v,
                    Err(t) => return Ok(Err(t)),
                };
                binary(a, *op, b)?
            }
        }))
    }

    /// The `ret` symbol of the function that returned most recently.
    fn last_callee_ret(&self) -> Option<SymbolId> {
        self.events.iter().rev().find_map(|e| match e.kind {
            EventKind::Return { func } if e.thread == self.thread => Some(self.t.ret(func)),
            _ => None,
        })?
    }

    fn as_int(&self, v: Value) -> Exec<i64> {
        match v {
            Value::Int(i) => Ok(i),
            other => Err(RuntimeError::TypeMismatch(format!("expected an int, found {other}"))),
        }
    }

    fn is_transfer(&self, target: &LValue, value: &Expr) -> bool {
        if !matches!(target, LValue::Var(_)) {
            return false;
        }
        match value {
            Expr::Call(_) => true,
            Expr::Place(LValue::Var(n)) | Expr::AddrOf(n) => self.func_value(n).is_some(),
            _ => false,
        }
    }

    fn assign(&mut self, target: &'a LValue, value: Value, site: SiteId, transfer: bool) -> Exec<Option<Value>> {
        let base = self.t.resolve(target.base()).expect("resolved");
        match target {
            LValue::Var(_) => self.store(base, value),
            LValue::Field(n, field) => {
                let mut rec = self.load(base)?;
                match &mut rec {
                    Value::Record(m) => {
                        m.insert(field.name.clone(), value);
                    }
                    _ => return Err(RuntimeError::TypeMismatch(format!("`{}` is not a record", n.name))),
                }
                self.store(base, rec);
            }
            LValue::Index(n, i) => {
                let idx = match self.expr(i, site)? {
                    Ok(v) => self.as_int(v)?,
                    Err(t) => return Ok(Some(t)),
                };
                let mut arr = self.load(base)?;
                match &mut arr {
                    Value::Array(items) => {
                        let slot = usize::try_from(idx).ok().and_then(|k| items.get_mut(k)).ok_or(
                            RuntimeError::IndexOutOfRange {
                                array: n.name.clone(),
                                index: idx,
                            },
                        )?;
                        *slot = value;
                    }
                    _ => return Err(RuntimeError::TypeMismatch(format!("`{}` is not an array", n.name))),
                }
                self.store(base, arr);
            }
        }
        self.emit(site, EventKind::Write { holder: base, transfer });
        Ok(None)
    }

    fn stmt(&mut self, s: &'a Stmt) -> Exec<Flow> {
        self.step()?;
        macro_rules! eval {
            ($e:expr) => {
                match self.expr($e, s.site)? {
                    Ok(v) => v,
                    Err(t) => return Ok(Flow::Throw(t)),
                }
            };
        }
        match &s.kind {
            StmtKind::VarDecl(v) => {
                let sym = self.t.resolve(&v.name).expect("resolved");
                if v.is_static && self.globals.contains_key(&sym) {
                    return Ok(Flow::Normal);
                }
                let init = match &v.init {
                    None => self.default_value(Some(&v.ty)),
                    Some(i) => {
                        let val = eval!(i.expr());
                        match (i, self.default_value(Some(&v.ty)), val) {
                            // `T x(e)` with a scalar fills the first field
                            (Init::Ctor(_), Value::Record(mut m), scalar @ (Value::Int(_) | Value::Str(_))) => {
                                if let Some(k) = self.t.record_of(&v.ty).and_then(|r| self.t.fields(r).first().copied()) {
                                    m.insert(self.t.get(k).name.clone(), scalar);
                                }
                                Value::Record(m)
                            }
                            (_, _, val) => val,
                        }
                    }
                };
                self.slot(sym);
                self.store(sym, init);
                if let Some(i) = &v.init {
                    let transfer = self.is_transfer(&LValue::Var(v.name.clone()), i.expr());
                    self.emit(s.site, EventKind::Write { holder: sym, transfer });
                }
            }
            StmtKind::HeapAlloc { name, ty } => {
                let sym = self.t.resolve(name).expect("resolved");
                let v = self.default_value(Some(ty));
                let slot = self.slot(sym);
                slot.value = v;
                slot.freed = false;
                self.emit(s.site, EventKind::Alloc { holder: sym });
            }
            StmtKind::Delete(n) => {
                let sym = self.t.resolve(n).expect("resolved");
                self.slot(sym).freed = true;
                self.emit(s.site, EventKind::Free { holder: sym });
            }
            StmtKind::Assign { target, value } => {
                let v = eval!(value);
                let transfer = self.is_transfer(target, value);
                if let Some(t) = self.assign(target, v, s.site, transfer)? {
                    return Ok(Flow::Throw(t));
                }
            }
            StmtKind::Call(c) => {
                if let Err(t) = self.call(c, s.site)? {
                    return Ok(Flow::Throw(t));
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    let v = eval!(e);
                    if let Some(r) = self.current_func().and_then(|f| self.t.ret(f)) {
                        self.store(r, v);
                        self.emit(s.site, EventKind::Write { holder: r, transfer: false });
                    }
                }
                return Ok(Flow::Return);
            }
            StmtKind::If { cond, then, els } => {
                let c = eval!(cond);
                if c.truthy() {
                    return self.nested(then);
                } else if let Some(e) = els {
                    return self.nested(e);
                }
            }
            StmtKind::While { cond, body } => loop {
                self.step()?;
                let c = eval!(cond);
                if !c.truthy() {
                    break;
                }
                match self.nested(body)? {
                    Flow::Normal | Flow::Continue => {}
                    Flow::Break => break,
                    other => return Ok(other),
                }
            },
            StmtKind::Goto(l) => {
                let label = self.t.resolve(l).expect("resolved");
                self.emit(s.site, EventKind::Jump { label });
                return Ok(Flow::Goto(label));
            }
            StmtKind::Label(_) | StmtKind::Func(_) => {}
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Try { body, var, handler } => {
                return match self.nested(body)? {
                    Flow::Throw(v) => {
                        self.emit(s.site, EventKind::Catch { try_site: s.site, handler: handler.site });
                        self.emit(handler.site, EventKind::EnterBlock { block: handler.site });
                        let sym = self.t.resolve(var).expect("resolved");
                        self.slot(sym);
                        self.store(sym, v);
                        self.emit(handler.site, EventKind::Write { holder: sym, transfer: false });
                        let flow = self.block_stmts(handler)?;
                        self.emit(handler.site, EventKind::ExitBlock { block: handler.site });
                        Ok(flow)
                    }
                    other => Ok(other),
                };
            }
            StmtKind::Throw(e) => {
                let v = eval!(e);
                self.emit(s.site, EventKind::Throw);
                return Ok(Flow::Throw(v));
            }
            StmtKind::Spawn(c) => {
                let mut args = Vec::new();
                for a in &c.args {
                    args.push(eval!(a));
                }
                let callee = self.callee(c)?;
                if self.threads >= self.limits.max_threads {
                    return Err(RuntimeError::ThreadLimit(self.limits.max_threads));
                }
                let child = self.threads;
                self.threads += 1;
                self.emit(s.site, EventKind::Spawn { child, callee });
                let parent = self.thread;
                let saved = core::mem::take(&mut self.func_stack);
                self.thread = child;
                let r = self.invoke(callee, None, args, c.site)?;
                self.thread = parent;
                self.func_stack = saved;
                if let Err(v) = r {
                    return Err(RuntimeError::UncaughtThrow(v.to_string()));
                }
            }
            StmtKind::Block(b) => return self.nested(b),
        }
        Ok(Flow::Normal)
    }
}

fn binary(a: Value, op: BinOp, b: Value) -> Exec<Value> {
    Ok(match (op, a, b) {
        (BinOp::Add, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(y)),
        (BinOp::Add, Value::Str(x), Value::Str(y)) => Value::Str(x + &y),
        (BinOp::Add, Value::Str(x), Value::Int(y)) => Value::Str(format!("{x}{y}")),
        (BinOp::Sub, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_sub(y)),
        (BinOp::Lt, Value::Int(x), Value::Int(y)) => Value::Int(i64::from(x < y)),
        (BinOp::Lt, Value::Str(x), Value::Str(y)) => Value::Int(i64::from(x < y)),
        (BinOp::Eq, x, y) => Value::Int(i64::from(x == y)),
        (op, x, y) => {
            return Err(RuntimeError::TypeMismatch(format!("{x} {} {y}", op.symbol())));
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    /// A call without a dispatch to the callee.
    Call,
    /// Calls from one timeline out of rank order.
    Order,
    Write,
    Read,
    Alloc,
    Free,
    Spawn,
    Catch,
    Jump,
    /// Straight-line programs: executed dispatches differ from the
    /// diagram's.
    Multiset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    /// Offending event, if the discrepancy is about one.
    pub seq: Option<u64>,
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(s) => write!(f, "event {s}: {:?}: {}", self.check, self.message),
            None => write!(f, "{:?}: {}", self.check, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConformError {
    /// The diagram was extracted from a different program than the one
    /// that ran (or was not extracted at all).
    FingerprintMismatch { diagram: Option<String>, trace: u64 },
}

impl fmt::Display for ConformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformError::FingerprintMismatch { diagram: Some(d), trace } => {
                write!(f, "diagram is from program {d}, trace from {trace:016x}")
            }
            ConformError::FingerprintMismatch { diagram: None, trace } => {
                write!(f, "diagram carries no program fingerprint (trace is from {trace:016x})")
            }
        }
    }
}

impl core::error::Error for ConformError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConformOptions {
    /// Also require a `goto`'s returning line to land on the label's
    /// exact rank, not just on its timeline.
    pub strict_goto: bool,
}

/// A diagram element that some executed event relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Element {
    Dispatch(TimelineId, u32),
    Edge(EdgeId),
}

/// Checks that every event of `trace` is represented in `d`. For
/// straight-line programs every call dispatch of each executed
/// activation must also have run exactly once.
pub fn conform(d: &Diagram, trace: &Trace, options: ConformOptions) -> Result<Vec<Discrepancy>, ConformError> {
    Ok(Checker::new(d, trace)?.run(trace, options).0)
}

/// The dispatches and edges that justify executed calls, non-transfer
/// writes, allocations, frees, spawns and catches. Deleting any of them
/// makes [`conform`] report a discrepancy.
pub fn justifying_elements(d: &Diagram, trace: &Trace) -> Result<BTreeSet<Element>, ConformError> {
    Ok(Checker::new(d, trace)?.run(trace, ConformOptions::default()).1)
}

fn triples(v: &str) -> impl Iterator<Item = (SiteId, TimelineId, u32)> + '_ {
    v.split_whitespace().filter_map(|t| {
        let mut it = t.split(':').map(|x| x.parse::<u32>().ok());
        Some((it.next()??, TimelineId(it.next()??), it.next()??))
    })
}

struct Frame {
    func: Option<SymbolId>,
    last: BTreeMap<TimelineId, u32>,
    matched: Vec<(TimelineId, u32)>,
}

struct Checker<'d> {
    d: &'d Diagram,
    cover: BTreeMap<SiteId, NodeId>,
    calls: BTreeMap<SiteId, (TimelineId, u32)>,
    jumps: BTreeMap<SiteId, (TimelineId, u32)>,
    holders: BTreeMap<u32, Vec<NodeId>>,
    fn_node: BTreeMap<u32, NodeId>,
    canon: BTreeMap<NodeId, NodeId>,
    exact: bool,
}

impl<'d> Checker<'d> {
    fn new(d: &'d Diagram, trace: &Trace) -> Result<Self, ConformError> {
        let fp = d.nodes().find_map(|n| n.attr(ATTR_FINGERPRINT));
        if fp != Some(format!("{:016x}", trace.fingerprint).as_str()) {
            return Err(ConformError::FingerprintMismatch {
                diagram: fp.map(String::from),
                trace: trace.fingerprint,
            });
        }
        let mut c = Checker {
            d,
            cover: BTreeMap::new(),
            calls: BTreeMap::new(),
            jumps: BTreeMap::new(),
            holders: BTreeMap::new(),
            fn_node: BTreeMap::new(),
            canon: alias_classes(d),
            exact: d.nodes().any(|n| n.attr(ATTR_STRAIGHT) == Some("1")),
        };
        for n in d.nodes() {
            for s in n.attr(ATTR_SITES).unwrap_or("").split_whitespace() {
                if let Ok(s) = s.parse() {
                    c.cover.insert(s, n.id());
                }
            }
            for (s, t, r) in triples(n.attr(ATTR_CALLS).unwrap_or("")) {
                c.calls.insert(s, (t, r));
            }
            for (s, t, r) in triples(n.attr(ATTR_JUMPS).unwrap_or("")) {
                c.jumps.insert(s, (t, r));
            }
            if let Some(sym) = n.attr(ATTR_SYM).and_then(|v| v.parse().ok()) {
                if n.is_holder() {
                    c.holders.entry(sym).or_default().push(n.id());
                }
            }
            if let Some(sym) = n.attr(ATTR_KEY).and_then(|k| k.strip_prefix("fn:")).and_then(|v| v.parse().ok()) {
                c.fn_node.insert(sym, n.id());
            }
        }
        Ok(c)
    }

    fn canonical(&self, n: NodeId) -> NodeId {
        self.canon.get(&n).copied().unwrap_or(n)
    }

    fn is_call_target(&self, n: NodeId) -> bool {
        let key = self.d.node(self.canonical(n)).and_then(|n| n.attr(ATTR_KEY)).unwrap_or("");
        key.starts_with("fn:") || key.starts_with("unresolved:")
    }

    /// Timelines whose dispatches belong to activations of `f`.
    fn timelines_of(&self, f: SymbolId) -> BTreeSet<TimelineId> {
        let tag = f.0.to_string();
        self.d
            .timelines()
            .filter(|t| {
                t.owner_node()
                    .and_then(|o| self.d.node(o))
                    .is_some_and(|o| o.attr(ATTR_FN) == Some(tag.as_str()))
            })
            .map(|t| t.id())
            .collect()
    }

    fn find_edge(&self, kinds: &[EdgeKind], src: Option<NodeId>, dst: &[NodeId]) -> Option<EdgeId> {
        self.d
            .edges()
            .find(|e| {
                kinds.contains(&e.kind)
                    && src.is_none_or(|s| e.src == s)
                    && e.dst.node().is_some_and(|n| dst.contains(&n))
            })
            .map(|e| e.id)
    }

    fn run(&self, trace: &Trace, options: ConformOptions) -> (Vec<Discrepancy>, BTreeSet<Element>) {
        let mut out = Vec::new();
        let mut used = BTreeSet::new();
        let mut stacks: BTreeMap<u32, Vec<Frame>> = BTreeMap::new();
        let mut root_matched: BTreeSet<(TimelineId, u32)> = BTreeSet::new();
        let no_holders = Vec::new();
        for ev in &trace.events {
            let mut fail = |check: Check, message: String| {
                out.push(Discrepancy {
                    seq: Some(ev.seq),
                    check,
                    message,
                })
            };
            let stack = stacks.entry(ev.thread).or_insert_with(|| {
                alloc::vec![Frame {
                    func: None,
                    last: BTreeMap::new(),
                    matched: Vec::new(),
                }]
            });
            let cover = self.cover.get(&ev.site).copied();
            let holders_of = |sym: SymbolId| self.holders.get(&sym.0).unwrap_or(&no_holders);
            match &ev.kind {
                EventKind::Call { caller, callee } => {
                    let frame = stack.last_mut().expect("base frame");
                    let Some(&(tl, rank)) = self.calls.get(&ev.site) else {
                        fail(Check::Call, format!("no dispatch recorded for the call at site {}", ev.site));
                        stack.push(Frame { func: Some(*callee), last: BTreeMap::new(), matched: Vec::new() });
                        continue;
                    };
                    let timeline = self.d.timeline(tl);
                    let target = timeline.and_then(|t| t.dispatches().iter().find(|x| x.mark.rank == rank)).map(|x| x.target);
                    let want = self.fn_node.get(&callee.0).map(|&n| self.canonical(n));
                    match target {
                        None => fail(Check::Call, format!("dispatch {}:{rank} for the call at site {} is missing", tl.0, ev.site)),
                        Some(t) if Some(self.canonical(t)) != want => {
                            fail(Check::Call, format!("dispatch {}:{rank} does not lead to the callee", tl.0))
                        }
                        Some(_) => {
                            used.insert(Element::Dispatch(tl, rank));
                            let owner_fn = timeline
                                .and_then(|t| t.owner_node())
                                .and_then(|o| self.d.node(o))
                                .and_then(|o| o.attr(ATTR_FN));
                            match (caller, owner_fn) {
                                (Some(c), Some(o)) if o == c.0.to_string() => {}
                                (None, None) => {
                                    root_matched.insert((tl, rank));
                                }
                                _ => fail(Check::Call, format!("dispatch {}:{rank} is not on a timeline of the caller", tl.0)),
                            }
                            if let Some(&prev) = frame.last.get(&tl) {
                                if rank < prev {
                                    fail(Check::Order, format!("rank {rank} after rank {prev} on timeline {}", tl.0));
                                }
                            }
                            frame.last.insert(tl, rank);
                            frame.matched.push((tl, rank));
                        }
                    }
                    stack.push(Frame { func: Some(*callee), last: BTreeMap::new(), matched: Vec::new() });
                }
                EventKind::Return { func } => {
                    let Some(frame) = stack.pop() else { continue };
                    if self.exact && frame.func == Some(*func) {
                        let tls = self.timelines_of(*func);
                        let mut expected: Vec<(TimelineId, u32)> = self
                            .d
                            .timelines()
                            .filter(|t| tls.contains(&t.id()))
                            .flat_map(|t| {
                                t.dispatches()
                                    .iter()
                                    .filter(|x| self.is_call_target(x.target))
                                    .map(move |x| (t.id(), x.mark.rank))
                            })
                            .collect();
                        let mut got: Vec<(TimelineId, u32)> =
                            frame.matched.into_iter().filter(|(t, _)| tls.contains(t)).collect();
                        expected.sort_unstable();
                        got.sort_unstable();
                        if expected != got {
                            fail(
                                Check::Multiset,
                                format!("activation ran dispatches {got:?}, diagram has {expected:?}"),
                            );
                        }
                    }
                }
                EventKind::IndirectCall { .. } | EventKind::Throw => {}
                EventKind::Write { holder, transfer } => {
                    let hs = holders_of(*holder);
                    if *transfer {
                        let from_holder = self.d.edges().any(|e| {
                            e.kind == EdgeKind::DataFlow
                                && self.d.node(e.src).is_some_and(|n| n.is_holder())
                                && e.dst.node().is_some_and(|n| hs.contains(&n))
                        });
                        if !from_holder {
                            fail(Check::Write, format!("no flow into holder of s{}", holder.0));
                        }
                    } else {
                        let kinds = [EdgeKind::DataUpdate, EdgeKind::DataFlow, EdgeKind::Create];
                        match cover.and_then(|c| self.find_edge(&kinds, Some(c), hs)) {
                            Some(e) => {
                                used.insert(Element::Edge(e));
                            }
                            None => fail(Check::Write, format!("no update of holder of s{} from site {}", holder.0, ev.site)),
                        }
                    }
                }
                EventKind::Read { holder } => {
                    let hs = holders_of(*holder);
                    let ok = self.d.edges().any(|e| {
                        matches!(e.kind, EdgeKind::DataRead | EdgeKind::DataFlow) && hs.contains(&e.src)
                    });
                    if !ok {
                        fail(Check::Read, format!("nothing reads holder of s{}", holder.0));
                    }
                }
                EventKind::Alloc { holder } | EventKind::Free { holder } => {
                    let (kind, check) = match ev.kind {
                        EventKind::Alloc { .. } => (EdgeKind::Create, Check::Alloc),
                        _ => (EdgeKind::Destroy, Check::Free),
                    };
                    match cover.and_then(|c| self.find_edge(&[kind], Some(c), holders_of(*holder))) {
                        Some(e) => {
                            used.insert(Element::Edge(e));
                        }
                        None => fail(check, format!("no {kind:?} edge for holder of s{}", holder.0)),
                    }
                }
                EventKind::Spawn { callee, .. } => {
                    let want = self.fn_node.get(&callee.0).map(|&n| self.canonical(n));
                    let par = self.d.edges().find(|e| {
                        e.kind == EdgeKind::ControlPar
                            && Some(e.src) == cover
                            && e.dst.node().map(|n| self.canonical(n)) == want
                    });
                    let rooted = self.d.timelines().any(|t| {
                        t.owner_node().is_none() && t.dispatches().iter().any(|x| Some(self.canonical(x.target)) == want)
                    });
                    match par {
                        Some(e) if rooted => {
                            used.insert(Element::Edge(e.id));
                        }
                        Some(_) => fail(Check::Spawn, String::from("spawned function is on no root timeline")),
                        None => fail(Check::Spawn, String::from("no parallel control edge to the spawned function")),
                    }
                }
                EventKind::Catch { try_site, handler } => {
                    let from = self.cover.get(try_site).copied();
                    let to = self.cover.get(handler).copied();
                    let e = match (from, to) {
                        (Some(f), Some(t)) => self.find_edge(&[EdgeKind::ExceptionCtl], Some(f), &[t]),
                        _ => None,
                    };
                    match e {
                        Some(e) => {
                            used.insert(Element::Edge(e));
                        }
                        None => fail(Check::Catch, format!("no exception edge from the try at site {try_site}")),
                    }
                }
                EventKind::Jump { .. } => {
                    if let Some(frame) = stack.last_mut() {
                        frame.last.clear();
                    }
                    let Some(&(tl, rank)) = self.jumps.get(&ev.site) else {
                        fail(Check::Jump, format!("no returning line recorded for the jump at site {}", ev.site));
                        continue;
                    };
                    let ok = self.d.edges().any(|e| {
                        e.kind == EdgeKind::ControlReturn
                            && Some(e.src) == cover
                            && matches!(e.dst, Endpoint::TimelinePos(t, r) if t == tl && (!options.strict_goto || r == rank))
                    });
                    if !ok {
                        fail(Check::Jump, format!("no returning line to timeline {}", tl.0));
                    }
                }
                EventKind::EnterBlock { .. } | EventKind::ExitBlock { .. } => {
                    if let (Some(owner), Some(frame)) = (cover, stack.last_mut()) {
                        for t in self.d.timelines_owned_by(owner) {
                            frame.last.remove(&t.id());
                        }
                    }
                }
            }
        }
        if self.exact {
            for t in self.d.timelines().filter(|t| t.owner_node().is_none()) {
                for x in t.dispatches() {
                    if !root_matched.contains(&(t.id(), x.mark.rank)) {
                        out.push(Discrepancy {
                            seq: None,
                            check: Check::Multiset,
                            message: format!("root dispatch {}:{} never ran", t.id().0, x.mark.rank),
                        });
                    }
                }
            }
        }
        (out, used)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{extract, CallStyle, ExtractOptions, Granularity, Grouping};
    use crate::flowc::compile;

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

    fn names(t: &Trace, s: &SymbolTable) -> Vec<String> {
        t.to_text(s)
            .lines()
            .map(|l| l.split('\t').skip(2).take_while(|f| !f.starts_with('@')).collect::<Vec<_>>().join(" "))
            .collect()
    }

    fn all_options() -> Vec<ExtractOptions> {
        let mut v = Vec::new();
        for g in Granularity::ALL {
            for c in [CallStyle::Simplified, CallStyle::Full] {
                for grouping in [Grouping::Has, Grouping::Euler] {
                    for alias in [None, Some(2)] {
                        v.push(ExtractOptions {
                            granularity: g,
                            call_style: c,
                            grouping,
                            alias_threshold: alias,
                            ..ExtractOptions::default()
                        });
                    }
                }
            }
        }
        v
    }

    #[test]
    fn empty_main() {
        let (p, s) = compile("void main() { }").unwrap();
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        assert_eq!(names(&t, &s), ["Call - main#0", "Return main#0"]);
    }

    #[test]
    fn inner_call_runs_first() {
        let (p, s) = compile("int f1(int x) { return x; } int f2(int y) { return y; } void main() { int x = 1; f2(f1(x)); }").unwrap();
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        let calls: Vec<String> = names(&t, &s).into_iter().filter(|l| l.starts_with("Call")).collect();
        assert_eq!(calls.len(), 3);
        assert!(calls[1].contains(" f1#"), "{calls:?}");
        assert!(calls[2].contains(" f2#"), "{calls:?}");
    }

    #[test]
    fn callback_events() {
        let (p, s) = compile("void func(int i) { int x = i; } void main() { fn(int) fp; fp = func; (*fp)(5); }").unwrap();
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        let n = names(&t, &s);
        let at = n.iter().position(|l| l.starts_with("IndirectCall")).unwrap();
        assert!(n[at - 2].starts_with("Write fp#") && n[at - 2].ends_with("transfer"), "{n:?}");
        assert!(n[at].ends_with("func#0"));
        assert!(n[at + 1].starts_with("Call main#"));
        assert!(n[at + 2].starts_with("Write i#"));
        assert!(n[at + 3].starts_with("Read i#"));
        assert!(n[at + 4].starts_with("Write x#"));
        assert!(n[at + 5].starts_with("Return func#"));
    }

    #[test]
    fn runs_are_deterministic() {
        let (p, s) = compile(EVERYTHING).unwrap();
        let a = run(&p, &s, None, RunLimits::default()).unwrap().to_text(&s);
        let b = run(&p, &s, None, RunLimits::default()).unwrap().to_text(&s);
        assert_eq!(a, b);
        assert!(a.contains("\tSpawn\tthread1\t"));
        assert!(a.contains("\tCatch\t"));
        assert!(a.contains("\tJump\tL#"));
    }

    #[test]
    fn runtime_errors() {
        let err = |src: &str, limits| run(&compile(src).unwrap().0, &compile(src).unwrap().1, None, limits).unwrap_err().error;
        let d = RunLimits::default();
        assert_eq!(err("void main() { L: goto L; }", d), RuntimeError::StepLimit(100_000));
        assert!(matches!(err("void main() { throw 1; }", d), RuntimeError::UncaughtThrow(_)));
        assert!(matches!(err("record r { int v; } void main() { q = new r; delete q; int x = q.v; }", d), RuntimeError::FreedRead(_)));
        assert!(matches!(err("void main() { fn() fp; (*fp)(); }", d), RuntimeError::NullFunctionPointer(_)));
        assert_eq!(err("void f() { }", d), RuntimeError::NoEntry(None));
        let two = RunLimits { max_threads: 2, ..d };
        assert_eq!(err("void w() { } void main() { spawn w(); spawn w(); }", two), RuntimeError::ThreadLimit(2));
        let (p, s) = compile("void main(int x) { }").unwrap();
        assert!(matches!(run(&p, &s, None, d).unwrap_err().error, RuntimeError::EntryTakesParameters(_)));
    }

    #[test]
    fn extraction_conforms_in_every_configuration() {
        for src in [EVERYTHING, "void f() { } void main() { f(); f(); f(); }", "void main() { }"] {
            let (p, s) = compile(src).unwrap();
            let t = run(&p, &s, None, RunLimits::default()).unwrap();
            for o in all_options() {
                let d = extract(&p, &s, &o).unwrap().diagram;
                let v = conform(&d, &t, ConformOptions { strict_goto: true }).unwrap();
                assert!(v.is_empty(), "{o:?}: {v:#?}");
            }
        }
    }

    #[test]
    fn other_program_is_rejected() {
        let (p, s) = compile("void main() { }").unwrap();
        let (q, r) = compile("void main() { int x; }").unwrap();
        let d = extract(&p, &s, &ExtractOptions::default()).unwrap().diagram;
        let t = run(&q, &r, None, RunLimits::default()).unwrap();
        assert!(matches!(conform(&d, &t, ConformOptions::default()), Err(ConformError::FingerprintMismatch { .. })));
    }

    #[test]
    fn every_justifying_element_is_needed() {
        let (p, s) = compile(EVERYTHING).unwrap();
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        for o in all_options() {
            let d = extract(&p, &s, &o).unwrap().diagram;
            let elements = justifying_elements(&d, &t).unwrap();
            assert!(elements.len() > 10);
            for el in elements {
                let mut m = d.clone();
                match el {
                    Element::Edge(e) => {
                        m.remove_edge(e);
                    }
                    Element::Dispatch(tl, rank) => {
                        let i = m.timeline(tl).unwrap().dispatches().iter().position(|x| x.mark.rank == rank).unwrap();
                        m.remove_dispatch(tl, i);
                    }
                }
                let v = conform(&m, &t, ConformOptions::default()).unwrap();
                assert!(!v.is_empty(), "{o:?}: removing {el:?} went unnoticed");
            }
        }
    }

    #[test]
    fn straight_line_detects_a_missing_run() {
        // `f` is never called, but its timeline belongs to no activation,
        // so only dispatches of executed functions count
        let (p, s) = compile("void g() { } void f() { g(); } void main() { g(); }").unwrap();
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        let d = extract(&p, &s, &ExtractOptions::default()).unwrap().diagram;
        assert_eq!(conform(&d, &t, ConformOptions::default()).unwrap(), []);
        // a dispatch the program never makes breaks exact equality
        let mut m = d.clone();
        let main = m.node_by_ident("main").unwrap().id();
        let g = m.node_by_ident("g").unwrap().id();
        let tl = m.timelines_owned_by(main).next().unwrap().id();
        m.dispatch_next(tl, g).unwrap();
        let v = conform(&m, &t, ConformOptions::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].check, Check::Multiset);
    }
}
