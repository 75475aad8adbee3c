//! Name resolution and storage classes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::ast::*;
use super::lexer::Span;
use super::FlowError;
use crate::fnv::Fnv64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SymbolKind {
    Var,
    Param,
    /// The implicit result slot of a non-void function.
    Ret,
    Func,
    /// A free-standing top-level block; runnable as an entry point.
    Block,
    Record,
    Field,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Storage {
    Static,
    Stack,
    Heap,
    ConstFnAddress,
}

impl Storage {
    pub fn keyword(self) -> &'static str {
        match self {
            Storage::Static => "static",
            Storage::Stack => "stack",
            Storage::Heap => "heap",
            Storage::ConstFnAddress => "const",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub id: SymbolId,
    pub name: String,
    pub kind: SymbolKind,
    pub storage: Option<Storage>,
    pub ty: Option<Type>,
    pub span: Span,
    /// Use id of the declaring identifier (none for `ret`).
    pub decl_use: Option<UseId>,
    /// Function or top-level block whose frame holds the symbol; `None`
    /// for globals, functions, records and fields.
    pub owner: Option<SymbolId>,
    /// Declaring statement for variables and labels, the declaration
    /// site for functions and blocks.
    pub site: Option<SiteId>,
    /// Innermost block containing the declaration.
    pub scope: Option<SiteId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    uses: BTreeMap<UseId, SymbolId>,
    by_site: BTreeMap<SiteId, SymbolId>,
    params: BTreeMap<SymbolId, Vec<SymbolId>>,
    rets: BTreeMap<SymbolId, SymbolId>,
    fields: BTreeMap<SymbolId, Vec<SymbolId>>,
    entries: Vec<SymbolId>,
}

impl SymbolTable {
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn get(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    /// The symbol an identifier occurrence refers to.
    pub fn resolve(&self, ident: &Ident) -> Option<SymbolId> {
        self.uses.get(&ident.use_id).copied()
    }

    pub fn uses(&self) -> &BTreeMap<UseId, SymbolId> {
        &self.uses
    }

    /// Function or block symbol declared at `site`.
    pub fn by_site(&self, site: SiteId) -> Option<SymbolId> {
        self.by_site.get(&site).copied()
    }

    pub fn params(&self, func: SymbolId) -> &[SymbolId] {
        self.params.get(&func).map_or(&[], |v| v.as_slice())
    }

    pub fn ret(&self, func: SymbolId) -> Option<SymbolId> {
        self.rets.get(&func).copied()
    }

    pub fn fields(&self, record: SymbolId) -> &[SymbolId] {
        self.fields.get(&record).map_or(&[], |v| v.as_slice())
    }

    /// Record symbol named by a type, if any.
    pub fn record_of(&self, ty: &Type) -> Option<SymbolId> {
        ty.record_name().and_then(|n| self.resolve(n))
    }

    /// Top-level functions and blocks in declaration order.
    pub fn entries(&self) -> &[SymbolId] {
        &self.entries
    }

    /// The entry point: `name` if given, else `main`, else the first
    /// top-level block.
    pub fn entry(&self, name: Option<&str>) -> Option<SymbolId> {
        let find = |n: &str| self.entries.iter().copied().find(|s| self.get(*s).name == n);
        match name {
            Some(n) => find(n),
            None => find("main").or_else(|| {
                self.entries
                    .iter()
                    .copied()
                    .find(|s| self.get(*s).kind == SymbolKind::Block)
            }),
        }
    }

    /// `name#id`, the spelling used in traces.
    pub fn tag(&self, id: SymbolId) -> String {
        format!("{}#{}", self.get(id).name, id.0)
    }

    /// Hash of every symbol and every resolved use. Two programs that
    /// differ in any declaration or binding get different fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv64::new();
        for s in &self.symbols {
            h.write(&s.id.0.to_le_bytes());
            h.write_str(&s.name);
            h.write(&[s.kind as u8, s.storage.map_or(0xee, |x| x as u8)]);
            h.write(&s.site.unwrap_or(u32::MAX).to_le_bytes());
        }
        for (u, s) in &self.uses {
            h.write(&u.to_le_bytes());
            h.write(&s.0.to_le_bytes());
        }
        h.finish()
    }
}

/// Resolves every identifier and assigns storage classes.
pub fn resolve_symbols(p: &Program) -> Result<SymbolTable, Vec<FlowError>> {
    let mut r = Resolver::default();
    r.program(p);
    if r.errors.is_empty() {
        Ok(r.table)
    } else {
        Err(r.errors)
    }
}

#[derive(Default)]
struct FuncCtx {
    sym: Option<SymbolId>,
    returns_value: bool,
    loops: u32,
    /// label name -> (symbol, block holding it)
    labels: BTreeMap<String, (SymbolId, SiteId)>,
    /// enclosing blocks inside this function, outermost first
    blocks: Vec<SiteId>,
}

#[derive(Default)]
struct Resolver {
    table: SymbolTable,
    scopes: Vec<BTreeMap<String, SymbolId>>,
    records: BTreeMap<String, SymbolId>,
    funcs: Vec<FuncCtx>,
    errors: Vec<FlowError>,
    in_global_init: bool,
}

impl Resolver {
    fn err(&mut self, span: Span, message: String) {
        self.errors.push(FlowError { span, message });
    }

    fn add(&mut self, mut s: Symbol) -> SymbolId {
        let id = SymbolId(self.table.symbols.len() as u32);
        s.id = id;
        if let Some(u) = s.decl_use {
            self.table.uses.insert(u, id);
        }
        self.table.symbols.push(s);
        id
    }

    fn sym(&self, name: &Ident, kind: SymbolKind, storage: Option<Storage>, ty: Option<Type>) -> Symbol {
        Symbol {
            id: SymbolId(0),
            name: name.name.clone(),
            kind,
            storage,
            ty,
            span: name.span,
            decl_use: Some(name.use_id),
            owner: self.funcs.last().and_then(|f| f.sym),
            site: None,
            scope: self.funcs.last().and_then(|f| f.blocks.last().copied()),
        }
    }

    /// Declares in the innermost scope, reporting duplicates.
    fn declare(&mut self, name: &Ident, s: Symbol) -> SymbolId {
        if let Some(prev) = self.scopes.last().and_then(|sc| sc.get(&name.name)) {
            let prev = *prev;
            let line = self.table.get(prev).span.line;
            self.err(
                name.span,
                format!("duplicate declaration of `{}` (first declared on line {line})", name.name),
            );
        }
        let id = self.add(s);
        self.scopes.last_mut().expect("scope").insert(name.name.clone(), id);
        id
    }

    fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn use_ident(&mut self, n: &Ident) -> Option<SymbolId> {
        let Some(id) = self.lookup(&n.name) else {
            self.err(n.span, format!("undeclared identifier `{}`", n.name));
            return None;
        };
        self.table.uses.insert(n.use_id, id);
        let s = self.table.get(id);
        let current = self.funcs.last().and_then(|f| f.sym);
        if s.owner.is_some() && s.owner != current {
            self.err(
                n.span,
                format!("`{}` belongs to an enclosing function and cannot be captured", n.name),
            );
        }
        Some(id)
    }

    fn ty(&mut self, t: &Type) {
        match t {
            Type::Int | Type::Str => {}
            Type::Named(n) => match self.records.get(&n.name) {
                Some(id) => {
                    self.table.uses.insert(n.use_id, *id);
                }
                None => self.err(n.span, format!("unknown type `{}`", n.name)),
            },
            Type::Array(inner, _) | Type::Ptr(inner) => self.ty(inner),
            Type::Fn(ps) => {
                for p in ps {
                    self.ty(p);
                }
            }
        }
    }

    fn storage_for(&self, is_static: bool) -> Storage {
        if is_static || self.funcs.is_empty() {
            Storage::Static
        } else {
            Storage::Stack
        }
    }

    fn program(&mut self, p: &Program) {
        self.scopes.push(BTreeMap::new());
        // records and functions are visible everywhere
        for item in &p.items {
            if let ItemKind::Record(r) = &item.kind {
                if self.records.contains_key(&r.name.name) {
                    self.err(r.name.span, format!("duplicate record `{}`", r.name.name));
                    continue;
                }
                let id = self.add(self.sym(&r.name, SymbolKind::Record, None, None));
                self.records.insert(r.name.name.clone(), id);
            }
        }
        for item in &p.items {
            if let ItemKind::Record(r) = &item.kind {
                let Some(rid) = self.table.resolve(&r.name) else { continue };
                let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
                let mut ids = Vec::new();
                for f in &r.fields {
                    self.ty(&f.ty);
                    if seen.insert(&f.name.name, ()).is_some() {
                        self.err(f.name.span, format!("duplicate field `{}`", f.name.name));
                    }
                    let mut s = self.sym(&f.name, SymbolKind::Field, None, Some(f.ty.clone()));
                    s.owner = None;
                    ids.push(self.add(s));
                }
                self.table.fields.insert(rid, ids);
            }
        }
        let mut unnamed = 0;
        let mut entry_names: BTreeMap<String, ()> = BTreeMap::new();
        for item in &p.items {
            match &item.kind {
                ItemKind::Func(f) => {
                    let id = self.declare_func(f);
                    entry_names.insert(f.name.name.clone(), ());
                    self.table.entries.push(id);
                }
                ItemKind::Block(b) => {
                    let (name, span, decl_use) = match &b.name {
                        Some(n) => (n.name.clone(), n.span, Some(n.use_id)),
                        None => {
                            unnamed += 1;
                            (format!("block{unnamed}"), b.block.span, None)
                        }
                    };
                    if entry_names.insert(name.clone(), ()).is_some() {
                        self.err(span, format!("duplicate entry name `{name}`"));
                    }
                    let id = self.add(Symbol {
                        id: SymbolId(0),
                        name,
                        kind: SymbolKind::Block,
                        storage: None,
                        ty: None,
                        span,
                        decl_use,
                        owner: None,
                        site: Some(b.block.site),
                        scope: None,
                    });
                    self.table.by_site.insert(b.block.site, id);
                    self.table.entries.push(id);
                }
                _ => {}
            }
        }
        for item in &p.items {
            match &item.kind {
                ItemKind::Record(_) => {}
                ItemKind::Global(s) => {
                    self.in_global_init = true;
                    self.stmt(s);
                    self.in_global_init = false;
                }
                ItemKind::Func(f) => {
                    if let Some(id) = self.table.resolve(&f.name) {
                        self.func_body(f, id);
                    }
                }
                ItemKind::Block(b) => {
                    let id = self.table.by_site(b.block.site).expect("block symbol");
                    self.funcs.push(FuncCtx {
                        sym: Some(id),
                        ..FuncCtx::default()
                    });
                    self.collect_labels(&b.block);
                    self.block(&b.block, &[]);
                    self.funcs.pop();
                }
            }
        }
    }

    /// Declares the function name (const function address) in the
    /// current scope, plus its parameters and result slot.
    fn declare_func(&mut self, f: &FuncDecl) -> SymbolId {
        for p in &f.params {
            self.ty(&p.ty);
        }
        if let Some(t) = &f.ret {
            self.ty(t);
        }
        let ty = Type::Fn(f.params.iter().map(|p| p.ty.clone()).collect());
        let mut s = self.sym(&f.name, SymbolKind::Func, Some(Storage::ConstFnAddress), Some(ty));
        s.owner = None;
        s.site = Some(f.site);
        let id = self.declare(&f.name, s);
        self.table.by_site.insert(f.site, id);
        id
    }

    fn func_body(&mut self, f: &FuncDecl, id: SymbolId) {
        self.funcs.push(FuncCtx {
            sym: Some(id),
            returns_value: f.ret.is_some(),
            ..FuncCtx::default()
        });
        let mut params = Vec::new();
        let mut pre = Vec::new();
        for p in &f.params {
            let mut s = self.sym(&p.name, SymbolKind::Param, Some(Storage::Stack), Some(p.ty.clone()));
            s.site = Some(f.site);
            pre.push((p.name.clone(), s));
        }
        if let Some(t) = &f.ret {
            let s = Symbol {
                id: SymbolId(0),
                name: String::from("ret"),
                kind: SymbolKind::Ret,
                storage: Some(Storage::Stack),
                ty: Some(t.clone()),
                span: f.name.span,
                decl_use: None,
                owner: Some(id),
                site: Some(f.site),
                scope: Some(f.body.site),
            };
            let rid = self.add(s);
            self.table.rets.insert(id, rid);
        }
        self.collect_labels(&f.body);
        // params share the body scope
        self.scopes.push(BTreeMap::new());
        self.funcs.last_mut().unwrap().blocks.push(f.body.site);
        for (name, mut s) in pre {
            s.scope = Some(f.body.site);
            params.push(self.declare(&name, s));
        }
        self.table.params.insert(id, params);
        self.block_stmts(&f.body);
        self.funcs.last_mut().unwrap().blocks.pop();
        self.scopes.pop();
        self.funcs.pop();
    }

    /// Registers the labels of a function body (not of nested functions).
    fn collect_labels(&mut self, body: &Block) {
        fn walk(r: &mut Resolver, b: &Block) {
            for s in &b.stmts {
                match &s.kind {
                    StmtKind::Label(l) => {
                        let exists = r.funcs.last().unwrap().labels.contains_key(&l.name);
                        if exists {
                            r.err(l.span, format!("duplicate label `{}`", l.name));
                            continue;
                        }
                        let mut sym = r.sym(l, SymbolKind::Label, None, None);
                        sym.site = Some(s.site);
                        sym.scope = Some(b.site);
                        let id = r.add(sym);
                        r.funcs.last_mut().unwrap().labels.insert(l.name.clone(), (id, b.site));
                    }
                    StmtKind::Func(_) => {}
                    _ => {
                        for inner in s.blocks() {
                            walk(r, inner);
                        }
                    }
                }
            }
        }
        walk(self, body);
    }

    fn block(&mut self, b: &Block, pre: &[(Ident, Symbol)]) {
        self.scopes.push(BTreeMap::new());
        if let Some(f) = self.funcs.last_mut() {
            f.blocks.push(b.site);
        }
        for (n, s) in pre {
            let mut s = s.clone();
            s.scope = Some(b.site);
            self.declare(n, s);
        }
        self.block_stmts(b);
        if let Some(f) = self.funcs.last_mut() {
            f.blocks.pop();
        }
        self.scopes.pop();
    }

    fn block_stmts(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl(v) => {
                self.ty(&v.ty);
                if let Some(init) = &v.init {
                    self.expr(init.expr());
                }
                let storage = self.storage_for(v.is_static);
                let mut sym = self.sym(&v.name, SymbolKind::Var, Some(storage), Some(v.ty.clone()));
                sym.site = Some(s.site);
                self.declare(&v.name, sym);
            }
            StmtKind::HeapAlloc { name, ty } => {
                self.ty(ty);
                if self.funcs.is_empty() {
                    self.err(name.span, String::from("`new` outside a function"));
                }
                let mut sym = self.sym(name, SymbolKind::Var, Some(Storage::Heap), Some(ty.clone()));
                sym.site = Some(s.site);
                self.declare(name, sym);
            }
            StmtKind::Delete(n) => {
                if let Some(id) = self.use_ident(n) {
                    if self.table.get(id).storage != Some(Storage::Heap) {
                        self.err(n.span, format!("`{}` is not a heap holder", n.name));
                    }
                }
            }
            StmtKind::Assign { target, value } => {
                self.expr(value);
                self.lvalue(target, true);
            }
            StmtKind::Call(c) | StmtKind::Spawn(c) => self.call(c),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                    if !self.funcs.last().is_some_and(|f| f.returns_value) {
                        self.err(s.span, String::from("`return` with a value in a void function"));
                    }
                }
            }
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.block(then, &[]);
                if let Some(e) = els {
                    self.block(e, &[]);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.funcs.last_mut().map(|f| f.loops += 1);
                self.block(body, &[]);
                self.funcs.last_mut().map(|f| f.loops -= 1);
            }
            StmtKind::Goto(l) => {
                let Some(f) = self.funcs.last() else { return };
                match f.labels.get(&l.name) {
                    None => self.err(l.span, format!("undefined label `{}`", l.name)),
                    Some(&(id, block)) => {
                        if !f.blocks.contains(&block) {
                            self.err(
                                l.span,
                                format!("label `{}` is not in an enclosing block", l.name),
                            );
                        }
                        self.table.uses.insert(l.use_id, id);
                    }
                }
            }
            StmtKind::Label(_) => {}
            StmtKind::Break | StmtKind::Continue => {
                if !self.funcs.last().is_some_and(|f| f.loops > 0) {
                    let what = if matches!(s.kind, StmtKind::Break) { "break" } else { "continue" };
                    self.err(s.span, format!("`{what}` outside a loop"));
                }
            }
            StmtKind::Try { body, var, handler } => {
                self.block(body, &[]);
                let mut sym = self.sym(var, SymbolKind::Var, Some(Storage::Stack), None);
                sym.site = Some(s.site);
                self.block(handler, &[(var.clone(), sym)]);
            }
            StmtKind::Throw(e) => self.expr(e),
            StmtKind::Block(b) => self.block(b, &[]),
            StmtKind::Func(f) => {
                let id = self.declare_func(f);
                // a nested function does not see the loops/labels around it
                self.func_body(f, id);
            }
        }
    }

    fn lvalue(&mut self, l: &LValue, write: bool) {
        let base = l.base();
        let Some(id) = self.use_ident(base) else {
            if let LValue::Index(_, i) = l {
                self.expr(i);
            }
            return;
        };
        let sym = self.table.get(id).clone();
        if write && !matches!(sym.kind, SymbolKind::Var | SymbolKind::Param) {
            self.err(base.span, format!("cannot assign to `{}`", base.name));
        }
        match l {
            LValue::Var(_) => {}
            LValue::Index(_, i) => {
                self.expr(i);
                if !sym.ty.as_ref().is_some_and(Type::is_array) {
                    self.err(base.span, format!("`{}` is not an array", base.name));
                }
            }
            LValue::Field(_, f) => {
                let rec = sym.ty.as_ref().and_then(|t| self.table.record_of(t));
                let field = rec.and_then(|r| {
                    self.table
                        .fields(r)
                        .iter()
                        .copied()
                        .find(|fid| self.table.get(*fid).name == f.name)
                });
                match field {
                    Some(fid) => {
                        self.table.uses.insert(f.use_id, fid);
                    }
                    None => self.err(f.span, format!("`{}` has no field `{}`", base.name, f.name)),
                }
            }
        }
    }

    fn call(&mut self, c: &Call) {
        if self.in_global_init {
            self.err(c.span, String::from("call in a global initializer"));
        }
        for a in &c.args {
            self.expr(a);
        }
        let n = c.callee.ident();
        let Some(id) = self.use_ident(n) else { return };
        let sym = self.table.get(id);
        let arity = match (&c.callee, sym.kind, &sym.ty) {
            (Callee::Direct(_), SymbolKind::Func, Some(Type::Fn(ps))) => ps.len(),
            (Callee::Direct(_), _, Some(Type::Fn(_))) => {
                self.err(n.span, format!("call through the address `{}` needs `(*{})(...)`", n.name, n.name));
                return;
            }
            (Callee::Indirect(_), SymbolKind::Var | SymbolKind::Param, Some(Type::Fn(ps))) => ps.len(),
            (Callee::Indirect(_), _, _) => {
                self.err(n.span, format!("`{}` is not a function address variable", n.name));
                return;
            }
            _ => {
                self.err(n.span, format!("`{}` is not a function", n.name));
                return;
            }
        };
        if arity != c.args.len() {
            self.err(
                c.span,
                format!("`{}` takes {arity} argument(s), {} given", n.name, c.args.len()),
            );
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Int(..) | Expr::Str(..) => {}
            Expr::Place(l) => self.lvalue(l, false),
            Expr::Call(c) => self.call(c),
            Expr::AddrOf(n) => {
                self.use_ident(n);
            }
            Expr::Binary(l, _, r) => {
                self.expr(l);
                self.expr(r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowc::compile;

    fn errors(src: &str) -> Vec<String> {
        match compile(src) {
            Ok(_) => Vec::new(),
            Err(es) => es.into_iter().map(|e| e.message).collect(),
        }
    }

    #[test]
    fn caller_and_param_a_are_distinct() {
        let src = "record arg { int v; }\nvoid functionA(arg a) { arg b(a); }\nB: { arg a(5); functionA(a); }";
        let (_, t) = compile(src).unwrap();
        let a: Vec<&Symbol> = t.symbols().iter().filter(|s| s.name == "a").collect();
        assert_eq!(a.len(), 2);
        assert_ne!(a[0].id, a[1].id);
        assert_eq!(a[0].kind, SymbolKind::Param);
        assert_eq!(a[1].kind, SymbolKind::Var);
        assert_eq!(a[1].storage, Some(Storage::Stack));
    }

    #[test]
    fn undeclared() {
        let es = errors("int x = y;");
        assert_eq!(es, ["undeclared identifier `y`"]);
    }

    #[test]
    fn function_names_are_constants() {
        let src = "void func(int i) { int x = i; }\n{ void (*fp)(int); fp = func; (*fp)(5); }";
        let (p, t) = compile(src).unwrap();
        let ItemKind::Block(b) = &p.items[1].kind else { panic!() };
        let StmtKind::Assign { value: Expr::Place(LValue::Var(f)), .. } = &b.block.stmts[1].kind else {
            panic!()
        };
        let s = t.get(t.resolve(f).unwrap());
        assert_eq!(s.name, "func");
        assert_eq!(s.storage, Some(Storage::ConstFnAddress));
    }

    #[test]
    fn storage_classes() {
        let src = "int g;\nvoid f(int p) { static int s; int l; h = new int; delete h; }";
        let (_, t) = compile(src).unwrap();
        let st = |n: &str| t.symbols().iter().find(|s| s.name == n).unwrap().storage;
        assert_eq!(st("g"), Some(Storage::Static));
        assert_eq!(st("p"), Some(Storage::Stack));
        assert_eq!(st("s"), Some(Storage::Static));
        assert_eq!(st("l"), Some(Storage::Stack));
        assert_eq!(st("h"), Some(Storage::Heap));
        assert_eq!(st("f"), Some(Storage::ConstFnAddress));
    }

    #[test]
    fn semantic_errors() {
        assert_eq!(errors("void f() { goto L; }"), ["undefined label `L`"]);
        assert_eq!(errors("void f() { { L: } goto L; }"), ["label `L` is not in an enclosing block"]);
        assert_eq!(errors("void f() { break; }"), ["`break` outside a loop"]);
        assert_eq!(errors("void f() { int x; int x; }").len(), 1);
        assert_eq!(errors("void f() { return 1; }"), ["`return` with a value in a void function"]);
        assert_eq!(errors("void f(int a) { } void g() { f(); }"), ["`f` takes 1 argument(s), 0 given"]);
        assert_eq!(errors("void f() { int x; delete x; }"), ["`x` is not a heap holder"]);
        assert_eq!(errors("void f() { foo y; }"), ["unknown type `foo`"]);
        assert_eq!(
            errors("void f() { int x; void g() { x = 1; } }"),
            ["`x` belongs to an enclosing function and cannot be captured"]
        );
    }

    #[test]
    fn shadowing_and_hoisting() {
        let src = "void main() { g(); int x; { int x; x = 1; } x = 2; }\nvoid g() { }";
        let (p, t) = compile(src).unwrap();
        let ItemKind::Func(m) = &p.items[0].kind else { panic!() };
        let StmtKind::Block(inner) = &m.body.stmts[2].kind else { panic!() };
        let StmtKind::Assign { target, .. } = &inner.stmts[1].kind else { panic!() };
        let StmtKind::Assign { target: outer, .. } = &m.body.stmts[3].kind else { panic!() };
        assert_ne!(t.resolve(target.base()), t.resolve(outer.base()));
    }

    #[test]
    fn entry_selection() {
        let (_, t) = compile("void f() {} B: { f(); } void main() {}").unwrap();
        assert_eq!(t.get(t.entry(None).unwrap()).name, "main");
        assert_eq!(t.get(t.entry(Some("B")).unwrap()).kind, SymbolKind::Block);
        let (_, t) = compile("void f() {} { f(); }").unwrap();
        assert_eq!(t.get(t.entry(None).unwrap()).name, "block1");
    }

    #[test]
    fn fingerprint_tracks_bindings() {
        let a = compile("int x; void f() { x = 1; }").unwrap().1.fingerprint();
        let b = compile("int x; void f() { int x; x = 1; }").unwrap().1.fingerprint();
        let c = compile("int x;\n\n void f() { x = 1; }").unwrap().1.fingerprint();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
