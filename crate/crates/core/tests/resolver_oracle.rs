//! Name resolution against a second, naive resolver: a chain of scopes
//! searched innermost first. Every variable and function use must bind
//! to the same declaration in both.

use std::collections::BTreeMap;

use ucdf_core::flowc::ast::{Block, Expr, Ident, ItemKind, LValue, Stmt, StmtKind, UseId};
use ucdf_core::flowc::{compile, Program, SymbolTable};
use ucdf_testkit::{branching_program, corpus, straight_line_program};

#[derive(Default)]
struct Chain {
    scopes: Vec<BTreeMap<String, UseId>>,
    /// use -> declaring use, for every use the chain could resolve.
    found: BTreeMap<UseId, UseId>,
}

impl Chain {
    fn declare(&mut self, name: &Ident) {
        self.scopes.last_mut().unwrap().insert(name.name.clone(), name.use_id);
    }

    fn lookup(&mut self, name: &Ident) {
        if let Some(decl) = self.scopes.iter().rev().find_map(|s| s.get(&name.name)) {
            self.found.insert(name.use_id, *decl);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Int(..) | Expr::Str(..) => {}
            Expr::Place(l) => self.lvalue(l),
            Expr::Call(c) => {
                self.lookup(c.callee.ident());
                c.args.iter().for_each(|a| self.expr(a));
            }
            Expr::AddrOf(n) => self.lookup(n),
            Expr::Binary(a, _, b) => {
                self.expr(a);
                self.expr(b);
            }
        }
    }

    fn lvalue(&mut self, l: &LValue) {
        self.lookup(l.base());
        if let LValue::Index(_, i) = l {
            self.expr(i);
        }
    }

    fn block(&mut self, b: &Block) {
        self.scopes.push(BTreeMap::new());
        b.stmts.iter().for_each(|s| self.stmt(s));
        self.scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl(v) => {
                if let Some(i) = &v.init {
                    self.expr(i.expr());
                }
                self.declare(&v.name);
            }
            StmtKind::Assign { target, value } => {
                self.expr(value);
                self.lvalue(target);
            }
            StmtKind::Call(c) | StmtKind::Spawn(c) => self.expr(&Expr::Call(c.clone())),
            StmtKind::Return(Some(e)) | StmtKind::Throw(e) => self.expr(e),
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.block(then);
                if let Some(e) = els {
                    self.block(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.block(body);
            }
            StmtKind::Try { body, var, handler } => {
                self.block(body);
                self.scopes.push(BTreeMap::new());
                self.declare(var);
                self.block(handler);
                self.scopes.pop();
            }
            StmtKind::Block(b) => self.block(b),
            _ => {}
        }
    }

    fn program(&mut self, p: &Program) {
        self.scopes.push(BTreeMap::new());
        for item in &p.items {
            match &item.kind {
                ItemKind::Global(s) => self.stmt(s),
                ItemKind::Func(f) => {
                    self.declare(&f.name);
                    self.scopes.push(BTreeMap::new());
                    f.params.iter().for_each(|x| self.declare(&x.name));
                    self.block(&f.body);
                    self.scopes.pop();
                }
                ItemKind::Block(b) => self.block(&b.block),
                ItemKind::Record(_) => {}
            }
        }
    }
}

/// Returns how many uses were compared.
fn agree(src: &str) -> usize {
    let (p, table): (Program, SymbolTable) = compile(src).unwrap();
    let mut chain = Chain::default();
    chain.program(&p);
    for (use_id, decl) in &chain.found {
        let sym = table.uses().get(use_id).unwrap_or_else(|| panic!("use {use_id} unresolved\n{src}"));
        assert_eq!(table.get(*sym).decl_use, Some(*decl), "use {use_id}\n{src}");
    }
    chain.found.len()
}

#[test]
fn shadowing_binds_innermost() {
    let n = agree(
        "int x = 1;\n\
         int f(int x) { { int x = 2; x = x + 1; } return x; }\n\
         void main() { int y = x; { int x = f(y); y = x; } try { throw y; } catch (x) { y = x; } x = y; }",
    );
    assert_eq!(n, 13);
}

#[test]
fn corpus_agrees() {
    for c in corpus() {
        assert!(agree(&std::fs::read_to_string(c.source_path()).unwrap()) > 0, "{}", c.name);
    }
}

#[test]
fn generated_programs_agree() {
    let mut n = 0;
    for seed in 0..100 {
        n += agree(&straight_line_program(seed));
        n += agree(&branching_program(seed));
    }
    assert!(n > 1000, "{n}");
}
