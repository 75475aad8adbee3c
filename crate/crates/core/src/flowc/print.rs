//! Canonical pretty printer, plus the one-line renderings the extractor
//! uses as process labels.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::ast::*;

pub fn type_text(t: &Type) -> String {
    match t {
        Type::Int => String::from("int"),
        Type::Str => String::from("str"),
        Type::Named(n) => n.name.clone(),
        Type::Array(inner, n) => format!("{}[{n}]", type_text(inner)),
        Type::Fn(params) => {
            let ps: Vec<String> = params.iter().map(type_text).collect();
            format!("fn({})", ps.join(", "))
        }
        Type::Ptr(inner) => format!("{}*", type_text(inner)),
    }
}

fn escape(s: &str) -> String {
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

pub fn lvalue_text(l: &LValue) -> String {
    match l {
        LValue::Var(n) => n.name.clone(),
        LValue::Index(n, i) => format!("{}[{}]", n.name, expr_text(i)),
        LValue::Field(n, f) => format!("{}.{}", n.name, f.name),
    }
}

pub fn call_text(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(expr_text).collect();
    match &c.callee {
        Callee::Direct(n) => format!("{}({})", n.name, args.join(", ")),
        Callee::Indirect(n) => format!("(*{})({})", n.name, args.join(", ")),
    }
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Int(v, _) => format!("{v}"),
        Expr::Str(s, _) => escape(s),
        Expr::Place(l) => lvalue_text(l),
        Expr::Call(c) => call_text(c),
        Expr::AddrOf(n) => format!("&{}", n.name),
        Expr::Binary(l, op, r) => {
            let rhs = match **r {
                Expr::Binary(..) => format!("({})", expr_text(r)),
                _ => expr_text(r),
            };
            format!("{} {} {}", expr_text(l), op.symbol(), rhs)
        }
    }
}

pub fn signature(f: &FuncDecl) -> String {
    let ret = f.ret.as_ref().map_or(String::from("void"), type_text);
    let ps: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{} {}", type_text(&p.ty), p.name.name))
        .collect();
    format!("{ret} {}({})", f.name.name, ps.join(", "))
}

fn var_decl_text(v: &VarDecl) -> String {
    let mut s = String::new();
    if v.is_static {
        s.push_str("static ");
    }
    let _ = write!(s, "{} {}", type_text(&v.ty), v.name.name);
    match &v.init {
        None => {}
        Some(Init::Assign(e)) => {
            let _ = write!(s, " = {}", expr_text(e));
        }
        Some(Init::Ctor(e)) => {
            let _ = write!(s, "({})", expr_text(e));
        }
    }
    s
}

/// One-line rendering of a statement without its sub-blocks or the
/// trailing `;`.
pub fn stmt_head(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::VarDecl(v) => var_decl_text(v),
        StmtKind::HeapAlloc { name, ty } => format!("{} = new {}", name.name, type_text(ty)),
        StmtKind::Delete(n) => format!("delete {}", n.name),
        StmtKind::Assign { target, value } => {
            format!("{} = {}", lvalue_text(target), expr_text(value))
        }
        StmtKind::Call(c) => call_text(c),
        StmtKind::Return(None) => String::from("return"),
        StmtKind::Return(Some(e)) => format!("return {}", expr_text(e)),
        StmtKind::If { cond, .. } => format!("if ({})", expr_text(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr_text(cond)),
        StmtKind::Goto(l) => format!("goto {}", l.name),
        StmtKind::Label(l) => format!("{}:", l.name),
        StmtKind::Break => String::from("break"),
        StmtKind::Continue => String::from("continue"),
        StmtKind::Try { .. } => String::from("try"),
        StmtKind::Throw(e) => format!("throw {}", expr_text(e)),
        StmtKind::Spawn(c) => format!("spawn {}", call_text(c)),
        StmtKind::Block(_) => String::from("{ }"),
        StmtKind::Func(f) => signature(f),
    }
}

struct Printer {
    out: String,
    depth: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn comments(&mut self, cs: &[Comment]) {
        for c in cs {
            if c.text.is_empty() {
                self.line("//");
            } else {
                self.line(&format!("// {}", c.text));
            }
        }
    }

    /// Prints `{ ... }` where the opening brace ends the current line
    /// (already written by the caller without a newline).
    fn block_body(&mut self, b: &Block) {
        self.out.push_str("{\n");
        self.depth += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.comments(&b.trailing);
        self.depth -= 1;
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push('}');
    }

    fn open(&mut self, head: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(head);
    }

    fn func(&mut self, f: &FuncDecl) {
        self.open(&format!("{} ", signature(f)));
        self.block_body(&f.body);
        self.out.push('\n');
    }

    fn stmt(&mut self, s: &Stmt) {
        self.comments(&s.doc);
        match &s.kind {
            StmtKind::If { cond, then, els } => {
                self.open(&format!("if ({}) ", expr_text(cond)));
                self.block_body(then);
                if let Some(e) = els {
                    self.out.push_str(" else ");
                    self.block_body(e);
                }
                self.out.push('\n');
            }
            StmtKind::While { cond, body } => {
                self.open(&format!("while ({}) ", expr_text(cond)));
                self.block_body(body);
                self.out.push('\n');
            }
            StmtKind::Try { body, var, handler } => {
                self.open("try ");
                self.block_body(body);
                self.out.push_str(&format!(" catch ({}) ", var.name));
                self.block_body(handler);
                self.out.push('\n');
            }
            StmtKind::Block(b) => {
                self.open("");
                self.block_body(b);
                self.out.push('\n');
            }
            StmtKind::Func(f) => self.func(f),
            StmtKind::Label(_) => self.line(&stmt_head(s)),
            _ => self.line(&format!("{};", stmt_head(s))),
        }
    }
}

/// Canonical source text: four-space indentation, one statement per
/// line, comments on their own lines.
pub fn print_program(p: &Program) -> String {
    let mut pr = Printer {
        out: String::new(),
        depth: 0,
    };
    for (i, item) in p.items.iter().enumerate() {
        if i > 0 {
            pr.out.push('\n');
        }
        pr.comments(&item.doc);
        match &item.kind {
            ItemKind::Record(r) => {
                pr.line(&format!("record {} {{", r.name.name));
                pr.depth += 1;
                for f in &r.fields {
                    pr.line(&format!("{} {};", type_text(&f.ty), f.name.name));
                }
                pr.depth -= 1;
                pr.line("}");
            }
            ItemKind::Global(s) => pr.stmt(s),
            ItemKind::Func(f) => pr.func(f),
            ItemKind::Block(b) => {
                match &b.name {
                    Some(n) => pr.open(&format!("{}: ", n.name)),
                    None => pr.open(""),
                }
                pr.block_body(&b.block);
                pr.out.push('\n');
            }
        }
    }
    if !p.trailing.is_empty() && !p.items.is_empty() {
        pr.out.push('\n');
    }
    pr.comments(&p.trailing);
    pr.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowc::{parse_program, tokenize};

    fn reprint(src: &str) -> String {
        print_program(&parse_program(&tokenize(src).unwrap()).unwrap())
    }

    #[test]
    fn fixed_point() {
        let src = "record r { int v; int[3] xs; }\n// doc\nint g = 1 + (2 - 3);\n\
                   int f(int a, fn(int) cb) { if (a < 1) { return 0; } else { (*cb)(a); } \
                   while (a == 2) { a = a - 1; continue; } try { throw \"x\\n\"; } catch (e) { } \
                   L: goto L; return f(a, cb); }\nmain: { r* p; q = new r; q.v = 2; delete q; spawn f(1, f); }";
        let once = reprint(src);
        assert_eq!(reprint(&once), once);
        assert!(once.contains("int g = 1 + (2 - 3);"));
        assert!(once.contains("throw \"x\\n\";"));
    }

    #[test]
    fn c_declarator_prints_as_fn_type() {
        assert_eq!(reprint("{ void (*fp)(int); }"), "{\n    fn(int) fp;\n}\n");
    }

    #[test]
    fn heads() {
        let p = parse_program(&tokenize("void functionA(arg a) { arg b(a); }").unwrap()).unwrap();
        let ItemKind::Func(f) = &p.items[0].kind else { panic!() };
        assert_eq!(signature(f), "void functionA(arg a)");
        assert_eq!(stmt_head(&f.body.stmts[0]), "arg b(a)");
    }
}
