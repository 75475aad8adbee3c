//! Flow-C syntax tree.
//!
//! Every identifier occurrence carries a [`UseId`] and every statement,
//! block, call and function a [`SiteId`]. Both are handed out in source
//! order by the parser, so they are stable for a given text and are what
//! the resolver, the extractor and the interpreter use to talk about the
//! same piece of code.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::Span;

pub type SiteId = u32;
pub type UseId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
    pub use_id: UseId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    /// Text after `//`, trimmed.
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Int,
    Str,
    Named(Ident),
    Array(Box<Type>, u32),
    Fn(Vec<Type>),
    Ptr(Box<Type>),
}

impl Type {
    pub fn is_fn(&self) -> bool {
        matches!(self, Type::Fn(_))
    }

    pub fn is_address(&self) -> bool {
        matches!(self, Type::Fn(_) | Type::Ptr(_))
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Type::Array(..))
    }

    pub fn record_name(&self) -> Option<&Ident> {
        match self {
            Type::Named(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub items: Vec<Item>,
    /// Comments after the last item.
    pub trailing: Vec<Comment>,
    pub use_count: u32,
    pub site_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub doc: Vec<Comment>,
    pub kind: ItemKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemKind {
    Record(RecordDecl),
    /// Always a `StmtKind::VarDecl`.
    Global(Stmt),
    Func(FuncDecl),
    /// A free-standing block, optionally named `NAME: { ... }`.
    Block(TopBlock),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDecl {
    pub name: Ident,
    pub fields: Vec<Field>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub ty: Type,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDecl {
    pub site: SiteId,
    /// `None` for `void`.
    pub ret: Option<Type>,
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: Type,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopBlock {
    pub name: Option<Ident>,
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub site: SiteId,
    pub stmts: Vec<Stmt>,
    pub trailing: Vec<Comment>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub site: SiteId,
    pub doc: Vec<Comment>,
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl(VarDecl),
    /// `name = new T;` declares a heap holder.
    HeapAlloc { name: Ident, ty: Type },
    Delete(Ident),
    Assign { target: LValue, value: Expr },
    Call(Call),
    Return(Option<Expr>),
    If { cond: Expr, then: Block, els: Option<Block> },
    While { cond: Expr, body: Block },
    Goto(Ident),
    Label(Ident),
    Break,
    Continue,
    Try { body: Block, var: Ident, handler: Block },
    Throw(Expr),
    Spawn(Call),
    Block(Block),
    Func(FuncDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub is_static: bool,
    pub ty: Type,
    pub name: Ident,
    pub init: Option<Init>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Init {
    /// `T x = e;`
    Assign(Expr),
    /// `T x(e);`
    Ctor(Expr),
}

impl Init {
    pub fn expr(&self) -> &Expr {
        match self {
            Init::Assign(e) | Init::Ctor(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(Ident),
    Index(Ident, Box<Expr>),
    Field(Ident, Ident),
}

impl LValue {
    pub fn base(&self) -> &Ident {
        match self {
            LValue::Var(n) | LValue::Index(n, _) | LValue::Field(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub site: SiteId,
    pub callee: Callee,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Callee {
    Direct(Ident),
    /// `(*fp)(...)`
    Indirect(Ident),
}

impl Callee {
    pub fn ident(&self) -> &Ident {
        match self {
            Callee::Direct(n) | Callee::Indirect(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Lt,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64, Span),
    Str(String, Span),
    Place(LValue),
    Call(Call),
    AddrOf(Ident),
    Binary(Box<Expr>, BinOp, Box<Expr>),
}

impl Expr {
    /// Calls in evaluation order: arguments before the call that uses
    /// them, left to right.
    pub fn calls<'a>(&'a self, out: &mut Vec<&'a Call>) {
        match self {
            Expr::Call(c) => {
                for a in &c.args {
                    a.calls(out);
                }
                out.push(c);
            }
            Expr::Place(LValue::Index(_, i)) => i.calls(out),
            Expr::Binary(l, _, r) => {
                l.calls(out);
                r.calls(out);
            }
            _ => {}
        }
    }
}

impl Stmt {
    /// Direct sub-blocks in source order.
    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If { then, els, .. } => {
                let mut v = alloc::vec![then];
                v.extend(els.iter());
                v
            }
            StmtKind::While { body, .. } => alloc::vec![body],
            StmtKind::Try { body, handler, .. } => alloc::vec![body, handler],
            StmtKind::Block(b) => alloc::vec![b],
            StmtKind::Func(f) => alloc::vec![&f.body],
            _ => Vec::new(),
        }
    }
}
