//! Recursive-descent parser. The first error aborts.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{unescape, Span, Token, TokenKind};
use super::FlowError;

/// Parses a token stream (as produced by `tokenize`) into a program.
pub fn parse_program(tokens: &[Token]) -> Result<Program, FlowError> {
    let mut p = Parser::new(tokens);
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.item()?);
    }
    let trailing = p.comments_before(u32::MAX);
    Ok(Program {
        items,
        trailing,
        use_count: p.next_use,
        site_count: p.next_site,
    })
}

struct Parser<'a> {
    toks: Vec<&'a Token>,
    comments: Vec<&'a Token>,
    next_comment: usize,
    pos: usize,
    next_use: u32,
    next_site: u32,
    end: Span,
}

fn describe(t: Option<&Token>) -> String {
    match t {
        None => String::from("end of input"),
        Some(t) => match t.kind {
            TokenKind::Ident => format!("identifier `{}`", t.text),
            TokenKind::Int => format!("integer {}", t.text),
            TokenKind::Str => String::from("string literal"),
            _ => format!("`{}`", t.text),
        },
    }
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        let (comments, toks): (Vec<&Token>, Vec<&Token>) =
            tokens.iter().partition(|t| t.kind == TokenKind::Comment);
        let end = tokens
            .last()
            .map(|t| Span {
                offset: t.span.offset + t.span.len,
                len: 0,
                line: t.span.line,
                column: t.span.column + t.text.chars().count() as u32,
            })
            .unwrap_or(Span {
                offset: 0,
                len: 0,
                line: 1,
                column: 1,
            });
        Parser {
            toks,
            comments,
            next_comment: 0,
            pos: 0,
            next_use: 0,
            next_site: 0,
            end,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + k).copied()
    }

    fn span(&self) -> Span {
        self.peek().map_or(self.end, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn error<T>(&self, expected: &str) -> Result<T, FlowError> {
        Err(FlowError {
            span: self.span(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn is_punct(&self, k: usize, s: &str) -> bool {
        self.peek_at(k).is_some_and(|t| t.is(TokenKind::Punct, s))
    }

    fn is_kw(&self, k: usize, s: &str) -> bool {
        self.peek_at(k).is_some_and(|t| t.is(TokenKind::Keyword, s))
    }

    fn is_kind(&self, k: usize, kind: TokenKind) -> bool {
        self.peek_at(k).is_some_and(|t| t.kind == kind)
    }

    fn eat_punct(&mut self, s: &str) -> bool {
        if self.is_punct(0, s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, s: &str) -> Result<Span, FlowError> {
        if self.is_punct(0, s) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<Span, FlowError> {
        if self.is_kw(0, s) {
            self.pos += 1;
            Ok(self.prev_span())
        } else {
            self.error(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> Result<Ident, FlowError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                let use_id = self.next_use;
                self.next_use += 1;
                Ok(Ident {
                    name: t.text.clone(),
                    span: t.span,
                    use_id,
                })
            }
            _ => self.error("identifier"),
        }
    }

    fn int(&mut self) -> Result<(i64, Span), FlowError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Int => match t.text.parse::<i64>() {
                Ok(v) => {
                    self.pos += 1;
                    Ok((v, t.span))
                }
                Err(_) => Err(FlowError {
                    span: t.span,
                    message: String::from("integer literal out of range"),
                }),
            },
            _ => self.error("integer"),
        }
    }

    fn site(&mut self) -> SiteId {
        let s = self.next_site;
        self.next_site += 1;
        s
    }

    fn comments_before(&mut self, offset: u32) -> Vec<Comment> {
        let mut out = Vec::new();
        while let Some(c) = self.comments.get(self.next_comment) {
            if c.span.offset >= offset {
                break;
            }
            out.push(Comment {
                text: String::from(c.text[2..].trim()),
                span: c.span,
            });
            self.next_comment += 1;
        }
        out
    }

    fn doc(&mut self) -> Vec<Comment> {
        let offset = self.span().offset;
        self.comments_before(offset)
    }

    // ---- items

    fn item(&mut self) -> Result<Item, FlowError> {
        let doc = self.doc();
        let kind = if self.is_kw(0, "record") {
            ItemKind::Record(self.record()?)
        } else if self.is_punct(0, "{") {
            ItemKind::Block(TopBlock {
                name: None,
                block: self.block()?,
            })
        } else if self.is_kind(0, TokenKind::Ident) && self.is_punct(1, ":") {
            let name = self.ident()?;
            self.expect_punct(":")?;
            ItemKind::Block(TopBlock {
                name: Some(name),
                block: self.block()?,
            })
        } else if self.starts_type(0) || self.is_kw(0, "void") || self.is_kw(0, "static") {
            let start = self.span();
            let site = self.site();
            match self.decl_or_func(start, site)? {
                Decl::Func(f) => ItemKind::Func(f),
                Decl::Var(v) => ItemKind::Global(Stmt {
                    site,
                    doc: Vec::new(),
                    kind: StmtKind::VarDecl(v),
                    span: start.to(self.prev_span()),
                }),
            }
        } else {
            return self.error("declaration");
        };
        Ok(Item { doc, kind })
    }

    fn record(&mut self) -> Result<RecordDecl, FlowError> {
        let start = self.expect_kw("record")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.is_punct(0, "}") {
            let ty = self.ty()?;
            let fname = self.ident()?;
            self.expect_punct(";")?;
            fields.push(Field { ty, name: fname });
        }
        let end = self.expect_punct("}")?;
        Ok(RecordDecl {
            name,
            fields,
            span: start.to(end),
        })
    }

    /// Does a type start at lookahead `k`?
    fn starts_type(&self, k: usize) -> bool {
        self.is_kw(k, "int") || self.is_kw(k, "str") || self.is_kw(k, "fn") || self.is_kind(k, TokenKind::Ident)
    }

    fn ty(&mut self) -> Result<Type, FlowError> {
        let mut t = if self.is_kw(0, "int") {
            self.pos += 1;
            Type::Int
        } else if self.is_kw(0, "str") {
            self.pos += 1;
            Type::Str
        } else if self.is_kw(0, "fn") {
            self.pos += 1;
            Type::Fn(self.type_list()?)
        } else if self.is_kind(0, TokenKind::Ident) {
            Type::Named(self.ident()?)
        } else {
            return self.error("type");
        };
        loop {
            if self.is_punct(0, "[") && self.is_kind(1, TokenKind::Int) && self.is_punct(2, "]") {
                self.pos += 1;
                let (n, span) = self.int()?;
                let n = u32::try_from(n).map_err(|_| FlowError {
                    span,
                    message: String::from("array size out of range"),
                })?;
                self.pos += 1;
                t = Type::Array(Box::new(t), n);
            } else if self.eat_punct("*") {
                t = Type::Ptr(Box::new(t));
            } else {
                return Ok(t);
            }
        }
    }

    fn type_list(&mut self) -> Result<Vec<Type>, FlowError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(0, ")") {
            loop {
                out.push(self.ty()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    /// Index of the token after the `)` matching the `(` at lookahead `k`.
    fn after_parens(&self, k: usize) -> usize {
        let mut depth = 0usize;
        let mut i = k;
        while let Some(t) = self.peek_at(i) {
            if t.is(TokenKind::Punct, "(") {
                depth += 1;
            } else if t.is(TokenKind::Punct, ")") {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            i += 1;
        }
        i
    }

    /// `[static] type name ...` or `void name(...)`: a variable or a
    /// function. Also accepts the C declarator `ret (*name)(types)`.
    fn decl_or_func(&mut self, start: Span, site: SiteId) -> Result<Decl, FlowError> {
        let is_static = self.is_kw(0, "static");
        if is_static {
            self.pos += 1;
        }
        let ret = if !is_static && self.is_kw(0, "void") {
            self.pos += 1;
            None
        } else {
            Some(self.ty()?)
        };
        if self.is_punct(0, "(") && self.is_punct(1, "*") {
            // ret (*name)(types)
            self.pos += 2;
            let name = self.ident()?;
            self.expect_punct(")")?;
            let params = self.type_list()?;
            let init = self.var_init()?;
            self.expect_punct(";")?;
            return Ok(Decl::Var(VarDecl {
                is_static,
                ty: Type::Fn(params),
                name,
                init,
            }));
        }
        let name = self.ident()?;
        let is_func = self.is_punct(0, "(") && {
            let after = self.after_parens(0);
            self.peek_at(after).is_some_and(|t| t.is(TokenKind::Punct, "{"))
        };
        if is_func && !is_static {
            let params = self.params()?;
            let body = self.block()?;
            return Ok(Decl::Func(FuncDecl {
                site,
                ret,
                name,
                params,
                span: start.to(body.span),
                body,
            }));
        }
        let Some(ty) = ret else {
            return self.error("`(` starting a parameter list");
        };
        let init = if self.is_punct(0, "(") {
            self.pos += 1;
            let e = self.expr()?;
            self.expect_punct(")")?;
            Some(Init::Ctor(e))
        } else {
            self.var_init()?
        };
        self.expect_punct(";")?;
        Ok(Decl::Var(VarDecl {
            is_static,
            ty,
            name,
            init,
        }))
    }

    fn var_init(&mut self) -> Result<Option<Init>, FlowError> {
        if self.eat_punct("=") {
            Ok(Some(Init::Assign(self.expr()?)))
        } else {
            Ok(None)
        }
    }

    fn params(&mut self) -> Result<Vec<Param>, FlowError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(0, ")") {
            loop {
                let ty = self.ty()?;
                let name = self.ident()?;
                out.push(Param { ty, name });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn block(&mut self) -> Result<Block, FlowError> {
        let start = self.expect_punct("{")?;
        let site = self.site();
        let mut stmts = Vec::new();
        loop {
            if self.is_punct(0, "}") {
                break;
            }
            if self.at_end() {
                return self.error("`}`");
            }
            stmts.push(self.stmt()?);
        }
        let close = self.span();
        let trailing = self.comments_before(close.offset);
        self.pos += 1;
        Ok(Block {
            site,
            stmts,
            trailing,
            span: start.to(close),
        })
    }

    // ---- statements

    /// Does `IDENT ...` at the cursor start a declaration?
    fn ident_starts_decl(&self) -> bool {
        match self.peek_at(1) {
            Some(t) if t.kind == TokenKind::Ident => true,
            Some(t) if t.is(TokenKind::Punct, "*") => true,
            Some(t) if t.is(TokenKind::Punct, "(") => self.is_punct(2, "*"),
            Some(t) if t.is(TokenKind::Punct, "[") => {
                // `T[4] x` vs `c[4] = ...`
                let mut k = 1;
                while self.is_punct(k, "[") && self.is_kind(k + 1, TokenKind::Int) && self.is_punct(k + 2, "]") {
                    k += 3;
                }
                k > 1 && (self.is_kind(k, TokenKind::Ident) || self.is_punct(k, "*") || self.is_punct(k, "("))
            }
            _ => false,
        }
    }

    fn stmt(&mut self) -> Result<Stmt, FlowError> {
        let doc = self.doc();
        let start = self.span();
        let site = self.site();
        let kind = self.stmt_kind(start, site)?;
        Ok(Stmt {
            site,
            doc,
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn stmt_kind(&mut self, start: Span, site: SiteId) -> Result<StmtKind, FlowError> {
        let Some(t) = self.peek() else {
            return self.error("statement");
        };
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "static" | "void" | "int" | "str" | "fn" => {
                    return Ok(match self.decl_or_func(start, site)? {
                        Decl::Func(f) => StmtKind::Func(f),
                        Decl::Var(v) => StmtKind::VarDecl(v),
                    });
                }
                "delete" => {
                    self.pos += 1;
                    let n = self.ident()?;
                    self.expect_punct(";")?;
                    return Ok(StmtKind::Delete(n));
                }
                "return" => {
                    self.pos += 1;
                    let e = if self.is_punct(0, ";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    return Ok(StmtKind::Return(e));
                }
                "if" => {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then = self.block()?;
                    let els = if self.is_kw(0, "else") {
                        self.pos += 1;
                        Some(self.block()?)
                    } else {
                        None
                    };
                    return Ok(StmtKind::If { cond, then, els });
                }
                "while" => {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let body = self.block()?;
                    return Ok(StmtKind::While { cond, body });
                }
                "goto" => {
                    self.pos += 1;
                    let n = self.ident()?;
                    self.expect_punct(";")?;
                    return Ok(StmtKind::Goto(n));
                }
                "break" | "continue" => {
                    self.pos += 1;
                    self.expect_punct(";")?;
                    return Ok(if t.text == "break" {
                        StmtKind::Break
                    } else {
                        StmtKind::Continue
                    });
                }
                "try" => {
                    self.pos += 1;
                    let body = self.block()?;
                    self.expect_kw("catch")?;
                    self.expect_punct("(")?;
                    let var = self.ident()?;
                    self.expect_punct(")")?;
                    let handler = self.block()?;
                    return Ok(StmtKind::Try { body, var, handler });
                }
                "throw" => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect_punct(";")?;
                    return Ok(StmtKind::Throw(e));
                }
                "spawn" => {
                    self.pos += 1;
                    let c = self.call()?;
                    self.expect_punct(";")?;
                    return Ok(StmtKind::Spawn(c));
                }
                _ => return self.error("statement"),
            }
        }
        if t.is(TokenKind::Punct, "{") {
            return Ok(StmtKind::Block(self.block()?));
        }
        if t.is(TokenKind::Punct, "(") {
            let c = self.call()?;
            self.expect_punct(";")?;
            return Ok(StmtKind::Call(c));
        }
        if t.kind != TokenKind::Ident {
            return self.error("statement");
        }
        if self.is_punct(1, ":") {
            let n = self.ident()?;
            self.pos += 1;
            return Ok(StmtKind::Label(n));
        }
        if self.is_punct(1, "=") && self.is_kw(2, "new") {
            let name = self.ident()?;
            self.pos += 2;
            let ty = self.ty()?;
            self.expect_punct(";")?;
            return Ok(StmtKind::HeapAlloc { name, ty });
        }
        if self.is_punct(1, "(") && !self.is_punct(2, "*") {
            let c = self.call()?;
            self.expect_punct(";")?;
            return Ok(StmtKind::Call(c));
        }
        if self.ident_starts_decl() {
            return Ok(match self.decl_or_func(start, site)? {
                Decl::Func(f) => StmtKind::Func(f),
                Decl::Var(v) => StmtKind::VarDecl(v),
            });
        }
        let target = self.lvalue()?;
        self.expect_punct("=")?;
        let value = self.expr()?;
        self.expect_punct(";")?;
        Ok(StmtKind::Assign { target, value })
    }

    fn lvalue(&mut self) -> Result<LValue, FlowError> {
        let base = self.ident()?;
        if self.eat_punct("[") {
            let i = self.expr()?;
            self.expect_punct("]")?;
            Ok(LValue::Index(base, Box::new(i)))
        } else if self.eat_punct(".") {
            let f = self.ident()?;
            Ok(LValue::Field(base, f))
        } else {
            Ok(LValue::Var(base))
        }
    }

    fn call(&mut self) -> Result<Call, FlowError> {
        let start = self.span();
        let site = self.site();
        let callee = if self.is_punct(0, "(") {
            self.pos += 1;
            self.expect_punct("*")?;
            let n = self.ident()?;
            self.expect_punct(")")?;
            Callee::Indirect(n)
        } else {
            Callee::Direct(self.ident()?)
        };
        let args = self.args()?;
        Ok(Call {
            site,
            callee,
            args,
            span: start.to(self.prev_span()),
        })
    }

    fn args(&mut self) -> Result<Vec<Expr>, FlowError> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if !self.is_punct(0, ")") {
            loop {
                out.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    // ---- expressions

    fn expr(&mut self) -> Result<Expr, FlowError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is(TokenKind::Punct, "+") => BinOp::Add,
                Some(t) if t.is(TokenKind::Punct, "-") => BinOp::Sub,
                Some(t) if t.is(TokenKind::Punct, "==") => BinOp::Eq,
                Some(t) if t.is(TokenKind::Punct, "<") => BinOp::Lt,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.primary()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn primary(&mut self) -> Result<Expr, FlowError> {
        let Some(t) = self.peek() else {
            return self.error("expression");
        };
        match t.kind {
            TokenKind::Int => {
                let (v, span) = self.int()?;
                Ok(Expr::Int(v, span))
            }
            TokenKind::Str => {
                self.pos += 1;
                Ok(Expr::Str(unescape(&t.text), t.span))
            }
            TokenKind::Ident if self.is_punct(1, "(") => Ok(Expr::Call(self.call()?)),
            TokenKind::Ident => Ok(Expr::Place(self.lvalue()?)),
            TokenKind::Punct if t.text == "&" => {
                self.pos += 1;
                Ok(Expr::AddrOf(self.ident()?))
            }
            TokenKind::Punct if t.text == "(" && self.is_punct(1, "*") => Ok(Expr::Call(self.call()?)),
            TokenKind::Punct if t.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

enum Decl {
    Var(VarDecl),
    Func(FuncDecl),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowc::lexer::tokenize;

    fn parse(src: &str) -> Result<Program, FlowError> {
        parse_program(&tokenize(src).unwrap())
    }

    #[test]
    fn empty_function() {
        let p = parse("void f(){}").unwrap();
        assert_eq!(p.items.len(), 1);
        let ItemKind::Func(f) = &p.items[0].kind else { panic!() };
        assert_eq!(f.name.name, "f");
        assert!(f.ret.is_none());
        assert!(f.body.stmts.is_empty());
    }

    #[test]
    fn function_call_listing() {
        let src = "record arg { int v; }\n\
                   void functionA(arg a) { arg b(a); }\n\
                   // Some block B\n\
                   B: { arg a(5); functionA(a); }\n";
        let p = parse(src).unwrap();
        assert_eq!(p.items.len(), 3);
        let ItemKind::Func(f) = &p.items[1].kind else { panic!() };
        let StmtKind::VarDecl(v) = &f.body.stmts[0].kind else { panic!() };
        assert!(matches!(v.init, Some(Init::Ctor(_))));
        let ItemKind::Block(b) = &p.items[2].kind else { panic!() };
        assert_eq!(p.items[2].doc[0].text, "Some block B");
        assert_eq!(b.name.as_ref().unwrap().name, "B");
        assert!(matches!(b.block.stmts[1].kind, StmtKind::Call(_)));
    }

    #[test]
    fn callback_listing() {
        let src = "void func(int i) { int x = i; }\n\
                   { void (*fp)(int); fp = func; (*fp)(5); }";
        let p = parse(src).unwrap();
        let ItemKind::Block(b) = &p.items[1].kind else { panic!() };
        let StmtKind::VarDecl(v) = &b.block.stmts[0].kind else { panic!() };
        assert_eq!(v.ty, Type::Fn(alloc::vec![Type::Int]));
        assert!(matches!(b.block.stmts[1].kind, StmtKind::Assign { .. }));
        let StmtKind::Call(c) = &b.block.stmts[2].kind else { panic!() };
        assert!(matches!(c.callee, Callee::Indirect(_)));
    }

    #[test]
    fn declaration_forms() {
        let src = "void main() { int[4] c; c[1] = 2; p = new arg; arg* q; s.v = 1; \
                   fn(int) g = f; static int k; int n(3); L: goto L; }";
        let p = parse(src).unwrap();
        let ItemKind::Func(f) = &p.items[0].kind else { panic!() };
        let kinds: Vec<&str> = f
            .body
            .stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::VarDecl(_) => "decl",
                StmtKind::Assign { .. } => "assign",
                StmtKind::HeapAlloc { .. } => "new",
                StmtKind::Label(_) => "label",
                StmtKind::Goto(_) => "goto",
                _ => "other",
            })
            .collect();
        assert_eq!(
            kinds,
            ["decl", "assign", "new", "decl", "assign", "decl", "decl", "decl", "label", "goto"]
        );
    }

    #[test]
    fn nested_function_and_control() {
        let src = "int main() { int f(int x) { return x + 1; } \
                   while (i < 3) { if (i == 1) { break; } else { continue; } } \
                   try { throw 1; } catch (e) { } spawn f(2); return f(f(1)); }";
        let p = parse(src).unwrap();
        let ItemKind::Func(f) = &p.items[0].kind else { panic!() };
        assert!(matches!(f.body.stmts[0].kind, StmtKind::Func(_)));
        assert!(matches!(f.body.stmts[1].kind, StmtKind::While { .. }));
        assert!(matches!(f.body.stmts[2].kind, StmtKind::Try { .. }));
        assert!(matches!(f.body.stmts[3].kind, StmtKind::Spawn(_)));
    }

    #[test]
    fn binary_is_left_associative() {
        let p = parse("int x = 1 - 2 - 3;").unwrap();
        let ItemKind::Global(s) = &p.items[0].kind else { panic!() };
        let StmtKind::VarDecl(v) = &s.kind else { panic!() };
        let Some(Init::Assign(Expr::Binary(l, BinOp::Sub, r))) = &v.init else { panic!() };
        assert!(matches!(**l, Expr::Binary(_, BinOp::Sub, _)));
        assert!(matches!(**r, Expr::Int(3, _)));
    }

    #[test]
    fn nested_call_sites_are_ordered() {
        let p = parse("{ f2(f1(x)); }").unwrap();
        let ItemKind::Block(b) = &p.items[0].kind else { panic!() };
        let StmtKind::Call(outer) = &b.block.stmts[0].kind else { panic!() };
        let e = Expr::Call(outer.clone());
        let mut calls = Vec::new();
        e.calls(&mut calls);
        let names: Vec<&str> = calls.iter().map(|c| c.callee.ident().name.as_str()).collect();
        assert_eq!(names, ["f1", "f2"]);
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse("void f() { int x = ; }").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (1, 20));
        assert!(e.message.starts_with("expected expression"), "{}", e.message);
        let e = parse("void f() {").unwrap_err();
        assert!(e.message.contains("end of input"));
        let e = parse("42").unwrap_err();
        assert!(e.message.contains("declaration"));
    }

    #[test]
    fn comments_attach_to_following_statement() {
        let p = parse("void f() {\n  // first\n  int x;\n  // tail\n}\n// end").unwrap();
        let ItemKind::Func(f) = &p.items[0].kind else { panic!() };
        assert_eq!(f.body.stmts[0].doc[0].text, "first");
        assert_eq!(f.body.trailing[0].text, "tail");
        assert_eq!(p.trailing[0].text, "end");
    }
}
