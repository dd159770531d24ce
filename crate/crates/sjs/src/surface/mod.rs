//! Surface syntax: lexing, parsing, and desugaring into the core term
//! language. Input files use the `.sjs` extension.

mod desugar;
mod lexer;
mod parser;

use std::fmt;

use crate::expr::Expr;
use crate::span::Span;

pub use desugar::desugar;
pub use parser::parse_surface;

/// A source file queued for checking.
#[derive(Clone, Debug)]
pub struct SourceProgram {
    pub text: String,
    pub path: String,
}

impl SourceProgram {
    pub fn new(text: impl Into<String>, path: impl Into<String>) -> SourceProgram {
        SourceProgram { text: text.into(), path: path.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: Span) -> ParseError {
        ParseError { message: message.into(), span }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parse and desugar a source program into a closed core expression.
pub fn parse(src: &SourceProgram) -> Result<Expr, ParseError> {
    let block = parse_surface(&src.text)?;
    desugar(&block)
}

/// Surface statement block; the value of a block is the value of its
/// final statement.
#[derive(Clone, Debug)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum Stmt {
    /// `var x = e;`
    VarDecl { name: String, init: SExpr, span: Span },
    /// `function f(x) { ... }` statement form, sugar for a var binding.
    FunDecl { name: String, param: Option<String>, body: Block, span: Span },
    /// Expression statement.
    Expr(SExpr),
    /// `return e;` — only meaningful as the final statement of a block.
    Return(SExpr, Span),
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::VarDecl { span, .. } | Stmt::FunDecl { span, .. } | Stmt::Return(_, span) => {
                *span
            }
            Stmt::Expr(e) => e.span(),
        }
    }
}

/// Surface expression, prior to desugaring.
#[derive(Clone, Debug)]
pub enum SExpr {
    Int(i64, Span),
    Str(String, Span),
    Null(Span),
    This(Span),
    Var(String, Span),
    Assign { name: String, value: Box<SExpr>, span: Span },
    /// `{ f: e, ... }` with optional `proto e`.
    ObjLit { fields: Vec<(String, SExpr)>, proto: Option<Box<SExpr>>, span: Span },
    FieldRead { obj: Box<SExpr>, field: String, span: Span },
    FieldWrite { obj: Box<SExpr>, field: String, value: Box<SExpr>, span: Span },
    Lambda { param: Option<String>, body: Block, span: Span },
    MethodCall { recv: Box<SExpr>, field: String, arg: Option<Box<SExpr>>, span: Span },
    FunCall { callee: Box<SExpr>, arg: Option<Box<SExpr>>, span: Span },
    Add { lhs: Box<SExpr>, rhs: Box<SExpr>, span: Span },
    Cond { cond: Box<SExpr>, then: Box<SExpr>, els: Box<SExpr>, span: Span },
    /// Parenthesized statement sequence, e.g. `(var x = 1; x)`.
    Seq(Block),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Int(_, s)
            | SExpr::Str(_, s)
            | SExpr::Null(s)
            | SExpr::This(s)
            | SExpr::Var(_, s) => *s,
            SExpr::Assign { span, .. }
            | SExpr::ObjLit { span, .. }
            | SExpr::FieldRead { span, .. }
            | SExpr::FieldWrite { span, .. }
            | SExpr::Lambda { span, .. }
            | SExpr::MethodCall { span, .. }
            | SExpr::FunCall { span, .. }
            | SExpr::Add { span, .. }
            | SExpr::Cond { span, .. } => *span,
            SExpr::Seq(b) => b.span,
        }
    }

    /// Multiset of int/str literals in the surface tree, for the
    /// desugaring-preservation property.
    pub fn literal_multiset(&self, out: &mut Vec<String>) {
        match self {
            SExpr::Int(n, _) => out.push(format!("int:{n}")),
            SExpr::Str(s, _) => out.push(format!("str:{s}")),
            SExpr::Assign { value, .. } => value.literal_multiset(out),
            SExpr::ObjLit { fields, proto, .. } => {
                for (_, e) in fields {
                    e.literal_multiset(out);
                }
                if let Some(p) = proto {
                    p.literal_multiset(out);
                }
            }
            SExpr::FieldRead { obj, .. } => obj.literal_multiset(out),
            SExpr::FieldWrite { obj, value, .. } => {
                obj.literal_multiset(out);
                value.literal_multiset(out);
            }
            SExpr::Lambda { body, .. } => block_literals(body, out),
            SExpr::MethodCall { recv, arg, .. } => {
                recv.literal_multiset(out);
                if let Some(a) = arg {
                    a.literal_multiset(out);
                }
            }
            SExpr::FunCall { callee, arg, .. } => {
                callee.literal_multiset(out);
                if let Some(a) = arg {
                    a.literal_multiset(out);
                }
            }
            SExpr::Add { lhs, rhs, .. } => {
                lhs.literal_multiset(out);
                rhs.literal_multiset(out);
            }
            SExpr::Cond { cond, then, els, .. } => {
                cond.literal_multiset(out);
                then.literal_multiset(out);
                els.literal_multiset(out);
            }
            SExpr::Seq(b) => block_literals(b, out),
            SExpr::Null(_) | SExpr::This(_) | SExpr::Var(..) => {}
        }
    }
}

pub fn block_literals(b: &Block, out: &mut Vec<String>) {
    for s in &b.stmts {
        match s {
            Stmt::VarDecl { init, .. } => init.literal_multiset(out),
            Stmt::FunDecl { body, .. } => block_literals(body, out),
            Stmt::Expr(e) => e.literal_multiset(out),
            Stmt::Return(e, _) => e.literal_multiset(out),
        }
    }
}

/// Multiset of field-name occurrences in a surface block.
pub fn block_fields(b: &Block, out: &mut Vec<String>) {
    for s in &b.stmts {
        match s {
            Stmt::VarDecl { init, .. } => expr_fields(init, out),
            Stmt::FunDecl { body, .. } => block_fields(body, out),
            Stmt::Expr(e) => expr_fields(e, out),
            Stmt::Return(e, _) => expr_fields(e, out),
        }
    }
}

fn expr_fields(e: &SExpr, out: &mut Vec<String>) {
    match e {
        SExpr::ObjLit { fields, proto, .. } => {
            for (f, v) in fields {
                out.push(f.clone());
                expr_fields(v, out);
            }
            if let Some(p) = proto {
                expr_fields(p, out);
            }
        }
        SExpr::FieldRead { obj, field, .. } => {
            out.push(field.clone());
            expr_fields(obj, out);
        }
        SExpr::FieldWrite { obj, field, value, .. } => {
            out.push(field.clone());
            expr_fields(obj, out);
            expr_fields(value, out);
        }
        SExpr::MethodCall { recv, field, arg, .. } => {
            out.push(field.clone());
            expr_fields(recv, out);
            if let Some(a) = arg {
                expr_fields(a, out);
            }
        }
        SExpr::Assign { value, .. } => expr_fields(value, out),
        SExpr::Lambda { body, .. } => block_fields(body, out),
        SExpr::FunCall { callee, arg, .. } => {
            expr_fields(callee, out);
            if let Some(a) = arg {
                expr_fields(a, out);
            }
        }
        SExpr::Add { lhs, rhs, .. } => {
            expr_fields(lhs, out);
            expr_fields(rhs, out);
        }
        SExpr::Cond { cond, then, els, .. } => {
            expr_fields(cond, out);
            expr_fields(then, out);
            expr_fields(els, out);
        }
        SExpr::Seq(b) => block_fields(b, out),
        SExpr::Int(..) | SExpr::Str(..) | SExpr::Null(_) | SExpr::This(_) | SExpr::Var(..) => {}
    }
}
