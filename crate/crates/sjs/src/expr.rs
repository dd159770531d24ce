//! The core term language: desugared expressions as produced by the
//! surface parser and consumed by constraint generation and the
//! interpreter.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::span::Span;

/// A desugared core-calculus expression. Every node carries the source
/// span of the surface syntax it came from (synthetic for desugared
/// helpers).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Integer literal.
    Int(i64, Span),
    /// String literal. A second opaque base type alongside int.
    Str(String, Span),
    /// `var x = init; body` — the binder is in scope in `init` as well,
    /// which is what allows recursive functions.
    Let {
        name: String,
        init: Box<Expr>,
        body: Box<Expr>,
        span: Span,
    },
    /// Variable read.
    Var(String, Span),
    /// `x = e`, an expression whose value is the assigned value.
    Assign {
        name: String,
        value: Box<Expr>,
        span: Span,
    },
    /// `{}`.
    EmptyObj(Span),
    /// `{ f1: e1, ... } proto p`. Bare literals get an `EmptyObj` proto
    /// during desugaring.
    ObjLit {
        fields: Vec<(String, Expr)>,
        proto: Box<Expr>,
        span: Span,
    },
    Null(Span),
    This(Span),
    /// `e.f`
    FieldRead {
        obj: Box<Expr>,
        field: String,
        span: Span,
    },
    /// `e.f = v`
    FieldWrite {
        obj: Box<Expr>,
        field: String,
        value: Box<Expr>,
        span: Span,
    },
    /// `function (x) { e }` — becomes a method or a plain function at
    /// inference time depending on whether the body mentions `this`.
    Lambda {
        param: String,
        body: Box<Expr>,
        span: Span,
    },
    /// `e.f(arg)`
    MethodCall {
        recv: Box<Expr>,
        field: String,
        arg: Box<Expr>,
        span: Span,
    },
    /// `e(arg)`
    FunCall {
        callee: Box<Expr>,
        arg: Box<Expr>,
        span: Span,
    },
    /// `a + b` on integers.
    Add {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: Span,
    },
    /// `c ? a : b`. The condition is tested as a nonzero integer.
    Cond {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Int(_, s)
            | Expr::Str(_, s)
            | Expr::Var(_, s)
            | Expr::EmptyObj(s)
            | Expr::Null(s)
            | Expr::This(s) => *s,
            Expr::Let { span, .. }
            | Expr::Assign { span, .. }
            | Expr::ObjLit { span, .. }
            | Expr::FieldRead { span, .. }
            | Expr::FieldWrite { span, .. }
            | Expr::Lambda { span, .. }
            | Expr::MethodCall { span, .. }
            | Expr::FunCall { span, .. }
            | Expr::Add { span, .. }
            | Expr::Cond { span, .. } => *span,
        }
    }

    /// Direct subexpressions, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(..)
            | Expr::Str(..)
            | Expr::Var(..)
            | Expr::EmptyObj(..)
            | Expr::Null(..)
            | Expr::This(..) => vec![],
            Expr::Let { init, body, .. } => vec![init, body],
            Expr::Assign { value, .. } => vec![value],
            Expr::ObjLit { fields, proto, .. } => {
                let mut out: Vec<&Expr> = fields.iter().map(|(_, e)| e).collect();
                out.push(proto);
                out
            }
            Expr::FieldRead { obj, .. } => vec![obj],
            Expr::FieldWrite { obj, value, .. } => vec![obj, value],
            Expr::Lambda { body, .. } => vec![body],
            Expr::MethodCall { recv, arg, .. } => vec![recv, arg],
            Expr::FunCall { callee, arg, .. } => vec![callee, arg],
            Expr::Add { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Cond { cond, then, els, .. } => vec![cond, then, els],
        }
    }

    /// True iff `this` occurs in `self` outside of any nested lambda.
    /// Used to classify a lambda as a method (receiver-using) or a plain
    /// function.
    pub fn has_this(&self) -> bool {
        match self {
            Expr::This(_) => true,
            Expr::Lambda { .. } => false,
            other => other.children().iter().any(|c| c.has_this()),
        }
    }

    /// Free program variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(x, _) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Expr::Assign { name, value, .. } => {
                if !bound.iter().any(|b| b == name) {
                    out.insert(name.clone());
                }
                value.collect_free(bound, out);
            }
            Expr::Let { name, init, body, .. } => {
                bound.push(name.clone());
                init.collect_free(bound, out);
                body.collect_free(bound, out);
                bound.pop();
            }
            Expr::Lambda { param, body, .. } => {
                bound.push(param.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            other => {
                for c in other.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Multiset of int/str literal occurrences, used to check that
    /// desugaring drops none of them.
    pub fn literal_multiset(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            Expr::Int(n, _) => out.push(format!("int:{n}")),
            Expr::Str(s, _) => out.push(format!("str:{s}")),
            _ => {}
        });
        out.sort();
        out
    }

    /// Multiset of field-name occurrences (literal fields, reads, writes,
    /// method calls).
    pub fn field_multiset(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            Expr::ObjLit { fields, .. } => {
                out.extend(fields.iter().map(|(f, _)| f.clone()));
            }
            Expr::FieldRead { field, .. }
            | Expr::FieldWrite { field, .. }
            | Expr::MethodCall { field, .. } => out.push(field.clone()),
            _ => {}
        });
        out.sort();
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Structural copy with every span replaced by the synthetic span.
    /// Lets tests compare parse results modulo positions.
    pub fn strip_spans(&self) -> Expr {
        let s = Span::synthetic();
        match self {
            Expr::Int(n, _) => Expr::Int(*n, s),
            Expr::Str(v, _) => Expr::Str(v.clone(), s),
            Expr::Var(x, _) => Expr::Var(x.clone(), s),
            Expr::EmptyObj(_) => Expr::EmptyObj(s),
            Expr::Null(_) => Expr::Null(s),
            Expr::This(_) => Expr::This(s),
            Expr::Let { name, init, body, .. } => Expr::Let {
                name: name.clone(),
                init: Box::new(init.strip_spans()),
                body: Box::new(body.strip_spans()),
                span: s,
            },
            Expr::Assign { name, value, .. } => Expr::Assign {
                name: name.clone(),
                value: Box::new(value.strip_spans()),
                span: s,
            },
            Expr::ObjLit { fields, proto, .. } => Expr::ObjLit {
                fields: fields
                    .iter()
                    .map(|(f, e)| (f.clone(), e.strip_spans()))
                    .collect(),
                proto: Box::new(proto.strip_spans()),
                span: s,
            },
            Expr::FieldRead { obj, field, .. } => Expr::FieldRead {
                obj: Box::new(obj.strip_spans()),
                field: field.clone(),
                span: s,
            },
            Expr::FieldWrite { obj, field, value, .. } => Expr::FieldWrite {
                obj: Box::new(obj.strip_spans()),
                field: field.clone(),
                value: Box::new(value.strip_spans()),
                span: s,
            },
            Expr::Lambda { param, body, .. } => Expr::Lambda {
                param: param.clone(),
                body: Box::new(body.strip_spans()),
                span: s,
            },
            Expr::MethodCall { recv, field, arg, .. } => Expr::MethodCall {
                recv: Box::new(recv.strip_spans()),
                field: field.clone(),
                arg: Box::new(arg.strip_spans()),
                span: s,
            },
            Expr::FunCall { callee, arg, .. } => Expr::FunCall {
                callee: Box::new(callee.strip_spans()),
                arg: Box::new(arg.strip_spans()),
                span: s,
            },
            Expr::Add { lhs, rhs, .. } => Expr::Add {
                lhs: Box::new(lhs.strip_spans()),
                rhs: Box::new(rhs.strip_spans()),
                span: s,
            },
            Expr::Cond { cond, then, els, .. } => Expr::Cond {
                cond: Box::new(cond.strip_spans()),
                then: Box::new(then.strip_spans()),
                els: Box::new(els.strip_spans()),
                span: s,
            },
        }
    }

    /// Render back to parseable surface syntax.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        print_stmts(self, &mut out, 0);
        out
    }
}

// Precedence levels for expression printing, lowest binds loosest.
const PREC_ASSIGN: u8 = 0;
const PREC_COND: u8 = 1;
const PREC_ADD: u8 = 2;
const PREC_POSTFIX: u8 = 3;

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Print an expression in statement position: a `Let` spine becomes a
/// `var` sequence, anything else a single expression statement.
fn print_stmts(e: &Expr, out: &mut String, level: usize) {
    let mut cur = e;
    loop {
        match cur {
            Expr::Let { name, init, body, .. } => {
                indent(out, level);
                out.push_str("var ");
                out.push_str(name);
                out.push_str(" = ");
                print_expr(init, out, PREC_ASSIGN, level);
                out.push_str(";\n");
                // `var x = e` as the final statement desugars with body
                // `x`; fold that back into a single statement.
                if let Expr::Var(v, _) = body.as_ref() {
                    if v == name {
                        return;
                    }
                }
                cur = body;
            }
            other => {
                indent(out, level);
                print_expr(other, out, PREC_ASSIGN, level);
                out.push_str(";\n");
                return;
            }
        }
    }
}

fn print_expr(e: &Expr, out: &mut String, min_prec: u8, level: usize) {
    let prec = match e {
        Expr::Assign { .. } | Expr::FieldWrite { .. } => PREC_ASSIGN,
        Expr::Cond { .. } => PREC_COND,
        // an object literal's `proto` parent would greedily absorb any
        // postfix suffix on reparse, so parenthesize in those positions
        Expr::Add { .. } | Expr::ObjLit { .. } => PREC_ADD,
        _ => PREC_POSTFIX,
    };
    let parens = match e {
        Expr::Let { .. } => true,
        _ => prec < min_prec,
    };
    if parens {
        out.push('(');
    }
    match e {
        Expr::Int(n, _) => {
            let _ = write!(out, "{n}");
        }
        Expr::Str(s, _) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Expr::Var(x, _) => out.push_str(x),
        Expr::Null(_) => out.push_str("null"),
        Expr::This(_) => out.push_str("this"),
        Expr::EmptyObj(_) => out.push_str("{}"),
        Expr::Let { .. } => {
            // Let in expression position prints as a parenthesized
            // statement sequence (already wrapped in parens above).
            out.push(' ');
            let mut inner = String::new();
            print_stmts(e, &mut inner, 0);
            out.push_str(inner.trim_end().trim_end_matches(';'));
            out.push(' ');
        }
        Expr::Assign { name, value, .. } => {
            out.push_str(name);
            out.push_str(" = ");
            print_expr(value, out, PREC_ASSIGN, level);
        }
        Expr::ObjLit { fields, proto, .. } => {
            out.push_str("{ ");
            for (i, (f, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(f);
                out.push_str(": ");
                print_expr(v, out, PREC_COND, level);
            }
            out.push_str(" }");
            out.push_str(" proto ");
            print_expr(proto, out, PREC_POSTFIX, level);
        }
        Expr::FieldRead { obj, field, .. } => {
            print_expr(obj, out, PREC_POSTFIX, level);
            out.push('.');
            out.push_str(field);
        }
        Expr::FieldWrite { obj, field, value, .. } => {
            print_expr(obj, out, PREC_POSTFIX, level);
            out.push('.');
            out.push_str(field);
            out.push_str(" = ");
            print_expr(value, out, PREC_ASSIGN, level);
        }
        Expr::Lambda { param, body, .. } => {
            let _ = writeln!(out, "function ({param}) {{");
            print_stmts(body, out, level + 1);
            indent(out, level);
            out.push('}');
        }
        Expr::MethodCall { recv, field, arg, .. } => {
            print_expr(recv, out, PREC_POSTFIX, level);
            out.push('.');
            out.push_str(field);
            out.push('(');
            print_expr(arg, out, PREC_ASSIGN, level);
            out.push(')');
        }
        Expr::FunCall { callee, arg, .. } => {
            print_expr(callee, out, PREC_POSTFIX, level);
            out.push('(');
            print_expr(arg, out, PREC_ASSIGN, level);
            out.push(')');
        }
        Expr::Add { lhs, rhs, .. } => {
            print_expr(lhs, out, PREC_ADD, level);
            out.push_str(" + ");
            print_expr(rhs, out, PREC_POSTFIX, level);
        }
        Expr::Cond { cond, then, els, .. } => {
            print_expr(cond, out, PREC_ADD, level);
            out.push_str(" ? ");
            print_expr(then, out, PREC_COND, level);
            out.push_str(" : ");
            print_expr(els, out, PREC_COND, level);
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> Span {
        Span::synthetic()
    }

    #[test]
    fn has_this_direct_occurrence() {
        // body of Fig 1's m: this.a = x + this.d
        let body = Expr::FieldWrite {
            obj: Box::new(Expr::This(sp())),
            field: "a".into(),
            value: Box::new(Expr::Add {
                lhs: Box::new(Expr::Var("x".into(), sp())),
                rhs: Box::new(Expr::FieldRead {
                    obj: Box::new(Expr::This(sp())),
                    field: "d".into(),
                    span: sp(),
                }),
                span: sp(),
            }),
            span: sp(),
        };
        assert!(body.has_this());
    }

    #[test]
    fn has_this_plain_var_is_false() {
        assert!(!Expr::Var("x".into(), sp()).has_this());
    }

    #[test]
    fn has_this_ignores_nested_lambda() {
        // body: function (y) { this.a } — `this` only under a nested
        // lambda, so the outer body does not use its own receiver.
        let body = Expr::Lambda {
            param: "y".into(),
            body: Box::new(Expr::FieldRead {
                obj: Box::new(Expr::This(sp())),
                field: "a".into(),
                span: sp(),
            }),
            span: sp(),
        };
        assert!(!body.has_this());
        // but the nested body itself does
        if let Expr::Lambda { body: inner, .. } = &body {
            assert!(inner.has_this());
        }
    }

    #[test]
    fn free_vars_respect_binders() {
        // var x = y; x  — y free, x bound
        let e = Expr::Let {
            name: "x".into(),
            init: Box::new(Expr::Var("y".into(), sp())),
            body: Box::new(Expr::Var("x".into(), sp())),
            span: sp(),
        };
        let fv = e.free_vars();
        assert!(fv.contains("y"));
        assert!(!fv.contains("x"));
    }
}
