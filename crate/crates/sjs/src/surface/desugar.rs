//! Desugaring from the surface statement language to core expressions.
//!
//! - `var x = e; rest` becomes `let x = e in rest`; a trailing `var`
//!   yields the bound variable as the block value.
//! - `e; rest` becomes a let on a fresh name.
//! - `function f(x) { .. }` statements become `var f = function ..`.
//! - a bare object literal gets an `{}` prototype.
//! - zero-parameter functions get a fresh unused parameter; zero-argument
//!   calls pass `null`.
//! - `return e` is only allowed as the final statement and yields `e`.

use std::collections::HashSet;

use crate::expr::Expr;
use crate::span::Span;

use super::{Block, ParseError, SExpr, Stmt};

pub fn desugar(block: &Block) -> Result<Expr, ParseError> {
    let mut cx = Cx { used: collect_names(block), counter: 0 };
    cx.block(block, 0)
}

struct Cx {
    used: HashSet<String>,
    counter: u32,
}

impl Cx {
    fn fresh(&mut self, hint: &str) -> String {
        loop {
            let name = format!("${}{}", hint, self.counter);
            self.counter += 1;
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    fn block(&mut self, b: &Block, lambda_depth: u32) -> Result<Expr, ParseError> {
        if b.stmts.is_empty() {
            return Err(ParseError::new("empty program", b.span));
        }
        self.stmts(&b.stmts, lambda_depth)
    }

    fn stmts(&mut self, stmts: &[Stmt], depth: u32) -> Result<Expr, ParseError> {
        let (first, rest) = stmts.split_first().expect("nonempty statement list");
        match first {
            Stmt::VarDecl { name, init, span } => {
                let init = self.expr(init, depth)?;
                let body = if rest.is_empty() {
                    Expr::Var(name.clone(), *span)
                } else {
                    self.stmts(rest, depth)?
                };
                Ok(Expr::Let {
                    name: name.clone(),
                    init: Box::new(init),
                    body: Box::new(body),
                    span: *span,
                })
            }
            Stmt::FunDecl { name, param, body, span } => {
                let lambda = self.lambda(param, body, *span, depth)?;
                let rest_expr = if rest.is_empty() {
                    Expr::Var(name.clone(), *span)
                } else {
                    self.stmts(rest, depth)?
                };
                Ok(Expr::Let {
                    name: name.clone(),
                    init: Box::new(lambda),
                    body: Box::new(rest_expr),
                    span: *span,
                })
            }
            Stmt::Return(e, span) => {
                if !rest.is_empty() {
                    return Err(ParseError::new(
                        "`return` must be the final statement",
                        *span,
                    ));
                }
                self.expr(e, depth)
            }
            Stmt::Expr(e) => {
                let value = self.expr(e, depth)?;
                if rest.is_empty() {
                    Ok(value)
                } else {
                    let body = self.stmts(rest, depth)?;
                    let span = value.span();
                    Ok(Expr::Let {
                        name: self.fresh("t"),
                        init: Box::new(value),
                        body: Box::new(body),
                        span,
                    })
                }
            }
        }
    }

    fn lambda(
        &mut self,
        param: &Option<String>,
        body: &Block,
        span: Span,
        depth: u32,
    ) -> Result<Expr, ParseError> {
        let param = match param {
            Some(p) => p.clone(),
            None => self.fresh("p"),
        };
        let body = if body.stmts.is_empty() {
            Expr::Null(span)
        } else {
            self.stmts(&body.stmts, depth + 1)?
        };
        Ok(Expr::Lambda { param, body: Box::new(body), span })
    }

    fn expr(&mut self, e: &SExpr, depth: u32) -> Result<Expr, ParseError> {
        Ok(match e {
            SExpr::Int(n, s) => Expr::Int(*n, *s),
            SExpr::Str(v, s) => Expr::Str(v.clone(), *s),
            SExpr::Null(s) => Expr::Null(*s),
            SExpr::This(s) => {
                if depth == 0 {
                    return Err(ParseError::new(
                        "`this` is only allowed inside a function body",
                        *s,
                    ));
                }
                Expr::This(*s)
            }
            SExpr::Var(x, s) => Expr::Var(x.clone(), *s),
            SExpr::Assign { name, value, span } => Expr::Assign {
                name: name.clone(),
                value: Box::new(self.expr(value, depth)?),
                span: *span,
            },
            SExpr::ObjLit { fields, proto, span } => {
                if fields.is_empty() && proto.is_none() {
                    Expr::EmptyObj(*span)
                } else {
                    let fields = fields
                        .iter()
                        .map(|(f, v)| Ok((f.clone(), self.expr(v, depth)?)))
                        .collect::<Result<Vec<_>, ParseError>>()?;
                    let proto = match proto {
                        Some(p) => self.expr(p, depth)?,
                        None => Expr::EmptyObj(*span),
                    };
                    Expr::ObjLit { fields, proto: Box::new(proto), span: *span }
                }
            }
            SExpr::FieldRead { obj, field, span } => Expr::FieldRead {
                obj: Box::new(self.expr(obj, depth)?),
                field: field.clone(),
                span: *span,
            },
            SExpr::FieldWrite { obj, field, value, span } => Expr::FieldWrite {
                obj: Box::new(self.expr(obj, depth)?),
                field: field.clone(),
                value: Box::new(self.expr(value, depth)?),
                span: *span,
            },
            SExpr::Lambda { param, body, span } => self.lambda(param, body, *span, depth)?,
            SExpr::MethodCall { recv, field, arg, span } => Expr::MethodCall {
                recv: Box::new(self.expr(recv, depth)?),
                field: field.clone(),
                arg: Box::new(match arg {
                    Some(a) => self.expr(a, depth)?,
                    None => Expr::Null(*span),
                }),
                span: *span,
            },
            SExpr::FunCall { callee, arg, span } => Expr::FunCall {
                callee: Box::new(self.expr(callee, depth)?),
                arg: Box::new(match arg {
                    Some(a) => self.expr(a, depth)?,
                    None => Expr::Null(*span),
                }),
                span: *span,
            },
            SExpr::Add { lhs, rhs, span } => Expr::Add {
                lhs: Box::new(self.expr(lhs, depth)?),
                rhs: Box::new(self.expr(rhs, depth)?),
                span: *span,
            },
            SExpr::Cond { cond, then, els, span } => Expr::Cond {
                cond: Box::new(self.expr(cond, depth)?),
                then: Box::new(self.expr(then, depth)?),
                els: Box::new(self.expr(els, depth)?),
                span: *span,
            },
            SExpr::Seq(b) => self.block(b, depth)?,
        })
    }
}

fn collect_names(b: &Block) -> HashSet<String> {
    let mut out = HashSet::new();
    collect_block(b, &mut out);
    out
}

fn collect_block(b: &Block, out: &mut HashSet<String>) {
    for s in &b.stmts {
        match s {
            Stmt::VarDecl { name, init, .. } => {
                out.insert(name.clone());
                collect_expr(init, out);
            }
            Stmt::FunDecl { name, param, body, .. } => {
                out.insert(name.clone());
                if let Some(p) = param {
                    out.insert(p.clone());
                }
                collect_block(body, out);
            }
            Stmt::Expr(e) => collect_expr(e, out),
            Stmt::Return(e, _) => collect_expr(e, out),
        }
    }
}

fn collect_expr(e: &SExpr, out: &mut HashSet<String>) {
    match e {
        SExpr::Var(x, _) => {
            out.insert(x.clone());
        }
        SExpr::Assign { name, value, .. } => {
            out.insert(name.clone());
            collect_expr(value, out);
        }
        SExpr::ObjLit { fields, proto, .. } => {
            for (_, v) in fields {
                collect_expr(v, out);
            }
            if let Some(p) = proto {
                collect_expr(p, out);
            }
        }
        SExpr::FieldRead { obj, .. } => collect_expr(obj, out),
        SExpr::FieldWrite { obj, value, .. } => {
            collect_expr(obj, out);
            collect_expr(value, out);
        }
        SExpr::Lambda { param, body, .. } => {
            if let Some(p) = param {
                out.insert(p.clone());
            }
            collect_block(body, out);
        }
        SExpr::MethodCall { recv, arg, .. } => {
            collect_expr(recv, out);
            if let Some(a) = arg {
                collect_expr(a, out);
            }
        }
        SExpr::FunCall { callee, arg, .. } => {
            collect_expr(callee, out);
            if let Some(a) = arg {
                collect_expr(a, out);
            }
        }
        SExpr::Add { lhs, rhs, .. } => {
            collect_expr(lhs, out);
            collect_expr(rhs, out);
        }
        SExpr::Cond { cond, then, els, .. } => {
            collect_expr(cond, out);
            collect_expr(then, out);
            collect_expr(els, out);
        }
        SExpr::Seq(b) => collect_block(b, out),
        SExpr::Int(..) | SExpr::Str(..) | SExpr::Null(_) | SExpr::This(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::Expr;
    use crate::surface::{parse, parse_surface, SourceProgram};

    fn parse_ok(text: &str) -> Expr {
        parse(&SourceProgram::new(text, "test.sjs")).expect("parse")
    }

    #[test]
    fn fig1_first_binding_shape() {
        let e = parse_ok("var v1 = { d : 1, m : function (x) { this.a = x + this.d } };");
        // Let v1 = ObjLit{d, m; proto {}} in v1
        match &e {
            Expr::Let { name, init, body, .. } => {
                assert_eq!(name, "v1");
                match init.as_ref() {
                    Expr::ObjLit { fields, proto, .. } => {
                        let names: Vec<_> = fields.iter().map(|(f, _)| f.as_str()).collect();
                        assert_eq!(names, ["d", "m"]);
                        assert!(matches!(proto.as_ref(), Expr::EmptyObj(_)));
                        assert!(matches!(fields[1].1, Expr::Lambda { .. }));
                    }
                    other => panic!("expected object literal, got {other:?}"),
                }
                assert!(matches!(body.as_ref(), Expr::Var(v, _) if v == "v1"));
            }
            other => panic!("expected let, got {other:?}"),
        }
    }

    #[test]
    fn proto_expression_parses() {
        let e = parse_ok("var v1 = {}; { a : 2 } proto v1;");
        // second statement is the block value
        match &e {
            Expr::Let { body, .. } => match body.as_ref() {
                Expr::ObjLit { fields, proto, .. } => {
                    assert_eq!(fields.len(), 1);
                    assert_eq!(fields[0].0, "a");
                    assert!(matches!(fields[0].1, Expr::Int(2, _)));
                    assert!(matches!(proto.as_ref(), Expr::Var(v, _) if v == "v1"));
                }
                other => panic!("expected object literal, got {other:?}"),
            },
            other => panic!("expected let, got {other:?}"),
        }
    }

    #[test]
    fn empty_program_is_a_parse_error() {
        assert!(parse(&SourceProgram::new("", "empty.sjs")).is_err());
        assert!(parse(&SourceProgram::new("  // only a comment\n", "c.sjs")).is_err());
    }

    #[test]
    fn this_outside_function_rejected() {
        assert!(parse(&SourceProgram::new("this.a;", "t.sjs")).is_err());
        assert!(parse(&SourceProgram::new("function (x) { this.a };", "t.sjs")).is_ok());
    }

    #[test]
    fn duplicate_fields_rejected() {
        assert!(parse(&SourceProgram::new("var o = { a: 1, a: 2 };", "d.sjs")).is_err());
    }

    #[test]
    fn return_must_be_last() {
        assert!(parse(&SourceProgram::new(
            "function f(x) { return x; var y = 1; }; f",
            "r.sjs"
        ))
        .is_err());
        assert!(parse(&SourceProgram::new(
            "function f(x) { var y = x; return y; }; f",
            "r.sjs"
        ))
        .is_ok());
    }

    #[test]
    fn semicolons_optional_between_statements() {
        let a = parse_ok("var a = 1\nvar b = 2\nb");
        let b = parse_ok("var a = 1; var b = 2; b;");
        assert_eq!(a.strip_spans(), b.strip_spans());
    }

    #[test]
    fn desugaring_preserves_literal_multiset() {
        let text = r#"
            var v1 = { d : 1, m : function (x) { this.a = x + this.d } };
            var v2 = { a : 2 } proto v1;
            v2.m(3);
            var v4 = 1 ? v2 : { d : 5 };
            "check" ;
            v4
        "#;
        let surface = parse_surface(text).unwrap();
        let mut surf_lits = Vec::new();
        crate::surface::block_literals(&surface, &mut surf_lits);
        surf_lits.sort();
        let core = parse_ok(text);
        assert_eq!(core.literal_multiset(), surf_lits);

        let mut surf_fields = Vec::new();
        crate::surface::block_fields(&surface, &mut surf_fields);
        surf_fields.sort();
        assert_eq!(core.field_multiset(), surf_fields);
    }

    #[test]
    fn zero_arg_call_passes_null() {
        let e = parse_ok("var o = { m: function () { this.f = 3 } }; o.m();");
        let mut saw_call = false;
        e.walk(&mut |n| {
            if let Expr::MethodCall { arg, .. } = n {
                saw_call = true;
                assert!(matches!(arg.as_ref(), Expr::Null(_)));
            }
        });
        assert!(saw_call);
    }

    #[test]
    fn parenthesized_sequence_is_an_expression() {
        let e = parse_ok("var x = (var y = 1; y + 1); x");
        match &e {
            Expr::Let { init, .. } => assert!(matches!(init.as_ref(), Expr::Let { .. })),
            other => panic!("expected let, got {other:?}"),
        }
    }
}
