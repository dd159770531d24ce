//! Constraint generation: the judgment `<Xr, Gamma> |- e : X -| C`.
//!
//! Each expression form emits exactly the constraints of its rule into
//! the store and returns the result variable. Equalities `X^s == L` and
//! `X^s == Y^t` always expand into the two subtype constraints.

use std::collections::HashMap;
use std::fmt;

use crate::constraints::{Constraint, ConstraintStore, Literal, TypeVar};
use crate::expr::Expr;
use crate::span::Span;

/// Receiver variable and lexical environment for one generation scope.
#[derive(Clone)]
pub struct InferEnv {
    pub recv: TypeVar,
    vars: HashMap<String, TypeVar>,
}

impl InferEnv {
    pub fn new(recv: TypeVar) -> InferEnv {
        InferEnv { recv, vars: HashMap::new() }
    }

    fn bind(&self, name: &str, var: TypeVar) -> InferEnv {
        let mut next = self.clone();
        next.vars.insert(name.to_string(), var);
        next
    }

    fn lookup(&self, name: &str) -> Option<TypeVar> {
        self.vars.get(name).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnboundVariable {
    pub name: String,
    pub span: Span,
}

impl fmt::Display for UnboundVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: unbound variable `{}`", self.span, self.name)
    }
}

impl std::error::Error for UnboundVariable {}

/// A `var` binding on the top-level statement spine, reported by the
/// `infer` command.
#[derive(Clone, Debug)]
pub struct TopBinding {
    pub name: String,
    pub var: TypeVar,
    pub span: Span,
}

#[derive(Debug)]
pub struct GenOutput {
    pub result: TypeVar,
    pub bindings: Vec<TopBinding>,
}

/// Generate constraints for a whole program. Creates the top-level
/// receiver variable, then walks the term.
pub fn generate_program(e: &Expr, store: &mut ConstraintStore) -> Result<GenOutput, UnboundVariable> {
    let recv = store.fresh_typevar(Span::synthetic(), "top-level receiver");
    let mut cx = Cx { store, bindings: Vec::new() };
    let result = cx.gen(e, &InferEnv::new(recv), true)?;
    Ok(GenOutput { result, bindings: cx.bindings })
}

/// Generate constraints for one expression under an existing
/// environment.
pub fn generate(
    e: &Expr,
    env: &InferEnv,
    store: &mut ConstraintStore,
) -> Result<TypeVar, UnboundVariable> {
    let mut cx = Cx { store, bindings: Vec::new() };
    cx.gen(e, env, false)
}

struct Cx<'a> {
    store: &'a mut ConstraintStore,
    bindings: Vec<TopBinding>,
}

impl<'a> Cx<'a> {
    fn add(&mut self, c: Constraint, span: Span) {
        self.store.add(c, span);
    }

    /// `X^s == L` as the two subtype constraints.
    fn eq_lit(&mut self, rv: crate::constraints::RowVar, lit: Literal, span: Span) {
        let id = self.store.intern(lit);
        self.add(Constraint::SubLV(id, rv), span);
        self.add(Constraint::SubVL(rv, id), span);
    }

    /// `X^r <: Y^r /\ X^w <: Y^w` (the figure's r/w-subtype shorthand).
    fn rw_sub(&mut self, sub: TypeVar, sup: TypeVar, span: Span) {
        self.add(Constraint::SubVV(sub.r(), sup.r()), span);
        self.add(Constraint::SubVV(sub.w(), sup.w()), span);
    }

    fn gen(&mut self, e: &Expr, env: &InferEnv, top: bool) -> Result<TypeVar, UnboundVariable> {
        match e {
            // C-Int
            Expr::Int(_, span) => {
                let x = self.store.fresh_typevar(*span, "int literal");
                self.eq_lit(x.r(), Literal::Int, *span);
                Ok(x)
            }
            // the str analogue of C-Int
            Expr::Str(_, span) => {
                let x = self.store.fresh_typevar(*span, "string literal");
                self.eq_lit(x.r(), Literal::Str, *span);
                Ok(x)
            }
            // C-Var
            Expr::Var(name, span) => env.lookup(name).ok_or_else(|| UnboundVariable {
                name: name.clone(),
                span: *span,
            }),
            // C-This
            Expr::This(_) => Ok(env.recv),
            // C-VarDecl: the binder is in scope in the initializer
            Expr::Let { name, init, body, span } => {
                let x1 = self.store.fresh_typevar(*span, format!("var `{name}`"));
                if top {
                    self.bindings.push(TopBinding { name: name.clone(), var: x1, span: *span });
                }
                let inner = env.bind(name, x1);
                let y1 = self.gen(init, &inner, false)?;
                self.rw_sub(y1, x1, *span);
                let x = self.gen(body, &inner, top)?;
                Ok(x)
            }
            // C-VarUpd
            Expr::Assign { name, value, span } => {
                let x1 = env.lookup(name).ok_or_else(|| UnboundVariable {
                    name: name.clone(),
                    span: *span,
                })?;
                let x = self.gen(value, env, false)?;
                self.rw_sub(x, x1, *span);
                Ok(x)
            }
            // C-Null
            Expr::Null(span) => {
                let x = self.store.fresh_typevar(*span, "null literal");
                let empty = self.store.intern(Literal::empty_row());
                self.add(Constraint::SubVL(x.w(), empty), *span);
                Ok(x)
            }
            // C-ObjEmp
            Expr::EmptyObj(span) => {
                let x = self.store.fresh_typevar(*span, "empty object literal");
                self.add(Constraint::Proto(x), *span);
                self.eq_lit(x.r(), Literal::empty_row(), *span);
                self.eq_lit(x.mr(), Literal::empty_row(), *span);
                Ok(x)
            }
            // C-MethDecl / C-FunDecl, depending on whether the body
            // mentions `this`
            Expr::Lambda { param, body, span } => {
                if body.has_this() {
                    // C-MethDecl
                    let yr = self.store.fresh_typevar(*span, "method receiver");
                    let y1 = self
                        .store
                        .fresh_typevar(*span, format!("method parameter `{param}`"));
                    let x = self.store.fresh_typevar(*span, "method literal");
                    let inner = InferEnv { recv: yr, ..env.clone() }.bind(param, y1);
                    let y2 = self.gen(body, &inner, false)?;
                    let empty = self.store.intern(Literal::empty_row());
                    self.add(Constraint::SubVL(yr.w(), empty), *span);
                    self.add(Constraint::Conc(yr), *span);
                    self.add(Constraint::NotProto(yr), *span);
                    self.eq_lit(x.r(), Literal::Method { recv: yr, param: y1, ret: y2 }, *span);
                    Ok(x)
                } else {
                    // C-FunDecl
                    let x1 = self
                        .store
                        .fresh_typevar(*span, format!("function parameter `{param}`"));
                    let xr = self.store.fresh_typevar(*span, "unused function receiver");
                    let x = self.store.fresh_typevar(*span, "function literal");
                    let inner = InferEnv { recv: xr, ..env.clone() }.bind(param, x1);
                    let y = self.gen(body, &inner, false)?;
                    self.eq_lit(xr.r(), Literal::empty_row(), *span);
                    self.eq_lit(x.r(), Literal::Fun { param: x1, ret: y }, *span);
                    Ok(x)
                }
            }
            // C-MethApp
            Expr::MethodCall { recv, field, arg, span } => {
                let x1 = self.gen(recv, env, false)?;
                let x2 = self.gen(arg, env, false)?;
                let xm = self
                    .store
                    .fresh_typevar(*span, format!("method `{field}` at call site"));
                let yr = self.store.fresh_typevar(*span, "call receiver");
                let x3 = self.store.fresh_typevar(*span, "call argument target");
                let x = self.store.fresh_typevar(*span, "call result");
                let recv_row = self.store.intern(Literal::row([(field.clone(), xm)]));
                self.add(Constraint::SubVL(x1.r(), recv_row), *span);
                self.eq_lit(xm.r(), Literal::Method { recv: yr, param: x3, ret: x }, *span);
                self.add(Constraint::Strip(xm), *span);
                self.add(Constraint::Conc(x1), *span);
                self.add(Constraint::Conc(yr), *span);
                let empty = self.store.intern(Literal::empty_row());
                self.add(Constraint::SubVL(yr.w(), empty), *span);
                self.add(Constraint::NotProto(yr), *span);
                self.rw_sub(x2, x3, *span);
                Ok(x)
            }
            // C-FunApp
            Expr::FunCall { callee, arg, span } => {
                let x1 = self.gen(callee, env, false)?;
                let x2 = self.gen(arg, env, false)?;
                let x3 = self.store.fresh_typevar(*span, "call argument target");
                let x = self.store.fresh_typevar(*span, "call result");
                self.eq_lit(x1.r(), Literal::Fun { param: x3, ret: x }, *span);
                self.rw_sub(x2, x3, *span);
                Ok(x)
            }
            // C-Attr: reads apply to non-methods
            Expr::FieldRead { obj, field, span } => {
                let x1 = self.gen(obj, env, false)?;
                let x = self.store.fresh_typevar(*span, format!("read of `.{field}`"));
                let row = self.store.intern(Literal::row([(field.clone(), x)]));
                self.add(Constraint::SubVL(x1.r(), row), *span);
                self.add(Constraint::NotMethod(x), *span);
                Ok(x)
            }
            // C-AttrUpd
            Expr::FieldWrite { obj, field, value, span } => {
                let xb = self.gen(obj, env, false)?;
                let xv = self.gen(value, env, false)?;
                let xf = self
                    .store
                    .fresh_typevar(*span, format!("field `{field}` being written"));
                let row = self.store.intern(Literal::row([(field.clone(), xf)]));
                self.add(Constraint::SubVL(xb.w(), row), *span);
                self.rw_sub(xv, xf, *span);
                self.add(Constraint::Attach { base: xb, field: xf, value: xv }, *span);
                Ok(xv)
            }
            // C-ObjLit: prototype first, then fields left to right
            Expr::ObjLit { fields, proto, span } => {
                let x = self.store.fresh_typevar(*span, "object literal");
                let xp = self.gen(proto, env, false)?;
                let mut w_fields = Vec::new();
                for (fname, fexpr) in fields {
                    let xi = self
                        .store
                        .fresh_typevar(fexpr.span(), format!("field `{fname}` of object literal"));
                    let yi = self.gen(fexpr, env, false)?;
                    self.rw_sub(yi, xi, fexpr.span());
                    self.add(Constraint::Attach { base: x, field: xi, value: yi }, fexpr.span());
                    w_fields.push((fname.clone(), xi));
                }
                self.eq_lit(x.w(), Literal::row(w_fields), *span);
                self.add(Constraint::SubVV(x.r(), xp.r()), *span);
                let mut minus: Vec<String> = fields.iter().map(|(f, _)| f.clone()).collect();
                minus.sort();
                minus.dedup();
                self.add(Constraint::SubVMinus(xp.r(), x.r(), minus), *span);
                self.add(Constraint::Proto(x), *span);
                self.add(Constraint::Proto(xp), *span);
                self.add(Constraint::SubVV(x.mr(), xp.mr()), *span);
                self.add(Constraint::SubVV(x.mw(), xp.mw()), *span);
                Ok(x)
            }
            // both operands and the result are ints
            Expr::Add { lhs, rhs, span } => {
                let x1 = self.gen(lhs, env, false)?;
                let x2 = self.gen(rhs, env, false)?;
                let int = self.store.intern(Literal::Int);
                self.add(Constraint::SubVL(x1.r(), int), *span);
                self.add(Constraint::SubVL(x2.r(), int), *span);
                let x = self.store.fresh_typevar(*span, "sum");
                self.eq_lit(x.r(), Literal::Int, *span);
                Ok(x)
            }
            // flow-insensitive conditional: both arms flow into one join
            // variable; the condition is used as an int
            Expr::Cond { cond, then, els, span } => {
                let xc = self.gen(cond, env, false)?;
                let int = self.store.intern(Literal::Int);
                self.add(Constraint::SubVL(xc.r(), int), *span);
                let join = self.store.fresh_typevar(*span, "conditional join");
                let ya = self.gen(then, env, false)?;
                self.rw_sub(ya, join, then.span());
                let yb = self.gen(els, env, false)?;
                self.rw_sub(yb, join, els.span());
                Ok(join)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Constraint, RowVar, Sort};
    use crate::surface::{parse, SourceProgram};

    fn gen_src(text: &str) -> (ConstraintStore, GenOutput) {
        let e = parse(&SourceProgram::new(text, "t.sjs")).expect("parse");
        let mut store = ConstraintStore::new();
        let out = generate_program(&e, &mut store).expect("generate");
        (store, out)
    }

    /// Find the unique typevar whose origin description contains `what`.
    fn var_by_origin(store: &ConstraintStore, what: &str) -> TypeVar {
        let hits: Vec<TypeVar> = store
            .typevars()
            .filter(|v| store.origin(*v).what.contains(what))
            .collect();
        assert_eq!(hits.len(), 1, "expected one var for {what:?}, got {hits:?}");
        hits[0]
    }

    #[test]
    fn int_literal_gets_int_equality() {
        let (store, out) = gen_src("7");
        let x = out.result;
        let int = store.lookup_lit(&Literal::Int).unwrap();
        assert!(store.contains(&Constraint::SubVL(x.r(), int)));
        assert!(store.contains(&Constraint::SubLV(int, x.r())));
    }

    #[test]
    fn this_adds_no_constraints() {
        let e = parse(&SourceProgram::new("function (x) { this };", "t.sjs")).unwrap();
        // dig out the lambda body
        let mut store = ConstraintStore::new();
        let recv = store.fresh_typevar(Span::synthetic(), "test receiver");
        let before = store.num_constraints();
        let body = match &e {
            Expr::Lambda { body, .. } => body.as_ref().clone(),
            other => panic!("unexpected shape {other:?}"),
        };
        let env = InferEnv::new(recv);
        let got = generate(&body, &env, &mut store).unwrap();
        assert_eq!(got, recv);
        assert_eq!(store.num_constraints(), before);
    }

    #[test]
    fn generation_is_deterministic() {
        let text = "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
                    var v2 = { a : 2 } proto v1; v2";
        let (s1, o1) = gen_src(text);
        let (s2, o2) = gen_src(text);
        assert_eq!(o1.result, o2.result);
        let c1: Vec<_> = s1.constraints().map(|(c, _)| c.clone()).collect();
        let c2: Vec<_> = s2.constraints().map(|(c, _)| c.clone()).collect();
        assert_eq!(c1, c2);
    }

    #[test]
    fn emitted_constraints_reference_live_vars() {
        let (store, _) = gen_src(
            "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
             var v2 = { a : 2 } proto v1; v2.m(3)",
        );
        let n = store.num_typevars() as u32;
        for (c, _) in store.constraints() {
            let vars: Vec<TypeVar> = match c {
                Constraint::SubLV(_, rv) | Constraint::SubVL(rv, _) => vec![rv.var],
                Constraint::SubVV(a, b) | Constraint::SubVMinus(a, b, _) => vec![a.var, b.var],
                Constraint::Proto(v)
                | Constraint::Conc(v)
                | Constraint::Strip(v)
                | Constraint::NotMethod(v)
                | Constraint::NotProto(v) => vec![*v],
                Constraint::Attach { base, field, value } => vec![*base, *field, *value],
            };
            for v in vars {
                assert!(v.0 < n);
            }
        }
    }

    #[test]
    fn fig8_style_edges_for_object_with_prototype() {
        // v1 = { d: 1, m: function(x){ this.a = x + this.d } };
        // o2 = { a: 2 } proto v1
        let (store, _) = gen_src(
            "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
             var v2 = { a : 2 } proto v1; v2",
        );
        let v1 = var_by_origin(&store, "var `v1`");
        let o2 = {
            // the second object literal is the one with field `a`
            let lits: Vec<TypeVar> = store
                .typevars()
                .filter(|v| store.origin(*v).what == "object literal")
                .collect();
            assert_eq!(lits.len(), 2);
            lits[1]
        };
        let o1 = {
            let lits: Vec<TypeVar> = store
                .typevars()
                .filter(|v| store.origin(*v).what == "object literal")
                .collect();
            lits[0]
        };
        let m_field = var_by_origin(&store, "field `m` of object literal");
        let f = var_by_origin(&store, "method literal");

        // O1 rw<: V1 from the var declaration
        assert!(store.contains(&Constraint::SubVV(o1.r(), v1.r())));
        assert!(store.contains(&Constraint::SubVV(o1.w(), v1.w())));
        // inheritance edges for o2
        assert!(store.contains(&Constraint::SubVV(o2.r(), v1.r())));
        assert!(store.contains(&Constraint::SubVMinus(v1.r(), o2.r(), vec!["a".into()])));
        assert!(store.contains(&Constraint::SubVV(o2.mr(), v1.mr())));
        assert!(store.contains(&Constraint::SubVV(o2.mw(), v1.mw())));
        // o2's writeable row equality
        let a_field = var_by_origin(&store, "field `a` of object literal");
        let w_row = store.lookup_lit(&Literal::row([("a".to_string(), a_field)])).unwrap();
        assert!(store.contains(&Constraint::SubVL(o2.w(), w_row)));
        assert!(store.contains(&Constraint::SubLV(w_row, o2.w())));
        // method attachment on o1
        assert!(store.contains(&Constraint::Attach { base: o1, field: m_field, value: f }));
        // prototypal constraints
        assert!(store.contains(&Constraint::Proto(o2)));
        assert!(store.contains(&Constraint::Proto(v1)));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let e = parse(&SourceProgram::new("nope", "t.sjs")).unwrap();
        let mut store = ConstraintStore::new();
        let err = generate_program(&e, &mut store).unwrap_err();
        assert_eq!(err.name, "nope");
    }

    #[test]
    fn method_decl_emits_receiver_constraints() {
        let (store, out) = gen_src("function (x) { this.a = x };");
        let yr = var_by_origin(&store, "method receiver");
        let x = out.result;
        assert!(store.contains(&Constraint::Conc(yr)));
        assert!(store.contains(&Constraint::NotProto(yr)));
        let empty = store.lookup_lit(&Literal::empty_row()).unwrap();
        assert!(store.contains(&Constraint::SubVL(RowVar::new(yr, Sort::W), empty)));
        // X^r == m(Yr, Y1, Y2)
        let has_method_eq = store.constraints().any(|(c, _)| {
            matches!(c, Constraint::SubVL(rv, l)
                if *rv == x.r() && matches!(store.lit(*l), Literal::Method { recv, .. } if *recv == yr))
        });
        assert!(has_method_eq);
    }

    #[test]
    fn plain_lambda_uses_function_rule() {
        let (store, out) = gen_src("function (x) { x };");
        let x = out.result;
        let has_fun_eq = store.constraints().any(|(c, _)| {
            matches!(c, Constraint::SubVL(rv, l)
                if *rv == x.r() && matches!(store.lit(*l), Literal::Fun { .. }))
        });
        assert!(has_fun_eq);
        // no receiver-concreteness constraints for plain functions
        let yr = var_by_origin(&store, "unused function receiver");
        assert!(!store.contains(&Constraint::Conc(yr)));
    }
}
