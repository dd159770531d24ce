//! Random program generation and the end-to-end soundness check: every
//! program the inference accepts must run to a value, a null-dereference
//! error, or a timeout — never a stuck configuration — and its
//! assignment must verify.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::interp::{run, Outcome};
use crate::pipeline::{check_expr, PipelineError};
use crate::solver::SolverOptions;
use crate::span::Span;

/// Fields are drawn from a small pool so that generated programs
/// collide on field names and the literal universe stays tiny.
const FIELDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Step budget for fuzz executions; generated programs are small, and
/// timeouts count as successful outcomes for the property.
pub const FUZZ_MAX_STEPS: u32 = 4_000;

/// Deterministic program generator: the same seed and budget always
/// produce the same closed expression.
pub fn gen_program(seed: u64, size_budget: u32) -> Expr {
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        budget: size_budget,
        next_var: 0,
    };
    let mut scope = Scope { vars: Vec::new() };
    gen.block(&mut scope)
}

struct Gen {
    rng: ChaCha8Rng,
    budget: u32,
    next_var: u32,
}

#[derive(Clone)]
struct Scope {
    /// In-scope variables with the fields their initializer declared
    /// (when it was an object literal), used to bias reads toward fields
    /// that exist.
    vars: Vec<(String, Vec<String>)>,
}

fn sp() -> Span {
    Span::synthetic()
}

impl Gen {
    fn spend(&mut self) -> bool {
        if self.budget == 0 {
            false
        } else {
            self.budget -= 1;
            true
        }
    }

    fn field(&mut self) -> String {
        FIELDS[self.rng.gen_range(0..FIELDS.len())].to_string()
    }

    fn fresh_var(&mut self) -> String {
        self.next_var += 1;
        format!("v{}", self.next_var)
    }

    /// A statement-shaped program chunk: a chain of lets ending in an
    /// expression.
    fn block(&mut self, scope: &mut Scope) -> Expr {
        if self.budget > 0 && self.rng.gen_bool(0.6) {
            let name = self.fresh_var();
            self.spend();
            let (init, fields) = self.binding_init(scope);
            scope.vars.push((name.clone(), fields));
            let body = self.block(scope);
            scope.vars.pop();
            Expr::Let {
                name: name.clone(),
                init: Box::new(init),
                body: Box::new(body),
                span: sp(),
            }
        } else {
            self.expr(scope)
        }
    }

    /// Initializer for a let binding, reporting the field names when it
    /// is an object literal.
    fn binding_init(&mut self, scope: &mut Scope) -> (Expr, Vec<String>) {
        if self.rng.gen_bool(0.55) {
            let obj = self.obj_lit(scope);
            let fields = match &obj {
                Expr::ObjLit { fields, .. } => fields.iter().map(|(f, _)| f.clone()).collect(),
                _ => Vec::new(),
            };
            (obj, fields)
        } else {
            (self.expr(scope), Vec::new())
        }
    }

    fn obj_lit(&mut self, scope: &mut Scope) -> Expr {
        let n_fields = self.rng.gen_range(1..=3);
        let mut fields: Vec<(String, Expr)> = Vec::new();
        for _ in 0..n_fields {
            let f = self.field();
            if fields.iter().any(|(g, _)| g == &f) {
                continue;
            }
            let value = if self.rng.gen_bool(0.35) && self.budget > 0 {
                self.spend();
                self.method_lit(scope, &fields)
            } else {
                self.leafish(scope)
            };
            fields.push((f, value));
        }
        // prototype: an in-scope object variable, or the empty object
        let proto = self.object_var(scope).unwrap_or(Expr::EmptyObj(sp()));
        Expr::ObjLit { fields, proto: Box::new(proto), span: sp() }
    }

    /// A method literal whose body reads and writes `this` fields —
    /// sometimes fields of the object under construction, sometimes not
    /// (which makes the object abstract).
    fn method_lit(&mut self, _scope: &mut Scope, existing: &[(String, Expr)]) -> Expr {
        let param = "x".to_string();
        let target = if !existing.is_empty() && self.rng.gen_bool(0.7) {
            existing[self.rng.gen_range(0..existing.len())].0.clone()
        } else {
            self.field()
        };
        let value: Expr = match self.rng.gen_range(0..3) {
            0 => Expr::Var(param.clone(), sp()),
            1 => Expr::Int(self.rng.gen_range(0..10), sp()),
            _ => Expr::Add {
                lhs: Box::new(Expr::Var(param.clone(), sp())),
                rhs: Box::new(match existing.iter().find(|(_, e)| matches!(e, Expr::Int(..))) {
                    Some((f, _)) if self.rng.gen_bool(0.6) => Expr::FieldRead {
                        obj: Box::new(Expr::This(sp())),
                        field: f.clone(),
                        span: sp(),
                    },
                    _ => Expr::Int(1, sp()),
                }),
                span: sp(),
            },
        };
        Expr::Lambda {
            param,
            body: Box::new(Expr::FieldWrite {
                obj: Box::new(Expr::This(sp())),
                field: target,
                value: Box::new(value),
                span: sp(),
            }),
            span: sp(),
        }
    }

    fn object_var(&mut self, scope: &Scope) -> Option<Expr> {
        let objs: Vec<&(String, Vec<String>)> =
            scope.vars.iter().filter(|(_, fs)| !fs.is_empty()).collect();
        if objs.is_empty() {
            return None;
        }
        let (name, _) = objs[self.rng.gen_range(0..objs.len())];
        Some(Expr::Var(name.clone(), sp()))
    }

    fn leafish(&mut self, scope: &mut Scope) -> Expr {
        match self.rng.gen_range(0..10) {
            0..=3 => Expr::Int(self.rng.gen_range(0..100), sp()),
            4 => Expr::Str(format!("s{}", self.rng.gen_range(0..3)), sp()),
            5..=7 => match self.object_var(scope) {
                Some(v) => v,
                None => Expr::Int(self.rng.gen_range(0..100), sp()),
            },
            8 => Expr::Null(sp()),
            _ => match scope.vars.last() {
                Some((name, _)) => Expr::Var(name.clone(), sp()),
                None => Expr::Int(0, sp()),
            },
        }
    }

    fn expr(&mut self, scope: &mut Scope) -> Expr {
        if !self.spend() {
            return self.leafish(scope);
        }
        match self.rng.gen_range(0..12) {
            0 | 1 => self.obj_lit(scope),
            // read a field that usually exists on the chosen object
            2 | 3 => {
                let (obj, fields) = self.pick_object(scope);
                let field = if !fields.is_empty() && self.rng.gen_bool(0.8) {
                    fields[self.rng.gen_range(0..fields.len())].clone()
                } else {
                    self.field()
                };
                Expr::FieldRead { obj: Box::new(obj), field, span: sp() }
            }
            // write a field
            4 => {
                let (obj, fields) = self.pick_object(scope);
                let field = if !fields.is_empty() && self.rng.gen_bool(0.8) {
                    fields[self.rng.gen_range(0..fields.len())].clone()
                } else {
                    self.field()
                };
                let value = self.leafish(scope);
                Expr::FieldWrite {
                    obj: Box::new(obj),
                    field,
                    value: Box::new(value),
                    span: sp(),
                }
            }
            // method call
            5 | 6 => {
                let (obj, fields) = self.pick_object(scope);
                let field = if !fields.is_empty() && self.rng.gen_bool(0.8) {
                    fields[self.rng.gen_range(0..fields.len())].clone()
                } else {
                    self.field()
                };
                let arg = self.leafish(scope);
                Expr::MethodCall {
                    recv: Box::new(obj),
                    field,
                    arg: Box::new(arg),
                    span: sp(),
                }
            }
            7 => Expr::Add {
                lhs: Box::new(self.expr(scope)),
                rhs: Box::new(self.leafish(scope)),
                span: sp(),
            },
            8 => Expr::Cond {
                cond: Box::new(Expr::Int(self.rng.gen_range(0..2), sp())),
                then: Box::new(self.expr(scope)),
                els: Box::new(self.expr(scope)),
                span: sp(),
            },
            9 => {
                // assignment to an in-scope variable
                match scope.vars.last() {
                    Some((name, _)) => {
                        let name = name.clone();
                        let value = self.expr(scope);
                        Expr::Assign { name, value: Box::new(value), span: sp() }
                    }
                    None => self.leafish(scope),
                }
            }
            10 => self.block(scope),
            _ => self.leafish(scope),
        }
    }

    fn pick_object(&mut self, scope: &mut Scope) -> (Expr, Vec<String>) {
        let objs: Vec<(String, Vec<String>)> = scope
            .vars
            .iter()
            .filter(|(_, fs)| !fs.is_empty())
            .cloned()
            .collect();
        if objs.is_empty() || self.rng.gen_bool(0.25) {
            let lit = self.obj_lit(scope);
            let fields = match &lit {
                Expr::ObjLit { fields, .. } => fields.iter().map(|(f, _)| f.clone()).collect(),
                _ => Vec::new(),
            };
            (lit, fields)
        } else {
            let (name, fields) = objs[self.rng.gen_range(0..objs.len())].clone();
            (Expr::Var(name, sp()), fields)
        }
    }
}

/// Outcome of one fuzz round.
#[derive(Debug)]
pub enum Verdict {
    /// Inference accepted the program and the runtime agreed.
    Accepted(Outcome),
    /// Inference rejected the program; the interpreter is not consulted
    /// for the property.
    Rejected(usize),
    /// The soundness property failed.
    Violation(Finding),
}

#[derive(Debug)]
pub struct Finding {
    pub seed: u64,
    pub reason: String,
    pub program: Expr,
    pub minimized: Expr,
}

/// Check the soundness property on one program.
pub fn soundness_round(e: &Expr, seed: u64, opts: &SolverOptions) -> Verdict {
    match round_result(e, opts) {
        RoundResult::Accepted(outcome) => Verdict::Accepted(outcome),
        RoundResult::Rejected(n) => Verdict::Rejected(n),
        RoundResult::Violation(reason) => {
            let minimized = shrink(e.clone(), opts);
            Verdict::Violation(Finding {
                seed,
                reason,
                program: e.clone(),
                minimized,
            })
        }
    }
}

enum RoundResult {
    Accepted(Outcome),
    Rejected(usize),
    Violation(String),
}

/// One inference-plus-execution pass. A violation is an accepted program
/// that gets stuck, fails verification, or trips an internal assertion.
fn round_result(e: &Expr, opts: &SolverOptions) -> RoundResult {
    let checked = match check_expr(e, opts) {
        Ok(c) => c,
        Err(PipelineError::Parse(_)) => return RoundResult::Rejected(1),
        Err(PipelineError::Internal(msg)) => {
            return RoundResult::Violation(format!("internal assertion: {msg}"))
        }
    };
    match &checked.outcome {
        Err(ds) => RoundResult::Rejected(ds.len()),
        Ok(_) => {
            let (outcome, _) = run(e, FUZZ_MAX_STEPS);
            if let Outcome::Stuck { reason, redex } = &outcome {
                return RoundResult::Violation(format!(
                    "accepted program stuck: {reason} at `{redex}`"
                ));
            }
            if let Err(msg) = checked.verify() {
                return RoundResult::Violation(format!("assignment fails verification: {msg}"));
            }
            RoundResult::Accepted(outcome)
        }
    }
}

fn violation_reason(e: &Expr, opts: &SolverOptions) -> Option<String> {
    match round_result(e, opts) {
        RoundResult::Violation(reason) => Some(reason),
        _ => None,
    }
}

/// Greedy shrinking: repeatedly apply the first single-subterm deletion
/// that still violates, until none does.
pub fn shrink(mut e: Expr, opts: &SolverOptions) -> Expr {
    loop {
        let mut shrunk = None;
        for candidate in deletions(&e) {
            if candidate.is_closed() && violation_reason(&candidate, opts).is_some() {
                shrunk = Some(candidate);
                break;
            }
        }
        match shrunk {
            Some(next) => e = next,
            None => return e,
        }
    }
}

/// All programs obtainable from `e` by deleting one subterm: hoisting a
/// child over its parent, dropping an object field, or zeroing a leaf's
/// sibling. Only closedness-preserving candidates are yielded.
pub fn deletions(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    // top-level rewrites
    match e {
        Expr::Let { name, init, body, .. } => {
            if !body.free_vars().contains(name) {
                out.push((**body).clone());
            }
            if !init.free_vars().contains(name) {
                out.push((**init).clone());
            }
        }
        Expr::ObjLit { fields, proto, .. } => {
            for i in 0..fields.len() {
                let mut rest = fields.clone();
                rest.remove(i);
                if rest.is_empty() && matches!(proto.as_ref(), Expr::EmptyObj(_)) {
                    out.push(Expr::EmptyObj(e.span()));
                } else {
                    out.push(Expr::ObjLit {
                        fields: rest,
                        proto: proto.clone(),
                        span: e.span(),
                    });
                }
            }
            out.push((**proto).clone());
            if !matches!(proto.as_ref(), Expr::EmptyObj(_)) {
                out.push(Expr::ObjLit {
                    fields: fields.clone(),
                    proto: Box::new(Expr::EmptyObj(e.span())),
                    span: e.span(),
                });
            }
        }
        Expr::Assign { value, .. } => out.push((**value).clone()),
        Expr::FieldRead { obj, .. } => out.push((**obj).clone()),
        Expr::FieldWrite { obj, value, .. } => {
            out.push((**obj).clone());
            out.push((**value).clone());
        }
        Expr::MethodCall { recv, arg, .. } => {
            out.push((**recv).clone());
            out.push((**arg).clone());
        }
        Expr::FunCall { callee, arg, .. } => {
            out.push((**callee).clone());
            out.push((**arg).clone());
        }
        Expr::Add { lhs, rhs, .. } => {
            out.push((**lhs).clone());
            out.push((**rhs).clone());
        }
        Expr::Cond { cond, then, els, .. } => {
            out.push((**cond).clone());
            out.push((**then).clone());
            out.push((**els).clone());
        }
        Expr::Lambda { param, body, .. }
            if !body.free_vars().contains(param) && !body.has_this() =>
        {
            out.push((**body).clone());
        }
        _ => {}
    }
    // recursive rewrites of each child
    out.extend(child_rewrites(e));
    out
}

fn child_rewrites(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    let rebuild = |i: usize, new_child: Expr, e: &Expr| -> Expr {
        let mut clone = e.clone();
        replace_child(&mut clone, i, new_child);
        clone
    };
    for (i, child) in e.children().into_iter().enumerate() {
        for d in deletions(child) {
            out.push(rebuild(i, d, e));
        }
    }
    out
}

fn replace_child(e: &mut Expr, index: usize, new_child: Expr) {
    let mut i = 0;
    let mut place = |slot: &mut Expr| {
        if i == index {
            *slot = new_child.clone();
        }
        i += 1;
    };
    match e {
        Expr::Let { init, body, .. } => {
            place(init);
            place(body);
        }
        Expr::Assign { value, .. } => place(value),
        Expr::ObjLit { fields, proto, .. } => {
            for (_, v) in fields.iter_mut() {
                place(v);
            }
            place(proto);
        }
        Expr::FieldRead { obj, .. } => place(obj),
        Expr::FieldWrite { obj, value, .. } => {
            place(obj);
            place(value);
        }
        Expr::Lambda { body, .. } => place(body),
        Expr::MethodCall { recv, arg, .. } => {
            place(recv);
            place(arg);
        }
        Expr::FunCall { callee, arg, .. } => {
            place(callee);
            place(arg);
        }
        Expr::Add { lhs, rhs, .. } => {
            place(lhs);
            place(rhs);
        }
        Expr::Cond { cond, then, els, .. } => {
            place(cond);
            place(then);
            place(els);
        }
        _ => {}
    }
}

/// Run `rounds` fuzz rounds; returns (accepted, rejected, violations).
pub fn campaign(
    seed: u64,
    rounds: u32,
    budget: u32,
    opts: &SolverOptions,
    mut on_finding: impl FnMut(&Finding),
) -> (u32, u32, u32) {
    let mut accepted = 0;
    let mut rejected = 0;
    let mut violations = 0;
    for round in 0..rounds {
        let round_seed = seed.wrapping_add(round as u64);
        let program = gen_program(round_seed, budget);
        match soundness_round(&program, round_seed, opts) {
            Verdict::Accepted(_) => accepted += 1,
            Verdict::Rejected(_) => rejected += 1,
            Verdict::Violation(finding) => {
                violations += 1;
                on_finding(&finding);
            }
        }
    }
    (accepted, rejected, violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Rule;

    #[test]
    fn same_seed_same_program() {
        let a = gen_program(42, 30);
        let b = gen_program(42, 30);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_budget_yields_a_leaf() {
        let e = gen_program(7, 0);
        assert!(e.children().is_empty(), "expected a leaf, got {e:?}");
    }

    #[test]
    fn generated_programs_are_closed() {
        for seed in 0..200 {
            let e = gen_program(seed, 25);
            assert!(e.is_closed(), "open program from seed {seed}: {e:?}");
        }
    }

    #[test]
    fn rejected_programs_skip_the_interpreter_property() {
        // a field read that inference rejects
        let e = crate::surface::parse(&crate::surface::SourceProgram::new(
            "({a: 1} proto {}).b",
            "t.sjs",
        ))
        .unwrap();
        match soundness_round(&e, 0, &SolverOptions::default()) {
            Verdict::Rejected(n) => assert!(n > 0),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn injected_bug_is_found() {
        // without rule (xi), calls on abstract objects slip through and
        // the interpreter exposes them as stuck writes
        let opts = SolverOptions::disabling([Rule::Xi]);
        let mut found = None;
        for round in 0..10_000u64 {
            let e = gen_program(round, 30);
            if let Verdict::Violation(f) = soundness_round(&e, round, &opts) {
                found = Some(f);
                break;
            }
        }
        let finding = found.expect("no stuck witness found within 10000 programs");
        assert!(finding.reason.contains("stuck"), "{}", finding.reason);
        // the minimized program still violates
        assert!(violation_reason(&finding.minimized, &opts).is_some());
        // and is minimal under single-subterm deletion
        for d in deletions(&finding.minimized) {
            if d.is_closed() {
                assert!(
                    violation_reason(&d, &opts).is_none(),
                    "shrink missed a smaller witness"
                );
            }
        }
    }

    #[test]
    fn generator_health_at_budget_30() {
        // at least 20% of generated programs must pass inference
        let opts = SolverOptions::default();
        let mut accepted = 0;
        let total = 1000;
        for seed in 0..total {
            let e = gen_program(seed, 30);
            match soundness_round(&e, seed, &opts) {
                Verdict::Accepted(_) => accepted += 1,
                Verdict::Rejected(_) => {}
                Verdict::Violation(f) => panic!("soundness violation at seed {seed}: {}", f.reason),
            }
        }
        assert!(
            accepted * 5 >= total,
            "only {accepted}/{total} generated programs pass inference"
        );
    }
}
