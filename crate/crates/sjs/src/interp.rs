//! Substitution-based small-step interpreter for core terms; the
//! runtime half of the soundness property.
//!
//! Core expressions are lowered to runtime terms: every variable read
//! gains an explicit dereference and binders substitute store locations
//! for names. Field writes require the field to be locally present —
//! deliberately not JavaScript's field-creation behavior. `rErr` (null
//! dereference) is terminal.
//!
//! `let` allocates its cell before evaluating the initializer so that
//! recursive functions can close over their own binding; reading a cell
//! before initialization is stuck.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::Expr;

/// Store locations, split into stack (variable cells) and heap (objects
/// and closures) namespaces. Locations are never reused within a run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Hash)]
pub enum Loc {
    Stack(u32),
    Heap(u32),
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Stack(n) => write!(f, "s{n}"),
            Loc::Heap(n) => write!(f, "h{n}"),
        }
    }
}

/// Runtime values: primitives, locations, and null.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Value {
    Int(i64),
    Str(String),
    Loc(Loc),
    Null,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Loc(Loc::Heap(n)) => write!(f, "<obj#{n}>"),
            Value::Loc(Loc::Stack(n)) => write!(f, "<cell#{n}>"),
            Value::Null => write!(f, "null"),
        }
    }
}

/// Heap store values: objects with their local attribute map and
/// prototype link, or function closures.
#[derive(Clone, Debug)]
pub enum HeapValue {
    Obj {
        attrs: BTreeMap<String, Value>,
        /// `None` encodes a null prototype.
        proto: Option<Loc>,
    },
    Closure { param: String, body: RtExpr },
}

/// The runtime store.
#[derive(Clone, Debug, Default)]
pub struct Store {
    /// Stack cells; `None` marks an allocated but not yet initialized
    /// cell.
    stack: Vec<Option<Value>>,
    heap: Vec<HeapValue>,
}

impl Store {
    fn alloc_stack(&mut self, v: Option<Value>) -> Loc {
        self.stack.push(v);
        Loc::Stack(self.stack.len() as u32 - 1)
    }

    fn alloc_heap(&mut self, v: HeapValue) -> Loc {
        self.heap.push(v);
        Loc::Heap(self.heap.len() as u32 - 1)
    }

    pub fn heap_value(&self, l: Loc) -> Option<&HeapValue> {
        match l {
            Loc::Heap(n) => self.heap.get(n as usize),
            Loc::Stack(_) => None,
        }
    }

    pub fn stack_value(&self, l: Loc) -> Option<&Option<Value>> {
        match l {
            Loc::Stack(n) => self.stack.get(n as usize),
            Loc::Heap(_) => None,
        }
    }

    pub fn locations(&self) -> usize {
        self.stack.len() + self.heap.len()
    }

    /// Objects in the heap, for tests that inspect final memory.
    pub fn objects(&self) -> impl Iterator<Item = (Loc, &BTreeMap<String, Value>, Option<Loc>)> {
        self.heap.iter().enumerate().filter_map(|(i, hv)| match hv {
            HeapValue::Obj { attrs, proto } => Some((Loc::Heap(i as u32), attrs, *proto)),
            HeapValue::Closure { .. } => None,
        })
    }

    /// Field lookup: the local attribute map first, then the prototype
    /// chain; `None` when the chain ends without the field.
    pub fn lookup(&self, obj: Loc, field: &str) -> Option<Value> {
        let mut cur = obj;
        // chains are acyclic (prototypes are fixed at allocation), but
        // guard against store corruption anyway
        for _ in 0..self.heap.len() + 1 {
            match self.heap_value(cur)? {
                HeapValue::Obj { attrs, proto } => {
                    if let Some(v) = attrs.get(field) {
                        return Some(v.clone());
                    }
                    cur = (*proto)?;
                }
                HeapValue::Closure { .. } => return None,
            }
        }
        None
    }
}

/// Runtime terms: core expressions extended with values, locations, and
/// explicit dereference.
#[derive(Clone, Debug, PartialEq)]
pub enum RtExpr {
    Val(Value),
    /// Read of a stack cell (a lowered variable occurrence).
    Deref(Box<RtExpr>),
    /// Unsubstituted variable; reaching one at evaluation is stuck.
    Var(String),
    This,
    Let { name: String, init: Box<RtExpr>, body: Box<RtExpr> },
    /// A `let` whose cell has been allocated; the initializer is still
    /// evaluating.
    LetIn { cell: Loc, init: Box<RtExpr>, body: Box<RtExpr> },
    Assign { target: Box<RtExpr>, value: Box<RtExpr> },
    EmptyObj,
    ObjLit { fields: Vec<(String, RtExpr)>, proto: Box<RtExpr> },
    FieldRead { obj: Box<RtExpr>, field: String },
    FieldWrite { obj: Box<RtExpr>, field: String, value: Box<RtExpr> },
    Lambda { param: String, body: Box<RtExpr> },
    MethodCall { recv: Box<RtExpr>, field: String, arg: Box<RtExpr> },
    FunCall { callee: Box<RtExpr>, arg: Box<RtExpr> },
    Add { lhs: Box<RtExpr>, rhs: Box<RtExpr> },
    Cond { cond: Box<RtExpr>, then: Box<RtExpr>, els: Box<RtExpr> },
}

impl RtExpr {
    pub fn is_value(&self) -> bool {
        matches!(self, RtExpr::Val(_))
    }

    fn render(&self) -> String {
        match self {
            RtExpr::Val(v) => v.to_string(),
            RtExpr::Deref(e) => format!("*{}", e.render()),
            RtExpr::Var(x) => x.clone(),
            RtExpr::This => "this".into(),
            RtExpr::Let { name, .. } => format!("var {name} = ..."),
            RtExpr::LetIn { cell, .. } => format!("var@{cell} = ..."),
            RtExpr::Assign { .. } => "_ = _".into(),
            RtExpr::EmptyObj => "{}".into(),
            RtExpr::ObjLit { .. } => "{ ... } proto _".into(),
            RtExpr::FieldRead { obj, field } => format!("{}.{field}", obj.render()),
            RtExpr::FieldWrite { obj, field, .. } => format!("{}.{field} = _", obj.render()),
            RtExpr::Lambda { .. } => "function (...)".into(),
            RtExpr::MethodCall { recv, field, .. } => format!("{}.{field}(_)", recv.render()),
            RtExpr::FunCall { callee, .. } => format!("{}(_)", callee.render()),
            RtExpr::Add { .. } => "_ + _".into(),
            RtExpr::Cond { .. } => "_ ? _ : _".into(),
        }
    }
}

/// Lower a core expression: variable reads become explicit dereferences
/// of their (future) cells.
pub fn lower(e: &Expr) -> RtExpr {
    match e {
        Expr::Int(n, _) => RtExpr::Val(Value::Int(*n)),
        Expr::Str(s, _) => RtExpr::Val(Value::Str(s.clone())),
        Expr::Null(_) => RtExpr::Val(Value::Null),
        Expr::Var(x, _) => RtExpr::Deref(Box::new(RtExpr::Var(x.clone()))),
        Expr::This(_) => RtExpr::This,
        Expr::Let { name, init, body, .. } => RtExpr::Let {
            name: name.clone(),
            init: Box::new(lower(init)),
            body: Box::new(lower(body)),
        },
        Expr::Assign { name, value, .. } => RtExpr::Assign {
            target: Box::new(RtExpr::Var(name.clone())),
            value: Box::new(lower(value)),
        },
        Expr::EmptyObj(_) => RtExpr::EmptyObj,
        Expr::ObjLit { fields, proto, .. } => RtExpr::ObjLit {
            fields: fields.iter().map(|(f, e)| (f.clone(), lower(e))).collect(),
            proto: Box::new(lower(proto)),
        },
        Expr::FieldRead { obj, field, .. } => RtExpr::FieldRead {
            obj: Box::new(lower(obj)),
            field: field.clone(),
        },
        Expr::FieldWrite { obj, field, value, .. } => RtExpr::FieldWrite {
            obj: Box::new(lower(obj)),
            field: field.clone(),
            value: Box::new(lower(value)),
        },
        Expr::Lambda { param, body, .. } => RtExpr::Lambda {
            param: param.clone(),
            body: Box::new(lower(body)),
        },
        Expr::MethodCall { recv, field, arg, .. } => RtExpr::MethodCall {
            recv: Box::new(lower(recv)),
            field: field.clone(),
            arg: Box::new(lower(arg)),
        },
        Expr::FunCall { callee, arg, .. } => RtExpr::FunCall {
            callee: Box::new(lower(callee)),
            arg: Box::new(lower(arg)),
        },
        Expr::Add { lhs, rhs, .. } => RtExpr::Add {
            lhs: Box::new(lower(lhs)),
            rhs: Box::new(lower(rhs)),
        },
        Expr::Cond { cond, then, els, .. } => RtExpr::Cond {
            cond: Box::new(lower(cond)),
            then: Box::new(lower(then)),
            els: Box::new(lower(els)),
        },
    }
}

/// Substitute location `l` for variable `x`. Stops at shadowing binders.
fn subst_var(e: &RtExpr, x: &str, l: Loc) -> RtExpr {
    match e {
        RtExpr::Var(v) => {
            if v == x {
                RtExpr::Val(Value::Loc(l))
            } else {
                e.clone()
            }
        }
        RtExpr::Val(_) | RtExpr::This | RtExpr::EmptyObj => e.clone(),
        RtExpr::Deref(inner) => RtExpr::Deref(Box::new(subst_var(inner, x, l))),
        RtExpr::Let { name, init, body } => {
            if name == x {
                // shadowed everywhere: the binder is in scope in both
                // the initializer and the body
                e.clone()
            } else {
                RtExpr::Let {
                    name: name.clone(),
                    init: Box::new(subst_var(init, x, l)),
                    body: Box::new(subst_var(body, x, l)),
                }
            }
        }
        RtExpr::LetIn { cell, init, body } => RtExpr::LetIn {
            cell: *cell,
            init: Box::new(subst_var(init, x, l)),
            body: Box::new(subst_var(body, x, l)),
        },
        RtExpr::Assign { target, value } => RtExpr::Assign {
            target: Box::new(subst_var(target, x, l)),
            value: Box::new(subst_var(value, x, l)),
        },
        RtExpr::ObjLit { fields, proto } => RtExpr::ObjLit {
            fields: fields
                .iter()
                .map(|(f, e)| (f.clone(), subst_var(e, x, l)))
                .collect(),
            proto: Box::new(subst_var(proto, x, l)),
        },
        RtExpr::FieldRead { obj, field } => RtExpr::FieldRead {
            obj: Box::new(subst_var(obj, x, l)),
            field: field.clone(),
        },
        RtExpr::FieldWrite { obj, field, value } => RtExpr::FieldWrite {
            obj: Box::new(subst_var(obj, x, l)),
            field: field.clone(),
            value: Box::new(subst_var(value, x, l)),
        },
        RtExpr::Lambda { param, body } => {
            if param == x {
                e.clone()
            } else {
                RtExpr::Lambda {
                    param: param.clone(),
                    body: Box::new(subst_var(body, x, l)),
                }
            }
        }
        RtExpr::MethodCall { recv, field, arg } => RtExpr::MethodCall {
            recv: Box::new(subst_var(recv, x, l)),
            field: field.clone(),
            arg: Box::new(subst_var(arg, x, l)),
        },
        RtExpr::FunCall { callee, arg } => RtExpr::FunCall {
            callee: Box::new(subst_var(callee, x, l)),
            arg: Box::new(subst_var(arg, x, l)),
        },
        RtExpr::Add { lhs, rhs } => RtExpr::Add {
            lhs: Box::new(subst_var(lhs, x, l)),
            rhs: Box::new(subst_var(rhs, x, l)),
        },
        RtExpr::Cond { cond, then, els } => RtExpr::Cond {
            cond: Box::new(subst_var(cond, x, l)),
            then: Box::new(subst_var(then, x, l)),
            els: Box::new(subst_var(els, x, l)),
        },
    }
}

/// Substitute the receiver location for `this`, stopping at lambda
/// boundaries: a nested function's receiver is bound at its own call.
fn subst_this(e: &RtExpr, l: Loc) -> RtExpr {
    match e {
        RtExpr::This => RtExpr::Val(Value::Loc(l)),
        RtExpr::Lambda { .. } | RtExpr::Val(_) | RtExpr::Var(_) | RtExpr::EmptyObj => e.clone(),
        RtExpr::Deref(inner) => RtExpr::Deref(Box::new(subst_this(inner, l))),
        RtExpr::Let { name, init, body } => RtExpr::Let {
            name: name.clone(),
            init: Box::new(subst_this(init, l)),
            body: Box::new(subst_this(body, l)),
        },
        RtExpr::LetIn { cell, init, body } => RtExpr::LetIn {
            cell: *cell,
            init: Box::new(subst_this(init, l)),
            body: Box::new(subst_this(body, l)),
        },
        RtExpr::Assign { target, value } => RtExpr::Assign {
            target: Box::new(subst_this(target, l)),
            value: Box::new(subst_this(value, l)),
        },
        RtExpr::ObjLit { fields, proto } => RtExpr::ObjLit {
            fields: fields
                .iter()
                .map(|(f, e)| (f.clone(), subst_this(e, l)))
                .collect(),
            proto: Box::new(subst_this(proto, l)),
        },
        RtExpr::FieldRead { obj, field } => RtExpr::FieldRead {
            obj: Box::new(subst_this(obj, l)),
            field: field.clone(),
        },
        RtExpr::FieldWrite { obj, field, value } => RtExpr::FieldWrite {
            obj: Box::new(subst_this(obj, l)),
            field: field.clone(),
            value: Box::new(subst_this(value, l)),
        },
        RtExpr::MethodCall { recv, field, arg } => RtExpr::MethodCall {
            recv: Box::new(subst_this(recv, l)),
            field: field.clone(),
            arg: Box::new(subst_this(arg, l)),
        },
        RtExpr::FunCall { callee, arg } => RtExpr::FunCall {
            callee: Box::new(subst_this(callee, l)),
            arg: Box::new(subst_this(arg, l)),
        },
        RtExpr::Add { lhs, rhs } => RtExpr::Add {
            lhs: Box::new(subst_this(lhs, l)),
            rhs: Box::new(subst_this(rhs, l)),
        },
        RtExpr::Cond { cond, then, els } => RtExpr::Cond {
            cond: Box::new(subst_this(cond, l)),
            then: Box::new(subst_this(then, l)),
            els: Box::new(subst_this(els, l)),
        },
    }
}

/// Result of one small step.
pub enum Step {
    /// The expression reduced.
    Next(RtExpr),
    /// The expression is already a value.
    Value,
    /// A null dereference reached the redex: the `rErr` terminal.
    RuntimeError,
    /// No rule applies.
    Stuck(String),
}

/// Final outcome of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(Value),
    RuntimeError,
    Stuck { reason: String, redex: String },
    Timeout(u32),
}

impl Outcome {
    pub fn is_stuck(&self) -> bool {
        matches!(self, Outcome::Stuck { .. })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "value: {v}"),
            Outcome::RuntimeError => write!(f, "runtime error (null dereference)"),
            Outcome::Stuck { reason, redex } => write!(f, "stuck: {reason} at `{redex}`"),
            Outcome::Timeout(n) => write!(f, "timeout after {n} steps"),
        }
    }
}

pub const DEFAULT_MAX_STEPS: u32 = 100_000;

/// Take one step. `trace` records the name of the rule fired.
pub fn step(store: &mut Store, e: RtExpr, trace: &mut Option<&mut Vec<String>>) -> Step {
    let mut fire = |name: &str, next: RtExpr| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(name.to_string());
        }
        Step::Next(next)
    };
    macro_rules! ctx {
        ($sub:expr, $rebuild:expr) => {{
            match step(store, $sub, trace) {
                Step::Next(e2) => return Step::Next($rebuild(e2)),
                Step::Value => unreachable!("context selected a value"),
                other => return other,
            }
        }};
    }

    match e {
        RtExpr::Val(_) => Step::Value,
        RtExpr::Var(x) => Step::Stuck(format!("unbound variable `{x}`")),
        RtExpr::This => Step::Stuck("`this` outside a method body".into()),
        RtExpr::Deref(inner) => {
            if !inner.is_value() {
                ctx!(*inner, |e2| RtExpr::Deref(Box::new(e2)));
            }
            match *inner {
                RtExpr::Val(Value::Loc(l @ Loc::Stack(_))) => match store.stack_value(l) {
                    Some(Some(v)) => fire("SS-Deref", RtExpr::Val(v.clone())),
                    Some(None) => Step::Stuck("variable read before initialization".into()),
                    None => Step::Stuck("dangling stack location".into()),
                },
                other => Step::Stuck(format!("dereference of non-cell `{}`", other.render())),
            }
        }
        RtExpr::Let { name, init, body } => {
            // allocate the cell first so the initializer can close over
            // its own binding (recursive functions)
            let cell = store.alloc_stack(None);
            let init = subst_var(&init, &name, cell);
            let body = subst_var(&body, &name, cell);
            fire(
                "SS-LetAlloc",
                RtExpr::LetIn { cell, init: Box::new(init), body: Box::new(body) },
            )
        }
        RtExpr::LetIn { cell, init, body } => {
            if !init.is_value() {
                ctx!(*init, |e2| RtExpr::LetIn { cell, init: Box::new(e2), body });
            }
            let v = match *init {
                RtExpr::Val(v) => v,
                _ => unreachable!(),
            };
            match cell {
                Loc::Stack(n) => store.stack[n as usize] = Some(v),
                Loc::Heap(_) => return Step::Stuck("let cell is not a stack location".into()),
            }
            fire("SS-LetVar", *body)
        }
        RtExpr::Assign { target, value } => {
            if !value.is_value() {
                ctx!(*value, |e2| RtExpr::Assign { target, value: Box::new(e2) });
            }
            let v = match *value {
                RtExpr::Val(v) => v,
                _ => unreachable!(),
            };
            match *target {
                RtExpr::Var(x) => Step::Stuck(format!("assignment to unbound variable `{x}`")),
                RtExpr::Val(Value::Loc(l @ Loc::Stack(n))) => {
                    if store.stack_value(l).is_none() {
                        return Step::Stuck("dangling stack location".into());
                    }
                    store.stack[n as usize] = Some(v.clone());
                    fire("SS-VarUpd", RtExpr::Val(v))
                }
                other => Step::Stuck(format!("assignment target `{}`", other.render())),
            }
        }
        RtExpr::EmptyObj => {
            let l = store.alloc_heap(HeapValue::Obj { attrs: BTreeMap::new(), proto: None });
            fire("SS-Obj", RtExpr::Val(Value::Loc(l)))
        }
        RtExpr::ObjLit { mut fields, proto } => {
            // fields evaluate left to right, then the prototype
            for i in 0..fields.len() {
                if !fields[i].1.is_value() {
                    let sub = fields[i].1.clone();
                    match step(store, sub, trace) {
                        Step::Next(e2) => {
                            fields[i].1 = e2;
                            return Step::Next(RtExpr::ObjLit { fields, proto });
                        }
                        Step::Value => unreachable!(),
                        other => return other,
                    }
                }
            }
            if !proto.is_value() {
                ctx!(*proto, |e2| RtExpr::ObjLit { fields, proto: Box::new(e2) });
            }
            let proto_loc = match *proto {
                RtExpr::Val(Value::Loc(l)) => Some(l),
                RtExpr::Val(Value::Null) => None,
                RtExpr::Val(ref other) => {
                    return Step::Stuck(format!("prototype parent is `{other}`"))
                }
                _ => unreachable!(),
            };
            let rule = if proto_loc.is_some() { "SS-Proto" } else { "SS-ProtoNull" };
            let attrs: BTreeMap<String, Value> = fields
                .into_iter()
                .map(|(f, e)| match e {
                    RtExpr::Val(v) => (f, v),
                    _ => unreachable!(),
                })
                .collect();
            let l = store.alloc_heap(HeapValue::Obj { attrs, proto: proto_loc });
            fire(rule, RtExpr::Val(Value::Loc(l)))
        }
        RtExpr::FieldRead { obj, field } => {
            if !obj.is_value() {
                ctx!(*obj, |e2| RtExpr::FieldRead { obj: Box::new(e2), field });
            }
            match *obj {
                RtExpr::Val(Value::Null) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push("SS-AttrNull".to_string());
                    }
                    Step::RuntimeError
                }
                RtExpr::Val(Value::Loc(l @ Loc::Heap(_))) => match store.lookup(l, &field) {
                    Some(v) => fire("SS-Attr", RtExpr::Val(v)),
                    None => Step::Stuck(format!(
                        "field `{field}` absent from the object and its prototype chain"
                    )),
                },
                RtExpr::Val(other) => {
                    Step::Stuck(format!("field read on non-object `{other}`"))
                }
                _ => unreachable!(),
            }
        }
        RtExpr::FieldWrite { obj, field, value } => {
            if !obj.is_value() {
                ctx!(*obj, |e2| RtExpr::FieldWrite { obj: Box::new(e2), field, value });
            }
            if !value.is_value() {
                ctx!(*value, |e2| RtExpr::FieldWrite { obj, field, value: Box::new(e2) });
            }
            let v = match *value {
                RtExpr::Val(v) => v,
                _ => unreachable!(),
            };
            match *obj {
                RtExpr::Val(Value::Null) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push("SS-AttrUpdNull".to_string());
                    }
                    Step::RuntimeError
                }
                RtExpr::Val(Value::Loc(Loc::Heap(n))) => {
                    match store.heap.get_mut(n as usize) {
                        Some(HeapValue::Obj { attrs, .. }) => {
                            // the field must be locally present; writes
                            // never create fields or follow the chain
                            match attrs.get_mut(&field) {
                                Some(slot) => {
                                    *slot = v.clone();
                                    fire("SS-AttrUpd", RtExpr::Val(v))
                                }
                                None => Step::Stuck(format!(
                                    "write to field `{field}` not locally present"
                                )),
                            }
                        }
                        _ => Step::Stuck("field write on non-object".into()),
                    }
                }
                RtExpr::Val(other) => {
                    Step::Stuck(format!("field write on non-object `{other}`"))
                }
                _ => unreachable!(),
            }
        }
        RtExpr::Lambda { param, body } => {
            let l = store.alloc_heap(HeapValue::Closure { param, body: *body });
            fire("SS-Fun", RtExpr::Val(Value::Loc(l)))
        }
        RtExpr::MethodCall { recv, field, arg } => {
            if !recv.is_value() {
                ctx!(*recv, |e2| RtExpr::MethodCall { recv: Box::new(e2), field, arg });
            }
            if !arg.is_value() {
                ctx!(*arg, |e2| RtExpr::MethodCall { recv, field, arg: Box::new(e2) });
            }
            let v = match *arg {
                RtExpr::Val(v) => v,
                _ => unreachable!(),
            };
            match *recv {
                RtExpr::Val(Value::Null) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push("SS-MNull".to_string());
                    }
                    Step::RuntimeError
                }
                RtExpr::Val(Value::Loc(l @ Loc::Heap(_))) => {
                    let m = match store.lookup(l, &field) {
                        Some(m) => m,
                        None => {
                            return Step::Stuck(format!(
                                "method `{field}` absent from the prototype chain"
                            ))
                        }
                    };
                    let (param, body) = match m {
                        Value::Loc(ml) => match store.heap_value(ml) {
                            Some(HeapValue::Closure { param, body }) => {
                                (param.clone(), body.clone())
                            }
                            _ => {
                                return Step::Stuck(format!(
                                    "field `{field}` does not hold a method"
                                ))
                            }
                        },
                        _ => {
                            return Step::Stuck(format!(
                                "field `{field}` does not hold a method"
                            ))
                        }
                    };
                    let cell = store.alloc_stack(Some(v));
                    let body = subst_var(&body, &param, cell);
                    let body = subst_this(&body, l);
                    fire("SS-MCall", body)
                }
                RtExpr::Val(other) => {
                    Step::Stuck(format!("method call on non-object `{other}`"))
                }
                _ => unreachable!(),
            }
        }
        RtExpr::FunCall { callee, arg } => {
            if !callee.is_value() {
                ctx!(*callee, |e2| RtExpr::FunCall { callee: Box::new(e2), arg });
            }
            if !arg.is_value() {
                ctx!(*arg, |e2| RtExpr::FunCall { callee, arg: Box::new(e2) });
            }
            let v = match *arg {
                RtExpr::Val(v) => v,
                _ => unreachable!(),
            };
            match *callee {
                RtExpr::Val(Value::Null) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push("SS-FCallNull".to_string());
                    }
                    Step::RuntimeError
                }
                RtExpr::Val(Value::Loc(l @ Loc::Heap(_))) => match store.heap_value(l) {
                    Some(HeapValue::Closure { param, body }) => {
                        let (param, body) = (param.clone(), body.clone());
                        let cell = store.alloc_stack(Some(v));
                        let body = subst_var(&body, &param, cell);
                        fire("SS-FCall", body)
                    }
                    _ => Step::Stuck("call of a non-function".into()),
                },
                RtExpr::Val(other) => Step::Stuck(format!("call of non-function `{other}`")),
                _ => unreachable!(),
            }
        }
        RtExpr::Add { lhs, rhs } => {
            if !lhs.is_value() {
                ctx!(*lhs, |e2| RtExpr::Add { lhs: Box::new(e2), rhs });
            }
            if !rhs.is_value() {
                ctx!(*rhs, |e2| RtExpr::Add { lhs, rhs: Box::new(e2) });
            }
            match (*lhs, *rhs) {
                (RtExpr::Val(Value::Int(a)), RtExpr::Val(Value::Int(b))) => {
                    fire("SS-Add", RtExpr::Val(Value::Int(a.wrapping_add(b))))
                }
                (RtExpr::Val(a), RtExpr::Val(b)) => {
                    Step::Stuck(format!("`+` on non-integers `{a}` and `{b}`"))
                }
                _ => unreachable!(),
            }
        }
        RtExpr::Cond { cond, then, els } => {
            if !cond.is_value() {
                ctx!(*cond, |e2| RtExpr::Cond { cond: Box::new(e2), then, els });
            }
            match *cond {
                RtExpr::Val(Value::Int(n)) => {
                    if n != 0 {
                        fire("SS-CondTrue", *then)
                    } else {
                        fire("SS-CondFalse", *els)
                    }
                }
                RtExpr::Val(other) => {
                    Step::Stuck(format!("conditional on non-integer `{other}`"))
                }
                _ => unreachable!(),
            }
        }
    }
}

/// Drive `step` to a terminal configuration or the step budget.
pub fn run(e: &Expr, max_steps: u32) -> (Outcome, Store) {
    run_traced(e, max_steps, None)
}

pub fn run_traced(
    e: &Expr,
    max_steps: u32,
    mut trace: Option<&mut Vec<String>>,
) -> (Outcome, Store) {
    let mut store = Store::default();
    let mut cur = lower(e);
    for _ in 0..max_steps {
        if let RtExpr::Val(v) = cur {
            return (Outcome::Value(v), store);
        }
        let before = store.locations();
        let redex = cur.render();
        match step(&mut store, cur, &mut trace) {
            Step::Next(e2) => {
                debug_assert!(store.locations() >= before);
                cur = e2;
            }
            Step::Value => unreachable!("values are returned before stepping"),
            Step::RuntimeError => return (Outcome::RuntimeError, store),
            Step::Stuck(reason) => {
                return (Outcome::Stuck { reason, redex }, store);
            }
        }
    }
    (Outcome::Timeout(max_steps), store)
}
