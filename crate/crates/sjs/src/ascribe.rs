//! Type ascription: turn solved bounds into source types, collect
//! diagnostics for every failure the algorithm defines, and verify the
//! result against the original constraints.
//!
//! Each row variable gets the greatest lower bound of its upper-bound
//! set (or the default type when the set is empty), every lower-bound
//! literal is checked against it, and the five components are assembled
//! into the variable's source type. Variables whose bounds mention each
//! other are ascribed per strongly-connected component: member
//! occurrences are replaced by recursion variables and the results are
//! closed with nested binders.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::constraints::{
    Constraint, ConstraintStore, LitId, Literal, RowVar, Sort, TypeVar, SORTS,
};
use crate::span::Span;
use crate::types::{
    comp_subtype, glb, is_subtype, is_well_formed, row_subtype, type_equiv, Comp, Qualifier, Row,
    Type,
};

/// The default type assigned to row variables with an empty upper
/// bound. Soundness requires one fixed default everywhere.
pub fn default_type() -> Type {
    Type::Int
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, PartialOrd, Ord)]
pub enum DiagnosticKind {
    GlbUndefined,
    LowerBoundViolation,
    MethodDetached,
    PrototypalEscape,
    UnboundVariable,
    ParseError,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticKind::GlbUndefined => "GlbUndefined",
            DiagnosticKind::LowerBoundViolation => "LowerBoundViolation",
            DiagnosticKind::MethodDetached => "MethodDetached",
            DiagnosticKind::PrototypalEscape => "PrototypalEscape",
            DiagnosticKind::UnboundVariable => "UnboundVariable",
            DiagnosticKind::ParseError => "ParseError",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
    /// Rendered literals/variables involved in the failure.
    pub details: Vec<String>,
    /// Conflicts reachable from several equated variables collapse onto
    /// one diagnostic via this key.
    #[serde(skip)]
    dedup: String,
}

impl Diagnostic {
    pub fn new(
        kind: DiagnosticKind,
        span: Span,
        message: impl Into<String>,
        details: Vec<String>,
        dedup: String,
    ) -> Diagnostic {
        Diagnostic { kind, span, message: message.into(), details, dedup }
    }

    pub fn simple(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Diagnostic {
        let message = message.into();
        let dedup = format!("{kind}:{span:?}:{message}");
        Diagnostic { kind, span, message, details: Vec::new(), dedup }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.span, self.kind, self.message)
    }
}

/// The final map from inference variables to source types and from row
/// variables to resolved components.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    pub type_vars: BTreeMap<TypeVar, Type>,
    pub row_vars: BTreeMap<RowVar, Comp>,
}

impl Assignment {
    pub fn type_of(&self, var: TypeVar) -> &Type {
        &self.type_vars[&var]
    }
}

#[derive(Debug)]
pub enum AscribeError {
    Diagnostics(Vec<Diagnostic>),
    /// An invariant the solver was supposed to establish does not hold;
    /// indicates an implementation bug, reported with exit code 2.
    Internal(String),
}

struct Facts {
    strip: HashSet<TypeVar>,
    proto: HashSet<TypeVar>,
    conc: HashSet<TypeVar>,
    not_method: HashSet<TypeVar>,
    not_proto: HashSet<TypeVar>,
}

impl Facts {
    fn gather(store: &ConstraintStore) -> Facts {
        let mut f = Facts {
            strip: HashSet::new(),
            proto: HashSet::new(),
            conc: HashSet::new(),
            not_method: HashSet::new(),
            not_proto: HashSet::new(),
        };
        for (c, _) in store.constraints() {
            match c {
                Constraint::Strip(v) => {
                    f.strip.insert(*v);
                }
                Constraint::Proto(v) => {
                    f.proto.insert(*v);
                }
                Constraint::Conc(v) => {
                    f.conc.insert(*v);
                }
                Constraint::NotMethod(v) => {
                    f.not_method.insert(*v);
                }
                Constraint::NotProto(v) => {
                    f.not_proto.insert(*v);
                }
                _ => {}
            }
        }
        f
    }
}

pub fn ascribe_all(store: &ConstraintStore) -> Result<Assignment, AscribeError> {
    let facts = Facts::gather(store);
    let mut cx = Ascriber {
        store,
        facts,
        assignment: Assignment::default(),
        diagnostics: Vec::new(),
        internal: None,
    };
    cx.run();
    if let Some(msg) = cx.internal {
        return Err(AscribeError::Internal(msg));
    }
    if cx.diagnostics.is_empty() {
        Ok(cx.assignment)
    } else {
        Err(AscribeError::Diagnostics(dedup_diagnostics(cx.diagnostics)))
    }
}

/// Collapse diagnostics that describe the same conflict (reached through
/// several equated variables), keeping the earliest point in source
/// order at which the conflict was complete, then sort.
fn dedup_diagnostics(diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    let mut by_key: BTreeMap<String, Diagnostic> = BTreeMap::new();
    for d in diags {
        match by_key.get_mut(&d.dedup) {
            Some(existing) => {
                if d.span < existing.span {
                    *existing = d;
                }
            }
            None => {
                by_key.insert(d.dedup.clone(), d);
            }
        }
    }
    let mut out: Vec<Diagnostic> = by_key.into_values().collect();
    out.sort_by_key(|d| (d.span, d.kind));
    out
}

struct Ascriber<'a> {
    store: &'a ConstraintStore,
    facts: Facts,
    assignment: Assignment,
    diagnostics: Vec<Diagnostic>,
    internal: Option<String>,
}

impl<'a> Ascriber<'a> {
    fn run(&mut self) {
        let sccs = dependency_sccs(self.store, &self.facts.strip);
        for scc in sccs {
            self.ascribe_scc(&scc);
        }
    }

    fn ascribe_scc(&mut self, members: &[TypeVar]) {
        // Variables equated by propagation share identical bound sets;
        // give each such class one representative and one recursion
        // variable, so that resolved occurrences compare equal.
        let mut rep_of: BTreeMap<TypeVar, TypeVar> = BTreeMap::new();
        let mut reps: Vec<TypeVar> = Vec::new();
        let mut by_fingerprint: HashMap<(bool, Vec<Vec<LitId>>), TypeVar> = HashMap::new();
        for &x in members {
            let fp = (self.facts.strip.contains(&x), self.fingerprint(x));
            let rep = *by_fingerprint.entry(fp).or_insert_with(|| {
                reps.push(x);
                x
            });
            rep_of.insert(x, rep);
        }
        let alpha: BTreeMap<TypeVar, String> = rep_of
            .iter()
            .map(|(m, rep)| (*m, format!("a{}", rep.0)))
            .collect();

        // per-sort components of each representative, with recursion
        // variables standing in for member occurrences
        let mut comps: HashMap<RowVar, (Comp, bool)> = HashMap::new();
        for &rep in &reps {
            let stripped = self.facts.strip.contains(&rep);
            for sort in SORTS {
                let rv = rep.sorted(sort);
                let comp = self.component_for(rv, stripped, &alpha);
                comps.insert(rv, comp);
            }
        }

        let mut raw: BTreeMap<TypeVar, Type> = BTreeMap::new();
        for &rep in &reps {
            let t = self.assemble(rep, &comps);
            raw.insert(rep, t);
        }
        // qualifier failure checks are per original variable (the
        // acceptance criteria are not propagated to equated variables)
        for &x in members {
            if rep_of[&x] != x {
                self.check_acceptance(x, &raw[&rep_of[&x]].clone());
            }
        }

        // close the open types with nested binders, once per class;
        // equated members share the closed structure
        let mut closed_of: BTreeMap<TypeVar, Type> = BTreeMap::new();
        for &rep in &reps {
            closed_of.insert(rep, close_member(rep, &raw, &mut BTreeSet::new()));
        }
        for &x in members {
            self.assignment
                .type_vars
                .insert(x, closed_of[&rep_of[&x]].clone());
        }
        // close the row components too, substituting each class's
        // recursion variable by its closed type; once per class
        let mut closed_comps: HashMap<RowVar, Comp> = HashMap::new();
        for &rep in &reps {
            for sort in SORTS {
                let (comp, _) = comps[&rep.sorted(sort)].clone();
                closed_comps.insert(rep.sorted(sort), self.close_comp(comp, &reps));
            }
        }
        for &x in members {
            let rep = rep_of[&x];
            for sort in SORTS {
                self.assignment
                    .row_vars
                    .insert(x.sorted(sort), closed_comps[&rep.sorted(sort)].clone());
            }
        }
    }

    /// The ten bound sets of a variable, in sort order; equated
    /// variables end up with equal fingerprints after propagation.
    fn fingerprint(&self, x: TypeVar) -> Vec<Vec<LitId>> {
        let mut out = Vec::with_capacity(10);
        for sort in SORTS {
            let b = self.store.bounds(x.sorted(sort));
            let mut lb: Vec<LitId> = b.lb.keys().copied().collect();
            let mut ub: Vec<LitId> = b.ub.keys().copied().collect();
            lb.sort();
            ub.sort();
            out.push(lb);
            out.push(ub);
        }
        out
    }

    /// Re-run the acceptance-criteria checks of assembly for an equated
    /// variable that shares its representative's type.
    fn check_acceptance(&mut self, x: TypeVar, t: &Type) {
        if t.is_method() && self.facts.not_method.contains(&x) {
            let span = self.store.origin(x).span;
            let what = &self.store.origin(x).what;
            self.diagnostics.push(Diagnostic::new(
                DiagnosticKind::MethodDetached,
                span,
                format!("{what} would detach method `{t}` from its object"),
                vec![t.to_string()],
                format!("MethodDetached:{t}:{span:?}"),
            ));
        }
        if let Type::Object(obj) = t {
            if matches!(obj.qual, Qualifier::Prototypal { .. })
                && self.facts.not_proto.contains(&x)
            {
                let span = self
                    .store
                    .constraint_span(&Constraint::NotProto(x))
                    .unwrap_or_default();
                let what = &self.store.origin(x).what;
                self.diagnostics.push(Diagnostic::new(
                    DiagnosticKind::PrototypalEscape,
                    span,
                    format!("{what} must be prototypal and non-prototypal at once"),
                    vec![self.store.describe(x.r())],
                    format!("PrototypalEscape:{x}"),
                ));
            }
        }
    }

    fn close_comp(&self, comp: Comp, reps: &[TypeVar]) -> Comp {
        let close_ty = |t: &Type| {
            let mut out = t.clone();
            for &rep in reps {
                let alpha = format!("a{}", rep.0);
                if out.free_rec_vars().contains(&alpha) {
                    out = out.subst(&alpha, &self.assignment.type_vars[&rep]);
                }
            }
            out
        };
        match comp {
            Comp::Bot => Comp::Bot,
            Comp::Ty(t) => Comp::Ty(close_ty(&t)),
            Comp::Row(r) => Comp::Row(Row(r
                .0
                .iter()
                .map(|(f, t)| (f.clone(), close_ty(t)))
                .collect())),
        }
    }

    /// Resolve a literal to a component: member variables become their
    /// class's recursion variable, everything else its already-ascribed
    /// type.
    fn resolve_lit(&mut self, lit: LitId, stripped: bool, alpha: &BTreeMap<TypeVar, String>) -> Comp {
        let resolve_var = |cx: &mut Self, v: TypeVar| -> Type {
            if let Some(name) = alpha.get(&v) {
                Type::RecVar(name.clone())
            } else {
                match cx.assignment.type_vars.get(&v) {
                    Some(t) => t.clone(),
                    None => {
                        cx.internal.get_or_insert_with(|| {
                            format!(
                                "ascription order violated: {v} not yet ascribed",
                            )
                        });
                        default_type()
                    }
                }
            }
        };
        match self.store.lit(lit).clone() {
            Literal::Int => Comp::Ty(Type::Int),
            Literal::Str => Comp::Ty(Type::Str),
            Literal::BotRow => Comp::Bot,
            Literal::Row(fields) => Comp::Row(Row(fields
                .iter()
                .map(|(f, v)| (f.clone(), resolve_var(self, *v)))
                .collect())),
            Literal::Method { recv, param, ret } => {
                let param = resolve_var(self, param);
                let ret = resolve_var(self, ret);
                if stripped {
                    Comp::Ty(Type::attached(param, ret))
                } else {
                    Comp::Ty(Type::method(resolve_var(self, recv), param, ret))
                }
            }
            Literal::Fun { param, ret } => {
                Comp::Ty(Type::function(resolve_var(self, param), resolve_var(self, ret)))
            }
        }
    }

    /// Component of one row variable: glb of the resolved upper bound
    /// (default on empty), followed by the lower-bound subtype checks.
    /// Returns (component, was-defaulted).
    fn component_for(
        &mut self,
        rv: RowVar,
        stripped: bool,
        alpha: &BTreeMap<TypeVar, String>,
    ) -> (Comp, bool) {
        let bounds = self.store.bounds(rv);
        let ub: Vec<(LitId, Span)> = bounds.ub.iter().map(|(l, s)| (*l, *s)).collect();
        let lb: Vec<(LitId, Span)> = bounds.lb.iter().map(|(l, s)| (*l, *s)).collect();

        if ub.is_empty() {
            return (Comp::Ty(default_type()), true);
        }

        let mut resolved: Vec<(LitId, Comp, Span)> = Vec::with_capacity(ub.len());
        for (l, span) in &ub {
            if matches!(self.store.lit(*l), Literal::BotRow) {
                self.internal.get_or_insert_with(|| {
                    format!("bottom row reached an upper bound at {rv}")
                });
                continue;
            }
            let c = self.resolve_lit(*l, stripped, alpha);
            resolved.push((*l, c, *span));
        }
        if resolved.is_empty() {
            return (Comp::Ty(default_type()), true);
        }

        // Receiver types of unattached methods are reconciled through
        // the attach machinery, not the method lattice: two method
        // literals reaching one bound may carry distinct receiver
        // variables (one from the declaration, one per call site). For
        // ascription they count as the same method when parameter and
        // return agree; the first literal's receiver is kept.
        let mut merged: Vec<(LitId, Comp, Span)> = Vec::with_capacity(resolved.len());
        for (l, c, s) in &resolved {
            if let Comp::Ty(Type::Method { param, ret, .. }) = c {
                let dup = merged.iter().any(|(_, prev, _)| match prev {
                    Comp::Ty(Type::Method { param: p2, ret: r2, .. }) => {
                        type_equiv(param, p2) && type_equiv(ret, r2)
                    }
                    _ => false,
                });
                if dup {
                    continue;
                }
            }
            merged.push((*l, c.clone(), *s));
        }
        let comps: Vec<Comp> = merged.iter().map(|(_, c, _)| c.clone()).collect();
        let glb_comp = match glb(&comps) {
            Ok(c) => c,
            Err(_) => {
                // find a conflicting pair of upper-bound literals for
                // the report
                let mut pair = None;
                'outer: for i in 0..merged.len() {
                    for j in i + 1..merged.len() {
                        if glb(&[merged[i].1.clone(), merged[j].1.clone()]).is_err() {
                            pair = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                let (i, j) = pair.expect("glb failed but no conflicting pair");
                let (_, ca, sa) = &merged[i];
                let (_, cb, sb) = &merged[j];
                let span = (*sa).max(*sb);
                let what = &self.store.origin(rv.var).what;
                self.diagnostics.push(Diagnostic::new(
                    DiagnosticKind::GlbUndefined,
                    span,
                    format!(
                        "incompatible requirements on {what}: no common subtype of `{ca}` and `{cb}`"
                    ),
                    vec![ca.to_string(), cb.to_string(), self.store.describe(rv)],
                    {
                        let (a, b) = (ca.to_string(), cb.to_string());
                        let (a, b) = if a <= b { (a, b) } else { (b, a) };
                        format!("GlbUndefined:{a}:{b}")
                    },
                ));
                return (Comp::Ty(default_type()), true);
            }
        };

        // every lower-bound literal must be a subtype of the glb
        for (l, lspan) in &lb {
            let resolved_lb = self.resolve_lit(*l, stripped, alpha);
            if !lb_satisfies(&resolved_lb, &glb_comp) {
                // prefer blaming a single conflicting upper-bound literal
                let witness = merged
                    .iter()
                    .find(|(_, c, _)| !lb_satisfies(&resolved_lb, c));
                let (wit_render, wit_span) = match witness {
                    Some((_, wc, ws)) => (wc.to_string(), *ws),
                    None => (glb_comp.to_string(), *lspan),
                };
                let span = (*lspan).max(wit_span);
                let what = &self.store.origin(rv.var).what;
                self.diagnostics.push(Diagnostic::new(
                    DiagnosticKind::LowerBoundViolation,
                    span,
                    format!(
                        "value of type `{resolved_lb}` flows into {what}, which requires `{wit_render}`"
                    ),
                    vec![
                        resolved_lb.to_string(),
                        wit_render.clone(),
                        self.store.describe(rv),
                    ],
                    format!("LowerBoundViolation:{resolved_lb}:{wit_render}"),
                ));
            }
        }

        (glb_comp, false)
    }

    /// Assemble the source type of `x` from its five components
    /// (Algorithm 1 lines after the per-sort loop).
    fn assemble(&mut self, x: TypeVar, comps: &HashMap<RowVar, (Comp, bool)>) -> Type {
        let (r_comp, _) = comps[&x.r()].clone();
        match r_comp {
            Comp::Bot => {
                self.internal
                    .get_or_insert_with(|| format!("bottom row component for {x}"));
                default_type()
            }
            Comp::Ty(t) => {
                if t.is_method() && self.facts.not_method.contains(&x) {
                    let span = self.store.origin(x).span;
                    let what = &self.store.origin(x).what;
                    self.diagnostics.push(Diagnostic::new(
                        DiagnosticKind::MethodDetached,
                        span,
                        format!("{what} would detach method `{t}` from its object"),
                        vec![t.to_string()],
                        format!("MethodDetached:{x}:{span:?}"),
                    ));
                }
                t
            }
            Comp::Row(readable) => {
                let writeable = self.row_component(x, Sort::W, comps);
                let qual = if self.facts.proto.contains(&x) {
                    if self.facts.not_proto.contains(&x) {
                        let p_span = self
                            .store
                            .constraint_span(&Constraint::Proto(x))
                            .unwrap_or_default();
                        let n_span = self
                            .store
                            .constraint_span(&Constraint::NotProto(x))
                            .unwrap_or_default();
                        let span = p_span.max(n_span);
                        let what = &self.store.origin(x).what;
                        self.diagnostics.push(Diagnostic::new(
                            DiagnosticKind::PrototypalEscape,
                            span,
                            format!("{what} must be prototypal and non-prototypal at once"),
                            vec![self.store.describe(x.r())],
                            format!("PrototypalEscape:{x}"),
                        ));
                    }
                    Qualifier::Prototypal {
                        mr: self.row_component(x, Sort::Mr, comps),
                        mw: self.row_component(x, Sort::Mw, comps),
                    }
                } else if self.facts.conc.contains(&x) {
                    Qualifier::Concrete
                } else {
                    Qualifier::Abstract
                };
                Type::object(readable, writeable, qual)
            }
        }
    }

    /// A component that must be a row for object assembly. A defaulted
    /// component (empty upper bound) harmonizes to the empty row; that
    /// only happens with strengthening rules disabled in a harness.
    fn row_component(
        &mut self,
        x: TypeVar,
        sort: Sort,
        comps: &HashMap<RowVar, (Comp, bool)>,
    ) -> Row {
        let (comp, defaulted) = comps[&x.sorted(sort)].clone();
        match comp {
            Comp::Row(r) => r,
            Comp::Ty(_) if defaulted => Row::empty(),
            other => {
                self.internal.get_or_insert_with(|| {
                    format!(
                        "object assembly for {x} found non-row component `{other}` at sort {sort}"
                    )
                });
                Row::empty()
            }
        }
    }
}

/// The lower-bound check, with method attachment and receivers compared
/// leniently: a method value satisfies a method requirement when
/// parameter and return agree (receiver compatibility is the attach
/// machinery's job, and stripping erases receivers on the way to
/// attached positions).
fn lb_satisfies(lb: &Comp, ub: &Comp) -> bool {
    match (lb, ub) {
        (Comp::Ty(a), Comp::Ty(b)) if a.is_method() && b.is_method() => {
            let (p1, r1) = method_sig(a);
            let (p2, r2) = method_sig(b);
            type_equiv(p1, p2) && type_equiv(r1, r2)
        }
        _ => comp_subtype(lb, ub),
    }
}

fn method_sig(t: &Type) -> (&Type, &Type) {
    match t {
        Type::Method { param, ret, .. } | Type::AttachedMethod { param, ret } => (param, ret),
        _ => unreachable!("method_sig on non-method"),
    }
}

/// Close one representative of a strongly-connected component:
/// substitute the other classes' recursion variables by their own
/// (recursively closed) binders, and wrap a binder when the class's own
/// variable stays free.
fn close_member(x: TypeVar, raw: &BTreeMap<TypeVar, Type>, bound: &mut BTreeSet<String>) -> Type {
    let alpha = format!("a{}", x.0);
    let mut t = raw[&x].clone();
    bound.insert(alpha.clone());
    loop {
        let frees = t.free_rec_vars();
        let next = raw.keys().find_map(|m| {
            let a = format!("a{}", m.0);
            if frees.contains(&a) && !bound.contains(&a) {
                Some((*m, a))
            } else {
                None
            }
        });
        match next {
            Some((m, a)) => {
                let sub = close_member(m, raw, bound);
                t = t.subst(&a, &sub);
            }
            None => break,
        }
    }
    bound.remove(&alpha);
    if t.free_rec_vars().contains(&alpha) {
        Type::rec(alpha, t)
    } else {
        t
    }
}

/// Dependency SCCs of the type variables, in dependency-first order.
/// `x` depends on `y` when `y` occurs inside a literal in any bound of
/// any of `x`'s row variables (receivers of stripped variables' method
/// literals excluded, mirroring the strip step).
fn dependency_sccs(store: &ConstraintStore, strip: &HashSet<TypeVar>) -> Vec<Vec<TypeVar>> {
    let n = store.num_typevars();
    let mut deps: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for x in store.typevars() {
        let stripped = strip.contains(&x);
        for sort in SORTS {
            let b = store.bounds(x.sorted(sort));
            for l in b.lb.keys().chain(b.ub.keys()) {
                match store.lit(*l) {
                    Literal::Method { recv, param, ret } => {
                        if !stripped {
                            deps[x.0 as usize].insert(recv.0);
                        }
                        deps[x.0 as usize].insert(param.0);
                        deps[x.0 as usize].insert(ret.0);
                    }
                    lit => {
                        for v in lit.vars() {
                            deps[x.0 as usize].insert(v.0);
                        }
                    }
                }
            }
        }
    }
    tarjan_sccs(&deps)
}

/// Iterative Tarjan; emits SCCs with all successors already emitted.
fn tarjan_sccs(deps: &[BTreeSet<u32>]) -> Vec<Vec<TypeVar>> {
    let n = deps.len();
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut out: Vec<Vec<TypeVar>> = Vec::new();

    // explicit DFS frames: (node, iterator position over its deps)
    enum Frame {
        Enter(u32),
        Resume(u32, u32),
    }

    for start in 0..n as u32 {
        if index[start as usize] != u32::MAX {
            continue;
        }
        let mut frames = vec![Frame::Enter(start)];
        while let Some(frame) = frames.pop() {
            match frame {
                Frame::Enter(v) => {
                    index[v as usize] = next_index;
                    low[v as usize] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v as usize] = true;
                    frames.push(Frame::Resume(v, 0));
                }
                Frame::Resume(v, child_pos) => {
                    let succs: Vec<u32> = deps[v as usize].iter().copied().collect();
                    let mut pos = child_pos as usize;
                    // fold in the child we just returned from
                    if pos > 0 {
                        let w = succs[pos - 1];
                        low[v as usize] = low[v as usize].min(low[w as usize]);
                    }
                    let mut descended = false;
                    while pos < succs.len() {
                        let w = succs[pos];
                        if index[w as usize] == u32::MAX {
                            frames.push(Frame::Resume(v, (pos + 1) as u32));
                            frames.push(Frame::Enter(w));
                            descended = true;
                            break;
                        } else if on_stack[w as usize] {
                            low[v as usize] = low[v as usize].min(index[w as usize]);
                        }
                        pos += 1;
                    }
                    if descended {
                        continue;
                    }
                    if low[v as usize] == index[v as usize] {
                        let mut scc = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w as usize] = false;
                            scc.push(TypeVar(w));
                            if w == v {
                                break;
                            }
                        }
                        scc.sort();
                        out.push(scc);
                    }
                }
            }
        }
    }
    out
}

/// Substitute the assignment into every constraint of the store and
/// check that it holds; also checks the subtyping-soundness implication
/// on every r/w constraint pair and well-formedness of every ascribed
/// type. Returns the first violation.
pub fn verify_assignment(store: &ConstraintStore, phi: &Assignment) -> Result<(), String> {
    let facts = Facts::gather(store);

    let comp_of = |rv: RowVar| -> Comp {
        phi.row_vars
            .get(&rv)
            .cloned()
            .unwrap_or_else(|| Comp::Ty(default_type()))
    };
    let type_of = |v: TypeVar| -> Type {
        phi.type_vars
            .get(&v)
            .cloned()
            .unwrap_or_else(default_type)
    };
    let resolve_lit = |l: LitId, stripped: bool| -> Comp {
        match store.lit(l) {
            Literal::Int => Comp::Ty(Type::Int),
            Literal::Str => Comp::Ty(Type::Str),
            Literal::BotRow => Comp::Bot,
            Literal::Row(fields) => Comp::Row(Row(fields
                .iter()
                .map(|(f, v)| (f.clone(), type_of(*v)))
                .collect())),
            Literal::Method { recv, param, ret } => {
                if stripped {
                    Comp::Ty(Type::attached(type_of(*param), type_of(*ret)))
                } else {
                    Comp::Ty(Type::method(type_of(*recv), type_of(*param), type_of(*ret)))
                }
            }
            Literal::Fun { param, ret } => {
                Comp::Ty(Type::function(type_of(*param), type_of(*ret)))
            }
        }
    };
    // unfold through binders to inspect an object's shape
    let as_object = |t: &Type| -> Option<crate::types::ObjectType> {
        let mut t = t.clone();
        for _ in 0..64 {
            match t {
                Type::Object(o) => return Some((*o).clone()),
                Type::Rec { .. } => t = crate::types::unfold(&t),
                _ => return None,
            }
        }
        None
    };

    let mut rw_r: HashSet<(TypeVar, TypeVar)> = HashSet::new();
    let mut rw_w: HashSet<(TypeVar, TypeVar)> = HashSet::new();

    for (c, _) in store.constraints() {
        match c {
            Constraint::SubVL(rv, l) => {
                let lhs = comp_of(*rv);
                let rhs = resolve_lit(*l, facts.strip.contains(&rv.var));
                if !lb_satisfies(&lhs, &rhs) {
                    return Err(format!("constraint {rv} <: {rhs} violated: {rv} = {lhs}"));
                }
            }
            Constraint::SubLV(l, rv) => {
                let lhs = resolve_lit(*l, facts.strip.contains(&rv.var));
                let rhs = comp_of(*rv);
                if !lb_satisfies(&lhs, &rhs) {
                    return Err(format!("constraint {lhs} <: {rv} violated: {rv} = {rhs}"));
                }
            }
            Constraint::SubVV(x, y) => {
                let lhs = comp_of(*x);
                let rhs = comp_of(*y);
                if !comp_subtype(&lhs, &rhs) {
                    return Err(format!("constraint {x} <: {y} violated: {lhs} </: {rhs}"));
                }
                if x.sort == Sort::R && y.sort == Sort::R {
                    rw_r.insert((x.var, y.var));
                }
                if x.sort == Sort::W && y.sort == Sort::W {
                    rw_w.insert((x.var, y.var));
                }
            }
            Constraint::SubVMinus(x, y, fields) => {
                let lhs = comp_of(*x);
                let rhs = comp_of(*y);
                match (&lhs, &rhs) {
                    (Comp::Row(rl), Comp::Row(rr)) => {
                        let fs: BTreeSet<String> = fields.iter().cloned().collect();
                        if !row_subtype(rl, &rr.without(&fs)) {
                            return Err(format!(
                                "constraint {x} <: {y} \\ {{{}}} violated",
                                fields.join(",")
                            ));
                        }
                    }
                    _ => {
                        return Err(format!(
                            "minus constraint {x} <: {y} \\ ... on non-row components"
                        ))
                    }
                }
            }
            Constraint::Proto(v) => match as_object(&type_of(*v)) {
                Some(o) if matches!(o.qual, Qualifier::Prototypal { .. }) => {}
                other => {
                    return Err(format!(
                        "proto({v}) violated: assigned {:?}",
                        other.map(|o| o.qual)
                    ))
                }
            },
            Constraint::Conc(v) => {
                let t = type_of(*v);
                match as_object(&t) {
                    Some(o) => match &o.qual {
                        Qualifier::Concrete => {}
                        Qualifier::Prototypal { mr, mw } => {
                            if !(row_subtype(&o.readable, mr) && row_subtype(&o.writeable, mw)) {
                                return Err(format!("conc({v}) violated: abstract prototypal"));
                            }
                        }
                        Qualifier::Abstract => {
                            return Err(format!("conc({v}) violated: abstract type"))
                        }
                    },
                    None => return Err(format!("conc({v}) violated: non-object {t}")),
                }
            }
            Constraint::Strip(v) => {
                let t = type_of(*v);
                if !matches!(t, Type::AttachedMethod { .. }) {
                    return Err(format!("strip({v}) violated: assigned {t}"));
                }
            }
            Constraint::NotMethod(v) => {
                let t = type_of(*v);
                if t.is_method() {
                    return Err(format!("notMethod({v}) violated: assigned {t}"));
                }
            }
            Constraint::NotProto(v) => {
                if let Some(o) = as_object(&type_of(*v)) {
                    if matches!(o.qual, Qualifier::Prototypal { .. }) {
                        return Err(format!("notProto({v}) violated"));
                    }
                }
            }
            Constraint::Attach { base, field, value } => {
                // the implication only binds when an unattached method
                // flows into the value
                let has_method = store
                    .bounds(value.r())
                    .ub
                    .keys()
                    .any(|l| matches!(store.lit(*l), Literal::Method { .. }));
                if has_method {
                    let bt = type_of(*base);
                    let bo = match as_object(&bt) {
                        Some(o) => o,
                        None => {
                            return Err(format!("attach base {base} is non-object {bt}"))
                        }
                    };
                    let (mr, mw) = match &bo.qual {
                        Qualifier::Prototypal { mr, mw } => (mr.clone(), mw.clone()),
                        _ => return Err(format!("attach base {base} not prototypal")),
                    };
                    for l in store.bounds(value.r()).ub.keys() {
                        if let Literal::Method { recv, .. } = store.lit(*l) {
                            let rt = type_of(*recv);
                            let ro = match as_object(&rt) {
                                Some(o) => o,
                                None => {
                                    return Err(format!(
                                        "method receiver {recv} is non-object {rt}"
                                    ))
                                }
                            };
                            if !row_subtype(&mr, &ro.readable) || !row_subtype(&mw, &ro.writeable)
                            {
                                return Err(format!(
                                    "attach({base},{field},{value}): method rows do not cover receiver"
                                ));
                            }
                        }
                    }
                    let ft = type_of(*field);
                    if !matches!(ft, Type::AttachedMethod { .. }) {
                        return Err(format!("attach field {field} not attached: {ft}"));
                    }
                }
            }
        }
    }

    // soundness of subtyping constraints: an r/w pair of edges implies
    // source-level subtyping of the assigned types
    for (x, y) in rw_r.intersection(&rw_w) {
        let tx = type_of(*x);
        let ty = type_of(*y);
        if !is_subtype(&tx, &ty) {
            return Err(format!(
                "subtype pair ({x},{y}) violated: {tx} </: {ty}"
            ));
        }
    }

    // well-formedness of every ascribed type
    let empty = BTreeSet::new();
    for (v, t) in &phi.type_vars {
        if !is_well_formed(t, &empty) {
            return Err(format!("ill-formed ascription for {v}: {t}"));
        }
    }
    for (rv, c) in &phi.row_vars {
        if let Comp::Ty(t) = c {
            if !is_well_formed(t, &empty) {
                return Err(format!("ill-formed component for {rv}: {t}"));
            }
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congen::generate_program;
    use crate::solver::propagate;
    use crate::surface::{parse, SourceProgram};

    fn pipeline(text: &str) -> (ConstraintStore, Result<Assignment, Vec<Diagnostic>>) {
        let e = parse(&SourceProgram::new(text, "t.sjs")).expect("parse");
        let mut store = ConstraintStore::new();
        generate_program(&e, &mut store).expect("generate");
        propagate(&mut store);
        let result = match ascribe_all(&store) {
            Ok(a) => Ok(a),
            Err(AscribeError::Diagnostics(d)) => Err(d),
            Err(AscribeError::Internal(m)) => panic!("internal: {m}"),
        };
        (store, result)
    }

    fn object_literal_vars(store: &ConstraintStore) -> Vec<TypeVar> {
        store
            .typevars()
            .filter(|v| store.origin(*v).what == "object literal")
            .collect()
    }

    fn row(fields: &[(&str, Type)]) -> Row {
        Row::from_fields(fields.iter().map(|(f, t)| (f.to_string(), t.clone())))
    }

    #[test]
    fn o2_gets_the_displayed_type() {
        let (store, result) = pipeline(
            "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
             var v2 = { a : 2 } proto v1;\n\
             v2.m(3)",
        );
        let phi = result.expect("accepted");
        let o2 = object_literal_vars(&store)[1];
        let expected = Type::object(
            row(&[
                ("d", Type::Int),
                ("m", Type::attached(Type::Int, Type::Int)),
                ("a", Type::Int),
            ]),
            row(&[("a", Type::Int)]),
            Qualifier::Prototypal {
                mr: row(&[("d", Type::Int), ("a", Type::Int)]),
                mw: row(&[("a", Type::Int)]),
            },
        );
        assert!(
            type_equiv(phi.type_of(o2), &expected),
            "got {}",
            phi.type_of(o2)
        );
    }

    #[test]
    fn reading_a_missing_field_is_a_lower_bound_violation() {
        let (_, result) = pipeline("({a: 3} proto {}).b");
        let diags = result.expect_err("should be rejected");
        assert!(diags
            .iter()
            .any(|d| d.kind == DiagnosticKind::LowerBoundViolation
                && d.details.contains(&"<>".to_string())
                && d.details.iter().any(|s| s.starts_with("<b:"))),
            "{diags:?}"
        );
    }

    #[test]
    fn calling_a_method_on_an_abstract_literal_is_rejected() {
        let (_, result) = pipeline("({m: function () { this.f = 3 }}).m()");
        let diags = result.expect_err("should be rejected");
        assert!(!diags.is_empty());
        assert!(diags
            .iter()
            .all(|d| d.kind == DiagnosticKind::LowerBoundViolation));
        // the literal's own row reaches a row demanding f through the
        // proto-and-concrete edge
        assert!(diags.iter().any(|d| {
            d.details.iter().any(|s| s.starts_with("<m:"))
                && d.details.iter().any(|s| s.starts_with("<f:"))
        }));
    }

    #[test]
    fn unconstrained_variables_default_to_int() {
        let (store, result) = pipeline("var id = function (y) { y }; id(1)");
        let phi = result.expect("accepted");
        // the function parameter has inflow int, so it resolves to int;
        // a wholly unused variable also defaults to int
        let (_, result2) = pipeline("var unused = function (y) { y }; 0");
        let phi2 = result2.expect("accepted");
        let param = store
            .typevars()
            .find(|v| store.origin(*v).what.contains("parameter `y`"))
            .unwrap();
        assert_eq!(phi.type_of(param), &Type::Int);
        drop(phi2);
    }

    #[test]
    fn detaching_a_method_is_rejected() {
        let (_, result) = pipeline("var o = { m : function (x) { this.a = x }, a : 1 }; o.m");
        let diags = result.expect_err("should be rejected");
        assert!(
            diags.iter().any(|d| d.kind == DiagnosticKind::MethodDetached),
            "{diags:?}"
        );
    }

    #[test]
    fn receiver_used_as_prototype_parent_is_rejected() {
        let (_, result) = pipeline("var o = { m : function (x) { ({ a : 1 } proto this).a } }; o");
        let diags = result.expect_err("should be rejected");
        assert!(
            diags.iter().any(|d| d.kind == DiagnosticKind::PrototypalEscape),
            "{diags:?}"
        );
    }

    #[test]
    fn recursive_object_gets_a_mu_type() {
        // x's field holds x itself and is read through twice; the deep
        // read's row closes a cycle in the field variable's bounds and
        // ascription must introduce a recursion binder
        let (store, result) = pipeline("var x = { f : null } proto {}; x.f = x; x.f.f");
        match result {
            Ok(phi) => {
                let x = store
                    .typevars()
                    .find(|v| store.origin(*v).what == "var `x`")
                    .unwrap();
                let t = phi.type_of(x);
                assert!(
                    format!("{t}").contains("mu "),
                    "expected a recursive type, got {t}"
                );
                // and the binder unfolds to itself
                let unfolded = crate::types::unfold(match t {
                    Type::Object(o) => o.readable.get("f").unwrap(),
                    other => other,
                });
                assert!(is_well_formed(&unfolded, &BTreeSet::new()));
            }
            Err(ds) => panic!("expected accept, got {ds:?}"),
        }
    }

    #[test]
    fn verify_accepts_the_valid_prefix() {
        let (store, result) = pipeline(
            "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
             var v2 = { a : 2 } proto v1;\n\
             v2.m(3)",
        );
        let phi = result.expect("accepted");
        assert_eq!(verify_assignment(&store, &phi), Ok(()));
    }

    #[test]
    fn verify_rejects_a_bogus_assignment() {
        // a store with X^r == <a: Y> cannot be satisfied by mapping
        // everything to int
        let mut store = ConstraintStore::new();
        let x = store.fresh_typevar(Span::synthetic(), "x");
        let y = store.fresh_typevar(Span::synthetic(), "y");
        let lit = store.intern(Literal::row([("a".to_string(), y)]));
        store.add(Constraint::SubVL(x.r(), lit), Span::synthetic());
        store.add(Constraint::SubLV(lit, x.r()), Span::synthetic());
        let mut phi = Assignment::default();
        for v in [x, y] {
            phi.type_vars.insert(v, Type::Int);
            for s in SORTS {
                phi.row_vars.insert(v.sorted(s), Comp::Ty(Type::Int));
            }
        }
        assert!(verify_assignment(&store, &phi).is_err());
    }

    #[test]
    fn verify_accepts_the_empty_store() {
        let store = ConstraintStore::new();
        let phi = Assignment::default();
        assert_eq!(verify_assignment(&store, &phi), Ok(()));
    }

    #[test]
    fn na_results_are_supertypes_of_their_base() {
        // for sampled object assignments, the NA-qualified type over the
        // same base is a supertype
        let mut rng = crate::sample::rng(23);
        for _ in 0..200 {
            let t = crate::sample::sample_object(&mut rng, 2);
            if let Type::Object(obj) = &t {
                let na = Type::object(
                    obj.readable.clone(),
                    obj.writeable.clone(),
                    Qualifier::Abstract,
                );
                assert!(crate::types::is_subtype(&t, &na), "{t} </: {na}");
            }
        }
    }

    #[test]
    fn diagnostics_are_deterministic_and_source_ordered() {
        let text = "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
                    var v2 = { a : 2 } proto v1;\n\
                    v2.m(3);\n\
                    v2.m(\"foo\");\n\
                    var v3 = { b : 4 } proto v2;\n\
                    v3.m(4)";
        let (_, r1) = pipeline(text);
        let (_, r2) = pipeline(text);
        let d1 = r1.expect_err("rejected");
        let d2 = r2.expect_err("rejected");
        let render = |ds: &[Diagnostic]| -> Vec<String> {
            ds.iter().map(|d| d.to_string()).collect()
        };
        assert_eq!(render(&d1), render(&d2));
        let spans: Vec<Span> = d1.iter().map(|d| d.span).collect();
        let mut sorted = spans.clone();
        sorted.sort();
        assert_eq!(spans, sorted);
    }
}
