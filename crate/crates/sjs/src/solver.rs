//! Fixed-point propagation over the constraint store: computes the
//! smallest constraint set and lower/upper bound sets closed under the
//! sixteen propagation rules.
//!
//! The engine is a FIFO worklist of insertion events (new constraints
//! and new bound literals). Every rule fires from the event that
//! completes its pattern, so the fixed point is reached exactly when the
//! queue drains. Bounds and the constraint set only ever grow, and the
//! literal universe is finite, so this terminates.
//!
//! Literal arrivals carry a blame span: seeds take the constraint's
//! span, flowed literals take the later of the edge's span and the
//! source arrival, and strengthened literals inherit the triggering
//! arrival. Diagnostics lean on these to point at the use site that
//! completed a conflict.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::constraints::{
    Constraint, ConstraintStore, Event, LitId, Literal, RowVar, Side, Sort, TypeVar, SORTS,
};
use crate::span::Span;

/// Identifiers for the sixteen propagation rules.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Rule {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
    Viii,
    Ix,
    X,
    Xi,
    Xii,
    Xiii,
    Xiv,
    Xv,
    Xvi,
}

pub const ALL_RULES: [Rule; 16] = [
    Rule::I,
    Rule::Ii,
    Rule::Iii,
    Rule::Iv,
    Rule::V,
    Rule::Vi,
    Rule::Vii,
    Rule::Viii,
    Rule::Ix,
    Rule::X,
    Rule::Xi,
    Rule::Xii,
    Rule::Xiii,
    Rule::Xiv,
    Rule::Xv,
    Rule::Xvi,
];

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::I => "i",
            Rule::Ii => "ii",
            Rule::Iii => "iii",
            Rule::Iv => "iv",
            Rule::V => "v",
            Rule::Vi => "vi",
            Rule::Vii => "vii",
            Rule::Viii => "viii",
            Rule::Ix => "ix",
            Rule::X => "x",
            Rule::Xi => "xi",
            Rule::Xii => "xii",
            Rule::Xiii => "xiii",
            Rule::Xiv => "xiv",
            Rule::Xv => "xv",
            Rule::Xvi => "xvi",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Rule, String> {
        let lower = s.trim().to_ascii_lowercase();
        for r in ALL_RULES {
            if r.to_string() == lower {
                return Ok(r);
            }
        }
        Err(format!("unknown propagation rule `{s}` (expected i..xvi)"))
    }
}

/// Solver configuration. `disabled` exists for the test harness and the
/// fuzzer's bug-injection mode; a production check runs with everything
/// enabled.
#[derive(Clone, Default)]
pub struct SolverOptions {
    pub disabled: BTreeSet<Rule>,
    pub trace: bool,
}

impl SolverOptions {
    pub fn disabling(rules: impl IntoIterator<Item = Rule>) -> SolverOptions {
        SolverOptions { disabled: rules.into_iter().collect(), trace: false }
    }
}

/// One bound insertion, for the trace stream.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub rowvar: RowVar,
    pub side: Side,
    pub lit: LitId,
    pub rule: Rule,
    pub span: Span,
}

#[derive(Clone, Default, Debug)]
pub struct SolveStats {
    pub events: usize,
    pub bound_inserts: usize,
    pub constraint_inserts: usize,
}

pub struct SolveResult {
    pub stats: SolveStats,
    pub trace: Vec<TraceRecord>,
}

/// `top(L)`: the empty row for row literals, the literal itself
/// otherwise.
pub fn top(store: &mut ConstraintStore, lit: LitId) -> LitId {
    if store.lit(lit).is_row() {
        store.intern(Literal::empty_row())
    } else {
        lit
    }
}

/// `bot(L)`: the bottom row for row literals, the literal itself
/// otherwise.
pub fn bot(store: &mut ConstraintStore, lit: LitId) -> LitId {
    if store.lit(lit).is_row() {
        store.intern(Literal::BotRow)
    } else {
        lit
    }
}

/// Run propagation to its least fixed point.
pub fn propagate(store: &mut ConstraintStore) -> SolveResult {
    propagate_with(store, &SolverOptions::default())
}

pub fn propagate_with(store: &mut ConstraintStore, opts: &SolverOptions) -> SolveResult {
    let mut solver = Solver {
        opts: opts.clone(),
        vv_out: HashMap::new(),
        vv_in: HashMap::new(),
        minus_watch: HashMap::new(),
        attach_watch: HashMap::new(),
        r_edges: HashSet::new(),
        w_edges: HashSet::new(),
        rw_pairs: HashSet::new(),
        rw_in: HashMap::new(),
        rw_out: HashMap::new(),
        proto: HashSet::new(),
        conc: HashSet::new(),
        strip: HashSet::new(),
        trace: Vec::new(),
        stats: SolveStats::default(),
    };
    solver.run(store);
    SolveResult { stats: solver.stats, trace: solver.trace }
}

struct Solver {
    opts: SolverOptions,
    /// SubVV edges with their spans, both directions.
    vv_out: HashMap<RowVar, Vec<(RowVar, Span)>>,
    vv_in: HashMap<RowVar, Vec<(RowVar, Span)>>,
    /// For `X^s <: Y^t \ fs`, watchers keyed by `Y^t`.
    minus_watch: HashMap<RowVar, Vec<(RowVar, Vec<String>, Span)>>,
    /// For `attach(b, f, v)`, watchers keyed by `v`.
    attach_watch: HashMap<TypeVar, Vec<(TypeVar, TypeVar, Span)>>,
    /// Pairs (X, Y) with `X^r <: Y^r` (resp. `^w`) in the store.
    r_edges: HashSet<(TypeVar, TypeVar)>,
    w_edges: HashSet<(TypeVar, TypeVar)>,
    /// Pairs with both the r and w edge; the join rules (ix), (x), and
    /// (xiii) fire over these.
    rw_pairs: HashSet<(TypeVar, TypeVar)>,
    rw_in: HashMap<TypeVar, Vec<(TypeVar, Span)>>,
    rw_out: HashMap<TypeVar, Vec<(TypeVar, Span)>>,
    proto: HashSet<TypeVar>,
    conc: HashSet<TypeVar>,
    strip: HashSet<TypeVar>,
    trace: Vec<TraceRecord>,
    stats: SolveStats,
}

impl Solver {
    fn on(&self, rule: Rule) -> bool {
        !self.opts.disabled.contains(&rule)
    }

    fn run(&mut self, store: &mut ConstraintStore) {
        while let Some(event) = store.queue.pop_front() {
            self.stats.events += 1;
            match event {
                Event::Constraint(idx) => self.on_constraint(store, idx),
                Event::Bound(rv, side, lit) => self.on_bound(store, rv, side, lit),
            }
        }
    }

    fn add_bound(
        &mut self,
        store: &mut ConstraintStore,
        rv: RowVar,
        side: Side,
        lit: LitId,
        span: Span,
        rule: Rule,
    ) {
        if store.insert_bound(rv, side, lit, span) {
            self.stats.bound_inserts += 1;
            if self.opts.trace {
                self.trace.push(TraceRecord { rowvar: rv, side, lit, rule, span });
            }
        }
    }

    fn add_constraint(&mut self, store: &mut ConstraintStore, c: Constraint, span: Span) {
        if store.add(c, span) {
            self.stats.constraint_inserts += 1;
        }
    }

    fn arrival(&self, store: &ConstraintStore, rv: RowVar, side: Side, lit: LitId) -> Span {
        store
            .bounds(rv)
            .side(side)
            .get(&lit)
            .copied()
            .unwrap_or_default()
    }

    fn on_constraint(&mut self, store: &mut ConstraintStore, idx: usize) {
        let (c, span) = {
            let (c, s) = store.constraint_at(idx);
            (c.clone(), s)
        };
        match c {
            // (iii) / (iv): seed bounds
            Constraint::SubVL(rv, lit) => {
                if self.on(Rule::Iii) {
                    self.add_bound(store, rv, Side::Ub, lit, span, Rule::Iii);
                }
            }
            Constraint::SubLV(lit, rv) => {
                if self.on(Rule::Iv) {
                    self.add_bound(store, rv, Side::Lb, lit, span, Rule::Iv);
                }
            }
            Constraint::SubVV(x, y) => {
                self.vv_out.entry(x).or_default().push((y, span));
                self.vv_in.entry(y).or_default().push((x, span));
                if self.on(Rule::V) {
                    // (v): flow existing bounds across the new edge
                    let lbs: Vec<(LitId, Span)> =
                        store.bounds(x).lb.iter().map(|(l, s)| (*l, *s)).collect();
                    for (lit, src) in lbs {
                        self.add_bound(store, y, Side::Lb, lit, span.max(src), Rule::V);
                    }
                    let ubs: Vec<(LitId, Span)> =
                        store.bounds(y).ub.iter().map(|(l, s)| (*l, *s)).collect();
                    for (lit, src) in ubs {
                        self.add_bound(store, x, Side::Ub, lit, span.max(src), Rule::V);
                    }
                }
                // track r/w edge pairs for the join rules
                if x.sort == Sort::R && y.sort == Sort::R {
                    self.r_edges.insert((x.var, y.var));
                    if self.w_edges.contains(&(x.var, y.var)) {
                        self.on_rw_pair(store, x.var, y.var, span);
                    }
                } else if x.sort == Sort::W && y.sort == Sort::W {
                    self.w_edges.insert((x.var, y.var));
                    if self.r_edges.contains(&(x.var, y.var)) {
                        self.on_rw_pair(store, x.var, y.var, span);
                    }
                }
            }
            Constraint::SubVMinus(x, y, fields) => {
                self.minus_watch
                    .entry(y)
                    .or_default()
                    .push((x, fields.clone(), span));
                if self.on(Rule::Vi) {
                    let ubs: Vec<(LitId, Span)> =
                        store.bounds(y).ub.iter().map(|(l, s)| (*l, *s)).collect();
                    for (lit, src) in ubs {
                        self.minus_flow(store, x, &fields, lit, span.max(src));
                    }
                }
            }
            Constraint::Proto(v) => {
                self.proto.insert(v);
                if self.on(Rule::Xi) && self.conc.contains(&v) {
                    self.rule_xi(store, v);
                }
                if self.on(Rule::Ix) {
                    let subs = self.rw_in.get(&v).cloned().unwrap_or_default();
                    for (x, pspan) in subs {
                        self.rule_ix(store, x, v, span.max(pspan));
                    }
                }
            }
            Constraint::Conc(v) => {
                self.conc.insert(v);
                if self.on(Rule::Xi) && self.proto.contains(&v) {
                    self.rule_xi(store, v);
                }
                if self.on(Rule::X) {
                    let subs = self.rw_in.get(&v).cloned().unwrap_or_default();
                    for (x, pspan) in subs {
                        self.add_constraint(store, Constraint::Conc(x), span.max(pspan));
                    }
                }
            }
            Constraint::Strip(v) => {
                self.strip.insert(v);
                if self.on(Rule::Xiii) {
                    let sups = self.rw_out.get(&v).cloned().unwrap_or_default();
                    for (y, pspan) in sups {
                        self.add_constraint(store, Constraint::Strip(y), span.max(pspan));
                    }
                }
            }
            Constraint::Attach { base, field, value } => {
                self.attach_watch
                    .entry(value)
                    .or_default()
                    .push((base, field, span));
                if self.on(Rule::Xii) {
                    let methods: Vec<(LitId, Span)> = store
                        .bounds(value.r())
                        .ub
                        .iter()
                        .filter(|(l, _)| matches!(store.lit(**l), Literal::Method { .. }))
                        .map(|(l, s)| (*l, *s))
                        .collect();
                    for (lit, src) in methods {
                        self.rule_xii(store, base, field, lit, span.max(src));
                    }
                }
            }
            Constraint::NotMethod(_) | Constraint::NotProto(_) => {}
        }
    }

    fn on_bound(&mut self, store: &mut ConstraintStore, rv: RowVar, side: Side, lit: LitId) {
        let arrival = self.arrival(store, rv, side, lit);
        match side {
            Side::Lb => {
                // (vii): bound strengthening lb -> ub
                if self.on(Rule::Vii) {
                    let t = top(store, lit);
                    self.add_bound(store, rv, Side::Ub, t, arrival, Rule::Vii);
                }
                // (v): flow forward along subtype edges
                if self.on(Rule::V) {
                    let outs = self.vv_out.get(&rv).cloned().unwrap_or_default();
                    for (y, espan) in outs {
                        self.add_bound(store, y, Side::Lb, lit, espan.max(arrival), Rule::V);
                    }
                }
                // (xiv): equate shared fields between this lower-bound row
                // and every upper-bound row
                if self.on(Rule::Xiv) {
                    if let Literal::Row(lo) = store.lit(lit).clone() {
                        let ub_rows: Vec<(LitId, Span)> = store
                            .bounds(rv)
                            .ub
                            .iter()
                            .filter(|(l, _)| matches!(store.lit(**l), Literal::Row(_)))
                            .map(|(l, s)| (*l, *s))
                            .collect();
                        for (hi_id, hi_span) in ub_rows {
                            let hi = match store.lit(hi_id) {
                                Literal::Row(r) => r.clone(),
                                _ => unreachable!(),
                            };
                            self.equate_shared(store, &lo, &hi, arrival.max(hi_span));
                        }
                    }
                }
            }
            Side::Ub => {
                // (viii): bound strengthening ub -> lb
                if self.on(Rule::Viii) {
                    let b = bot(store, lit);
                    self.add_bound(store, rv, Side::Lb, b, arrival, Rule::Viii);
                }
                // (v): flow backward along subtype edges
                if self.on(Rule::V) {
                    let ins = self.vv_in.get(&rv).cloned().unwrap_or_default();
                    for (x, espan) in ins {
                        self.add_bound(store, x, Side::Ub, lit, espan.max(arrival), Rule::V);
                    }
                }
                // (vi): filtered flow through minus edges
                if self.on(Rule::Vi) {
                    let watchers = self.minus_watch.get(&rv).cloned().unwrap_or_default();
                    for (x, fields, espan) in watchers {
                        self.minus_flow(store, x, &fields, lit, espan.max(arrival));
                    }
                }
                match store.lit(lit).clone() {
                    Literal::Method { .. } => {
                        // (xii): a method literal reaching the value side of
                        // an attach constraint
                        if self.on(Rule::Xii) && rv.sort == Sort::R {
                            let watchers =
                                self.attach_watch.get(&rv.var).cloned().unwrap_or_default();
                            for (base, field, aspan) in watchers {
                                self.rule_xii(store, base, field, lit, aspan.max(arrival));
                            }
                        }
                        // (xvi): equate components of method literals that
                        // share an upper bound
                        if self.on(Rule::Xvi) {
                            self.rule_xvi(store, rv, lit, arrival);
                        }
                    }
                    Literal::Fun { .. } => {
                        // function analogue of (xvi)
                        if self.on(Rule::Xvi) {
                            self.rule_xvi(store, rv, lit, arrival);
                        }
                    }
                    Literal::Row(hi) => {
                        // (xiv): pair with lower-bound rows
                        if self.on(Rule::Xiv) {
                            let lb_rows: Vec<(LitId, Span)> = store
                                .bounds(rv)
                                .lb
                                .iter()
                                .filter(|(l, _)| matches!(store.lit(**l), Literal::Row(_)))
                                .map(|(l, s)| (*l, *s))
                                .collect();
                            for (lo_id, lo_span) in lb_rows {
                                let lo = match store.lit(lo_id) {
                                    Literal::Row(r) => r.clone(),
                                    _ => unreachable!(),
                                };
                                self.equate_shared(store, &lo, &hi, arrival.max(lo_span));
                            }
                        }
                        // (xv): pair with the other upper-bound rows
                        if self.on(Rule::Xv) {
                            let others: Vec<(LitId, Span)> = store
                                .bounds(rv)
                                .ub
                                .iter()
                                .filter(|(l, _)| {
                                    **l != lit && matches!(store.lit(**l), Literal::Row(_))
                                })
                                .map(|(l, s)| (*l, *s))
                                .collect();
                            for (other_id, other_span) in others {
                                let other = match store.lit(other_id) {
                                    Literal::Row(r) => r.clone(),
                                    _ => unreachable!(),
                                };
                                self.equate_shared(store, &hi, &other, arrival.max(other_span));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn minus_flow(
        &mut self,
        store: &mut ConstraintStore,
        target: RowVar,
        fields: &[String],
        lit: LitId,
        span: Span,
    ) {
        // only row literals pass through a minus edge, with the listed
        // fields removed; lower bounds never cross it
        if let Literal::Row(row) = store.lit(lit) {
            let filtered: BTreeMap<String, TypeVar> = row
                .iter()
                .filter(|(f, _)| !fields.contains(f))
                .map(|(f, v)| (f.clone(), *v))
                .collect();
            let id = store.intern(Literal::Row(filtered));
            self.add_bound(store, target, Side::Ub, id, span, Rule::Vi);
        }
    }

    fn on_rw_pair(&mut self, store: &mut ConstraintStore, x: TypeVar, y: TypeVar, span: Span) {
        if !self.rw_pairs.insert((x, y)) {
            return;
        }
        self.rw_in.entry(y).or_default().push((x, span));
        self.rw_out.entry(x).or_default().push((y, span));
        // blame the later of the edge and the qualifier fact completing
        // the pattern
        if self.on(Rule::Ix) && self.proto.contains(&y) {
            let pspan = store.constraint_span(&Constraint::Proto(y)).unwrap_or_default();
            self.rule_ix(store, x, y, span.max(pspan));
        }
        if self.on(Rule::X) && self.conc.contains(&y) {
            let cspan = store.constraint_span(&Constraint::Conc(y)).unwrap_or_default();
            self.add_constraint(store, Constraint::Conc(x), span.max(cspan));
        }
        if self.on(Rule::Xiii) && self.strip.contains(&x) {
            let sspan = store.constraint_span(&Constraint::Strip(x)).unwrap_or_default();
            self.add_constraint(store, Constraint::Strip(y), span.max(sspan));
        }
    }

    /// (ix): a subtype of a prototypal variable is prototypal and all
    /// four row sorts are equated.
    fn rule_ix(&mut self, store: &mut ConstraintStore, x: TypeVar, y: TypeVar, span: Span) {
        self.add_constraint(store, Constraint::Proto(x), span);
        for sort in [Sort::R, Sort::W, Sort::Mr, Sort::Mw] {
            self.add_constraint(
                store,
                Constraint::SubVV(x.sorted(sort), y.sorted(sort)),
                span,
            );
            self.add_constraint(
                store,
                Constraint::SubVV(y.sorted(sort), x.sorted(sort)),
                span,
            );
        }
    }

    /// (xi): a variable that is both prototypal and concrete must carry
    /// its method-accessed fields. Blamed on the later of the two facts.
    fn rule_xi(&mut self, store: &mut ConstraintStore, v: TypeVar) {
        let pspan = store.constraint_span(&Constraint::Proto(v)).unwrap_or_default();
        let cspan = store.constraint_span(&Constraint::Conc(v)).unwrap_or_default();
        let span = pspan.max(cspan);
        self.add_constraint(store, Constraint::SubVV(v.r(), v.mr()), span);
        self.add_constraint(store, Constraint::SubVV(v.w(), v.mw()), span);
    }

    /// (xii): an unattached method literal flowing into an attach makes
    /// the base prototypal, bounds its method rows by the receiver's
    /// rows, and strips the field.
    fn rule_xii(
        &mut self,
        store: &mut ConstraintStore,
        base: TypeVar,
        field: TypeVar,
        lit: LitId,
        span: Span,
    ) {
        let recv = match store.lit(lit) {
            Literal::Method { recv, .. } => *recv,
            _ => return,
        };
        self.add_constraint(store, Constraint::Proto(base), span);
        self.add_constraint(store, Constraint::SubVV(base.mr(), recv.r()), span);
        self.add_constraint(store, Constraint::SubVV(base.mw(), recv.w()), span);
        self.add_constraint(store, Constraint::Strip(field), span);
    }

    /// (xvi) and its function analogue: two method (resp. function)
    /// literals in one upper bound have their parameters and returns
    /// equated across every sort.
    fn rule_xvi(&mut self, store: &mut ConstraintStore, rv: RowVar, lit: LitId, arrival: Span) {
        let (p1, r1, is_fun) = match store.lit(lit) {
            Literal::Method { param, ret, .. } => (*param, *ret, false),
            Literal::Fun { param, ret } => (*param, *ret, true),
            _ => return,
        };
        let others: Vec<(LitId, Span)> = store
            .bounds(rv)
            .ub
            .iter()
            .filter(|(l, _)| {
                **l != lit
                    && match store.lit(**l) {
                        Literal::Method { .. } => !is_fun,
                        Literal::Fun { .. } => is_fun,
                        _ => false,
                    }
            })
            .map(|(l, s)| (*l, *s))
            .collect();
        for (other_id, other_span) in others {
            let (p2, r2) = match store.lit(other_id) {
                Literal::Method { param, ret, .. } => (*param, *ret),
                Literal::Fun { param, ret } => (*param, *ret),
                _ => unreachable!(),
            };
            let span = arrival.max(other_span);
            self.equate_vars(store, p1, p2, span);
            self.equate_vars(store, r1, r2, span);
        }
    }

    /// Equate the shared fields of two row literals, across all sorts.
    fn equate_shared(
        &mut self,
        store: &mut ConstraintStore,
        a: &BTreeMap<String, TypeVar>,
        b: &BTreeMap<String, TypeVar>,
        span: Span,
    ) {
        for (f, va) in a {
            if let Some(vb) = b.get(f) {
                self.equate_vars(store, *va, *vb, span);
            }
        }
    }

    fn equate_vars(&mut self, store: &mut ConstraintStore, a: TypeVar, b: TypeVar, span: Span) {
        if a == b {
            return;
        }
        for sort in SORTS {
            self.add_constraint(store, Constraint::SubVV(a.sorted(sort), b.sorted(sort)), span);
            self.add_constraint(store, Constraint::SubVV(b.sorted(sort), a.sorted(sort)), span);
        }
    }
}

/// Post-fixpoint audit: re-checks every propagation rule against the
/// final store and reports violations. Shipped as a test mode; a correct
/// solve has none.
pub fn audit(store: &ConstraintStore) -> Vec<String> {
    audit_with(store, &SolverOptions::default())
}

pub fn audit_with(store: &ConstraintStore, opts: &SolverOptions) -> Vec<String> {
    let mut violations = Vec::new();
    let on = |r: Rule| !opts.disabled.contains(&r);

    let has = |c: &Constraint| store.contains(c);
    let in_ub = |rv: RowVar, l: LitId| store.bounds(rv).ub.contains_key(&l);
    let in_lb = |rv: RowVar, l: LitId| store.bounds(rv).lb.contains_key(&l);

    // (ii): standing well-formedness constraints for every variable
    for v in store.typevars() {
        for c in [
            Constraint::SubVV(v.all(), v.r()),
            Constraint::SubVV(v.r(), v.w()),
            Constraint::SubVV(v.all(), v.mr()),
            Constraint::SubVV(v.mr(), v.mw()),
        ] {
            if !has(&c) {
                violations.push(format!("rule ii: missing {c:?}"));
            }
        }
    }

    let mut proto = HashSet::new();
    let mut conc = HashSet::new();
    let mut strip = HashSet::new();
    let mut attaches = Vec::new();
    let mut r_edges = HashSet::new();
    let mut w_edges = HashSet::new();
    for (c, _) in store.constraints() {
        match c {
            Constraint::Proto(v) => {
                proto.insert(*v);
            }
            Constraint::Conc(v) => {
                conc.insert(*v);
            }
            Constraint::Strip(v) => {
                strip.insert(*v);
            }
            Constraint::Attach { base, field, value } => attaches.push((*base, *field, *value)),
            Constraint::SubVV(a, b) => {
                if a.sort == Sort::R && b.sort == Sort::R {
                    r_edges.insert((a.var, b.var));
                } else if a.sort == Sort::W && b.sort == Sort::W {
                    w_edges.insert((a.var, b.var));
                }
            }
            _ => {}
        }
    }
    let rw_pairs: Vec<(TypeVar, TypeVar)> = r_edges
        .iter()
        .filter(|p| w_edges.contains(*p))
        .copied()
        .collect();

    for (c, _) in store.constraints() {
        match c {
            Constraint::SubVL(rv, l) => {
                if on(Rule::Iii) && !in_ub(*rv, *l) {
                    violations.push(format!("rule iii: {l:?} not in ub({rv})"));
                }
            }
            Constraint::SubLV(l, rv) => {
                if on(Rule::Iv) && !in_lb(*rv, *l) {
                    violations.push(format!("rule iv: {l:?} not in lb({rv})"));
                }
            }
            Constraint::SubVV(x, y) => {
                if on(Rule::V) {
                    for l in store.bounds(*x).lb.keys() {
                        if !in_lb(*y, *l) {
                            violations.push(format!("rule v: lb({x}) not within lb({y})"));
                        }
                    }
                    for l in store.bounds(*y).ub.keys() {
                        if !in_ub(*x, *l) {
                            violations.push(format!("rule v: ub({y}) not within ub({x})"));
                        }
                    }
                }
            }
            Constraint::SubVMinus(x, y, fields) if on(Rule::Vi) => {
                for l in store.bounds(*y).ub.keys() {
                    if let Literal::Row(row) = store.lit(*l) {
                        let filtered: BTreeMap<String, TypeVar> = row
                            .iter()
                            .filter(|(f, _)| !fields.contains(f))
                            .map(|(f, v)| (f.clone(), *v))
                            .collect();
                        match store.lookup_lit(&Literal::Row(filtered)) {
                            Some(id) if in_ub(*x, id) => {}
                            _ => violations.push(format!(
                                "rule vi: filtered {l:?} missing from ub({x})"
                            )),
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // (vii) / (viii): bound strengthening closure
    for rv in store.rowvars() {
        for l in store.bounds(rv).lb.keys() {
            if on(Rule::Vii) {
                let t = if store.lit(*l).is_row() {
                    store.lookup_lit(&Literal::empty_row())
                } else {
                    Some(*l)
                };
                match t {
                    Some(t) if in_ub(rv, t) => {}
                    _ => violations.push(format!("rule vii: top of {l:?} missing from ub({rv})")),
                }
            }
        }
        for l in store.bounds(rv).ub.keys() {
            if on(Rule::Viii) {
                let b = if store.lit(*l).is_row() {
                    store.lookup_lit(&Literal::BotRow)
                } else {
                    Some(*l)
                };
                match b {
                    Some(b) if in_lb(rv, b) => {}
                    _ => violations.push(format!("rule viii: bot of {l:?} missing from lb({rv})")),
                }
            }
        }
    }

    // (ix), (x), (xiii): join rules over r/w edge pairs
    for (x, y) in &rw_pairs {
        if on(Rule::Ix) && proto.contains(y) {
            if !proto.contains(x) {
                violations.push(format!("rule ix: proto({x:?}) missing"));
            }
            for sort in [Sort::R, Sort::W, Sort::Mr, Sort::Mw] {
                for c in [
                    Constraint::SubVV(x.sorted(sort), y.sorted(sort)),
                    Constraint::SubVV(y.sorted(sort), x.sorted(sort)),
                ] {
                    if !has(&c) {
                        violations.push(format!("rule ix: missing {c:?}"));
                    }
                }
            }
        }
        if on(Rule::X) && conc.contains(y) && !conc.contains(x) {
            violations.push(format!("rule x: conc({x:?}) missing"));
        }
        if on(Rule::Xiii) && strip.contains(x) && !strip.contains(y) {
            violations.push(format!("rule xiii: strip({y:?}) missing"));
        }
    }

    // (xi)
    if on(Rule::Xi) {
        for v in proto.intersection(&conc) {
            for c in [
                Constraint::SubVV(v.r(), v.mr()),
                Constraint::SubVV(v.w(), v.mw()),
            ] {
                if !has(&c) {
                    violations.push(format!("rule xi: missing {c:?}"));
                }
            }
        }
    }

    // (xii)
    if on(Rule::Xii) {
        for (base, field, value) in &attaches {
            for l in store.bounds(value.r()).ub.keys() {
                if let Literal::Method { recv, .. } = store.lit(*l) {
                    if !proto.contains(base) {
                        violations.push(format!("rule xii: proto({base:?}) missing"));
                    }
                    for c in [
                        Constraint::SubVV(base.mr(), recv.r()),
                        Constraint::SubVV(base.mw(), recv.w()),
                        Constraint::Strip(*field),
                    ] {
                        if !has(&c) {
                            violations.push(format!("rule xii: missing {c:?}"));
                        }
                    }
                }
            }
        }
    }

    // (xiv)-(xvi): equality closure over bounds
    let equated = |a: TypeVar, b: TypeVar| -> bool {
        a == b
            || SORTS.iter().all(|s| {
                has(&Constraint::SubVV(a.sorted(*s), b.sorted(*s)))
                    && has(&Constraint::SubVV(b.sorted(*s), a.sorted(*s)))
            })
    };
    for rv in store.rowvars() {
        let lb_rows: Vec<LitId> = store
            .bounds(rv)
            .lb
            .keys()
            .filter(|l| matches!(store.lit(**l), Literal::Row(_)))
            .copied()
            .collect();
        let ub_rows: Vec<LitId> = store
            .bounds(rv)
            .ub
            .keys()
            .filter(|l| matches!(store.lit(**l), Literal::Row(_)))
            .copied()
            .collect();
        let row_of = |l: LitId| match store.lit(l) {
            Literal::Row(r) => r.clone(),
            _ => unreachable!(),
        };
        if on(Rule::Xiv) {
            for lo in &lb_rows {
                for hi in &ub_rows {
                    let (lo_r, hi_r) = (row_of(*lo), row_of(*hi));
                    for (f, va) in &lo_r {
                        if let Some(vb) = hi_r.get(f) {
                            if !equated(*va, *vb) {
                                violations
                                    .push(format!("rule xiv: {va:?} and {vb:?} not equated"));
                            }
                        }
                    }
                }
            }
        }
        if on(Rule::Xv) {
            for (i, a) in ub_rows.iter().enumerate() {
                for b in &ub_rows[i + 1..] {
                    let (ra, rb) = (row_of(*a), row_of(*b));
                    for (f, va) in &ra {
                        if let Some(vb) = rb.get(f) {
                            if !equated(*va, *vb) {
                                violations.push(format!("rule xv: {va:?} and {vb:?} not equated"));
                            }
                        }
                    }
                }
            }
        }
        if on(Rule::Xvi) {
            let methods: Vec<(TypeVar, TypeVar)> = store
                .bounds(rv)
                .ub
                .keys()
                .filter_map(|l| match store.lit(*l) {
                    Literal::Method { param, ret, .. } => Some((*param, *ret)),
                    _ => None,
                })
                .collect();
            for (i, (p1, r1)) in methods.iter().enumerate() {
                for (p2, r2) in &methods[i + 1..] {
                    if !equated(*p1, *p2) || !equated(*r1, *r2) {
                        violations.push(format!(
                            "rule xvi: method components not equated at {rv}"
                        ));
                    }
                }
            }
            let funs: Vec<(TypeVar, TypeVar)> = store
                .bounds(rv)
                .ub
                .keys()
                .filter_map(|l| match store.lit(*l) {
                    Literal::Fun { param, ret } => Some((*param, *ret)),
                    _ => None,
                })
                .collect();
            for (i, (p1, r1)) in funs.iter().enumerate() {
                for (p2, r2) in &funs[i + 1..] {
                    if !equated(*p1, *p2) || !equated(*r1, *r2) {
                        violations.push(format!(
                            "rule xvi: function components not equated at {rv}"
                        ));
                    }
                }
            }
        }
    }

    violations
}
