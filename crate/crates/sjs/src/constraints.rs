//! The constraint language: type variables, their five row variables,
//! interned literals, subtype/qualifier constraints, and the growing
//! store the solver works on.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use indexmap::{IndexMap, IndexSet};

use crate::span::Span;

/// An inference variable standing for a source-level type.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVar(pub u32);

impl fmt::Debug for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// The five row-variable sorts attached to every type variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sort {
    R,
    W,
    Mr,
    Mw,
    All,
}

pub const SORTS: [Sort; 5] = [Sort::R, Sort::W, Sort::Mr, Sort::Mw, Sort::All];

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::R => "r",
            Sort::W => "w",
            Sort::Mr => "mr",
            Sort::Mw => "mw",
            Sort::All => "all",
        };
        write!(f, "{s}")
    }
}

impl Sort {
    fn index(self) -> usize {
        match self {
            Sort::R => 0,
            Sort::W => 1,
            Sort::Mr => 2,
            Sort::Mw => 3,
            Sort::All => 4,
        }
    }
}

/// One of the five row variables of a type variable; identity is the
/// pair (base, sort).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowVar {
    pub var: TypeVar,
    pub sort: Sort,
}

impl RowVar {
    pub fn new(var: TypeVar, sort: Sort) -> RowVar {
        RowVar { var, sort }
    }
}

impl fmt::Display for RowVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.var, self.sort)
    }
}

impl fmt::Debug for RowVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl TypeVar {
    pub fn r(self) -> RowVar {
        RowVar::new(self, Sort::R)
    }
    pub fn w(self) -> RowVar {
        RowVar::new(self, Sort::W)
    }
    pub fn mr(self) -> RowVar {
        RowVar::new(self, Sort::Mr)
    }
    pub fn mw(self) -> RowVar {
        RowVar::new(self, Sort::Mw)
    }
    pub fn all(self) -> RowVar {
        RowVar::new(self, Sort::All)
    }
    pub fn sorted(self, sort: Sort) -> RowVar {
        RowVar::new(self, sort)
    }
}

/// Interned literal id; structurally equal literals share one id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LitId(pub u32);

impl fmt::Debug for LitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// A type literal of the constraint language. Row fields and method and
/// function components point at type variables, never at nested
/// literals.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Literal {
    Int,
    Str,
    /// Bottom of the row lattice; completes the lattice for bound
    /// strengthening.
    BotRow,
    Row(std::collections::BTreeMap<String, TypeVar>),
    /// Unattached method `m(recv, param -> ret)`. Attached methods only
    /// arise at ascription via strip.
    Method { recv: TypeVar, param: TypeVar, ret: TypeVar },
    Fun { param: TypeVar, ret: TypeVar },
}

impl Literal {
    pub fn row(fields: impl IntoIterator<Item = (String, TypeVar)>) -> Literal {
        Literal::Row(fields.into_iter().collect())
    }

    pub fn empty_row() -> Literal {
        Literal::Row(Default::default())
    }

    pub fn is_row(&self) -> bool {
        matches!(self, Literal::Row(_) | Literal::BotRow)
    }

    /// Type variables mentioned by this literal.
    pub fn vars(&self) -> Vec<TypeVar> {
        match self {
            Literal::Int | Literal::Str | Literal::BotRow => vec![],
            Literal::Row(fields) => fields.values().copied().collect(),
            Literal::Method { recv, param, ret } => vec![*recv, *param, *ret],
            Literal::Fun { param, ret } => vec![*param, *ret],
        }
    }
}

/// One clause of the constraint language, including the two acceptance
/// criteria checked at ascription time.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Constraint {
    /// `L <: X^s`
    SubLV(LitId, RowVar),
    /// `X^s <: L`
    SubVL(RowVar, LitId),
    /// `X^s <: Y^t`
    SubVV(RowVar, RowVar),
    /// `X^s <: Y^t \ {a1,...,an}` — fields sorted for canonical identity.
    SubVMinus(RowVar, RowVar, Vec<String>),
    Proto(TypeVar),
    Conc(TypeVar),
    Strip(TypeVar),
    /// `attach(Xb, Xf, Xv)` for a field assignment: base object, field,
    /// assigned value.
    Attach { base: TypeVar, field: TypeVar, value: TypeVar },
    NotMethod(TypeVar),
    NotProto(TypeVar),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Lb,
    Ub,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Lb => write!(f, "lb"),
            Side::Ub => write!(f, "ub"),
        }
    }
}

/// Lower/upper bound sets of one row variable. Grow-only; each literal
/// remembers the span it arrived with, for blame in diagnostics.
#[derive(Clone, Default, Debug)]
pub struct Bounds {
    pub lb: IndexMap<LitId, Span>,
    pub ub: IndexMap<LitId, Span>,
}

impl Bounds {
    pub fn side(&self, side: Side) -> &IndexMap<LitId, Span> {
        match side {
            Side::Lb => &self.lb,
            Side::Ub => &self.ub,
        }
    }
}

/// Where a type variable came from, for diagnostics.
#[derive(Clone, Debug)]
pub struct Origin {
    pub span: Span,
    pub what: String,
}

/// Work items for the solver: newly inserted constraints and newly
/// inserted bound literals.
#[derive(Clone, Debug)]
pub enum Event {
    Constraint(usize),
    Bound(RowVar, Side, LitId),
}

/// The constraint store: the growing set C' plus bounds and the pending
/// event queue. One store per inference run, single writer.
#[derive(Default)]
pub struct ConstraintStore {
    origins: Vec<Origin>,
    literals: IndexSet<Literal>,
    /// Insertion-ordered constraint set; the span is the source position
    /// blamed for the constraint (first insertion wins).
    constraints: IndexMap<Constraint, Span>,
    bounds: Vec<Bounds>,
    pub(crate) queue: VecDeque<Event>,
}

impl ConstraintStore {
    pub fn new() -> ConstraintStore {
        ConstraintStore::default()
    }

    /// Create a type variable together with its five row variables and
    /// the standing well-formedness constraints
    /// `X^all <: X^r <: X^w` and `X^all <: X^mr <: X^mw`.
    pub fn fresh_typevar(&mut self, span: Span, what: impl Into<String>) -> TypeVar {
        let var = TypeVar(self.origins.len() as u32);
        self.origins.push(Origin { span, what: what.into() });
        for _ in 0..5 {
            self.bounds.push(Bounds::default());
        }
        self.add(Constraint::SubVV(var.all(), var.r()), span);
        self.add(Constraint::SubVV(var.r(), var.w()), span);
        self.add(Constraint::SubVV(var.all(), var.mr()), span);
        self.add(Constraint::SubVV(var.mr(), var.mw()), span);
        var
    }

    pub fn num_typevars(&self) -> usize {
        self.origins.len()
    }

    pub fn typevars(&self) -> impl Iterator<Item = TypeVar> {
        (0..self.origins.len() as u32).map(TypeVar)
    }

    pub fn rowvars(&self) -> impl Iterator<Item = RowVar> + '_ {
        self.typevars()
            .flat_map(|v| SORTS.iter().map(move |s| v.sorted(*s)))
    }

    pub fn origin(&self, var: TypeVar) -> &Origin {
        &self.origins[var.0 as usize]
    }

    /// Idempotent set insert; returns true iff the constraint is new.
    /// New constraints are queued for the solver.
    pub fn add(&mut self, c: Constraint, span: Span) -> bool {
        debug_assert!(self.constraint_vars_exist(&c));
        if self.constraints.contains_key(&c) {
            return false;
        }
        let idx = self.constraints.len();
        self.constraints.insert(c, span);
        self.queue.push_back(Event::Constraint(idx));
        true
    }

    fn constraint_vars_exist(&self, c: &Constraint) -> bool {
        let n = self.origins.len() as u32;
        let ok = |v: TypeVar| v.0 < n;
        match c {
            Constraint::SubLV(_, rv) | Constraint::SubVL(rv, _) => ok(rv.var),
            Constraint::SubVV(a, b) | Constraint::SubVMinus(a, b, _) => ok(a.var) && ok(b.var),
            Constraint::Proto(v)
            | Constraint::Conc(v)
            | Constraint::Strip(v)
            | Constraint::NotMethod(v)
            | Constraint::NotProto(v) => ok(*v),
            Constraint::Attach { base, field, value } => ok(*base) && ok(*field) && ok(*value),
        }
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        self.constraints.contains_key(c)
    }

    pub fn constraint_span(&self, c: &Constraint) -> Option<Span> {
        self.constraints.get(c).copied()
    }

    pub fn constraints(&self) -> impl Iterator<Item = (&Constraint, Span)> {
        self.constraints.iter().map(|(c, s)| (c, *s))
    }

    pub fn constraint_at(&self, idx: usize) -> (&Constraint, Span) {
        let (c, s) = self.constraints.get_index(idx).expect("constraint index");
        (c, *s)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn intern(&mut self, lit: Literal) -> LitId {
        let (idx, _) = self.literals.insert_full(lit);
        LitId(idx as u32)
    }

    pub fn lookup_lit(&self, lit: &Literal) -> Option<LitId> {
        self.literals.get_index_of(lit).map(|i| LitId(i as u32))
    }

    pub fn lit(&self, id: LitId) -> &Literal {
        self.literals
            .get_index(id.0 as usize)
            .expect("literal id out of range")
    }

    pub fn num_literals(&self) -> usize {
        self.literals.len()
    }

    pub fn bounds(&self, rv: RowVar) -> &Bounds {
        &self.bounds[rv.var.0 as usize * 5 + rv.sort.index()]
    }

    /// Grow-only bound insert; returns true (and queues an event) iff the
    /// literal was not already present on that side.
    pub fn insert_bound(&mut self, rv: RowVar, side: Side, lit: LitId, span: Span) -> bool {
        let b = &mut self.bounds[rv.var.0 as usize * 5 + rv.sort.index()];
        let map = match side {
            Side::Lb => &mut b.lb,
            Side::Ub => &mut b.ub,
        };
        if map.contains_key(&lit) {
            return false;
        }
        map.insert(lit, span);
        self.queue.push_back(Event::Bound(rv, side, lit));
        true
    }

    /// Total number of bound entries across all row variables.
    pub fn bound_entries(&self) -> usize {
        self.bounds.iter().map(|b| b.lb.len() + b.ub.len()).sum()
    }

    /// Human-readable label for a row variable, using its origin.
    pub fn describe(&self, rv: RowVar) -> String {
        let o = self.origin(rv.var);
        format!("{} ({})", rv, o.what)
    }

    /// DOT rendering of the subtype constraints: one node per row
    /// variable and per literal, one edge per Sub* constraint, minus
    /// edges labeled with the removed fields.
    pub fn to_dot(&self, render_lit: impl Fn(&Literal) -> String) -> String {
        use std::fmt::Write;
        let mut used_vars: BTreeSet<RowVar> = BTreeSet::new();
        let mut used_lits: BTreeSet<LitId> = BTreeSet::new();
        let mut edges: Vec<String> = Vec::new();
        for (c, _) in self.constraints.iter() {
            match c {
                Constraint::SubLV(l, rv) => {
                    used_lits.insert(*l);
                    used_vars.insert(*rv);
                    edges.push(format!("lit{} -> \"{}\"", l.0, rv));
                }
                Constraint::SubVL(rv, l) => {
                    used_lits.insert(*l);
                    used_vars.insert(*rv);
                    edges.push(format!("\"{}\" -> lit{}", rv, l.0));
                }
                Constraint::SubVV(a, b) => {
                    used_vars.insert(*a);
                    used_vars.insert(*b);
                    edges.push(format!("\"{a}\" -> \"{b}\""));
                }
                Constraint::SubVMinus(a, b, fields) => {
                    used_vars.insert(*a);
                    used_vars.insert(*b);
                    edges.push(format!(
                        "\"{a}\" -> \"{b}\" [label=\"\\\\{{{}}}\"]",
                        fields.join(",")
                    ));
                }
                _ => {}
            }
        }
        let mut out = String::from("digraph constraints {\n");
        for rv in used_vars {
            let _ = writeln!(
                out,
                "  \"{}\" [shape=ellipse, tooltip=\"{}\"];",
                rv,
                self.origin(rv.var).what.replace('"', "'")
            );
        }
        for l in used_lits {
            let _ = writeln!(
                out,
                "  lit{} [shape=box, label=\"{}\"];",
                l.0,
                render_lit(self.lit(l)).replace('"', "'")
            );
        }
        for e in edges {
            let _ = writeln!(out, "  {e};");
        }
        out.push_str("}\n");
        out
    }

    /// Subtype edges as (from, to, label) triples; used by tests to
    /// compare pre/post propagation graphs.
    pub fn edge_set(&self) -> BTreeSet<(String, String, String)> {
        let mut out = BTreeSet::new();
        for (c, _) in self.constraints.iter() {
            match c {
                Constraint::SubLV(l, rv) => {
                    out.insert((format!("L{}", l.0), rv.to_string(), String::new()));
                }
                Constraint::SubVL(rv, l) => {
                    out.insert((rv.to_string(), format!("L{}", l.0), String::new()));
                }
                Constraint::SubVV(a, b) => {
                    out.insert((a.to_string(), b.to_string(), String::new()));
                }
                Constraint::SubVMinus(a, b, fields) => {
                    out.insert((a.to_string(), b.to_string(), fields.join(",")));
                }
                _ => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> Span {
        Span::synthetic()
    }

    #[test]
    fn fresh_typevars_are_distinct() {
        let mut store = ConstraintStore::new();
        let a = store.fresh_typevar(sp(), "a");
        let b = store.fresh_typevar(sp(), "b");
        assert_ne!(a, b);
    }

    #[test]
    fn fresh_installs_well_formedness_constraints() {
        let mut store = ConstraintStore::new();
        let x = store.fresh_typevar(sp(), "x");
        for c in [
            Constraint::SubVV(x.all(), x.r()),
            Constraint::SubVV(x.r(), x.w()),
            Constraint::SubVV(x.all(), x.mr()),
            Constraint::SubVV(x.mr(), x.mw()),
        ] {
            assert!(store.contains(&c), "missing {c:?}");
        }
    }

    #[test]
    fn origin_recorded_verbatim() {
        let mut store = ConstraintStore::new();
        let span = Span::new(3, 9, 1, 4);
        let x = store.fresh_typevar(span, "the variable `v1`");
        assert_eq!(store.origin(x).what, "the variable `v1`");
        assert_eq!(store.origin(x).span, span);
    }

    #[test]
    fn add_is_idempotent() {
        let mut store = ConstraintStore::new();
        let x = store.fresh_typevar(sp(), "x");
        let y = store.fresh_typevar(sp(), "y");
        let c = Constraint::SubVV(x.r(), y.r());
        assert!(store.add(c.clone(), sp()));
        assert!(!store.add(c, sp()));
    }

    #[test]
    fn add_queues_an_event() {
        let mut store = ConstraintStore::new();
        let x = store.fresh_typevar(sp(), "x");
        let y = store.fresh_typevar(sp(), "y");
        store.queue.clear();
        store.add(Constraint::SubVV(x.r(), y.r()), sp());
        assert_eq!(store.queue.len(), 1);
        assert!(matches!(store.queue[0], Event::Constraint(_)));
    }

    #[test]
    fn literals_are_interned() {
        let mut store = ConstraintStore::new();
        let x = store.fresh_typevar(sp(), "x");
        let a = store.intern(Literal::row([("f".to_string(), x)]));
        let b = store.intern(Literal::row([("f".to_string(), x)]));
        assert_eq!(a, b);
        assert_ne!(store.intern(Literal::Int), a);
    }

    #[test]
    fn store_size_is_monotone_under_random_ops() {
        // property: any interleaving of adds never shrinks the store
        let mut store = ConstraintStore::new();
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut vars = vec![store.fresh_typevar(sp(), "seed")];
        let mut prev = store.num_constraints();
        for i in 0..500 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let choice = (seed >> 33) % 4;
            match choice {
                0 => vars.push(store.fresh_typevar(sp(), format!("v{i}"))),
                1 => {
                    let a = vars[(seed >> 8) as usize % vars.len()];
                    let b = vars[(seed >> 16) as usize % vars.len()];
                    store.add(Constraint::SubVV(a.r(), b.r()), sp());
                }
                2 => {
                    let a = vars[(seed >> 8) as usize % vars.len()];
                    store.add(Constraint::Proto(a), sp());
                }
                _ => {
                    let a = vars[(seed >> 8) as usize % vars.len()];
                    let lit = store.intern(Literal::Int);
                    store.add(Constraint::SubVL(a.r(), lit), sp());
                }
            }
            let now = store.num_constraints();
            assert!(now >= prev);
            prev = now;
        }
    }
}
