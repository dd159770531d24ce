//! Source-level types: rows, object qualifiers, method/function types,
//! and equi-recursive structural subtyping.
//!
//! Subtyping is decided coinductively: recursive binders are unfolded on
//! demand and every pair under examination is assumed on re-encounter.
//! Pairs are keyed by an alpha-canonical form so that renamed binders
//! hit the same assumption.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::rc::Rc;

pub type FieldName = String;
pub type RecName = String;

/// A row: unordered finite map from field names to types. The BTreeMap
/// keeps fields sorted, which makes equality and rendering canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Row(pub BTreeMap<FieldName, Type>);

impl Row {
    pub fn empty() -> Row {
        Row(BTreeMap::new())
    }

    pub fn from_fields(fields: impl IntoIterator<Item = (FieldName, Type)>) -> Row {
        Row(fields.into_iter().collect())
    }

    pub fn get(&self, f: &str) -> Option<&Type> {
        self.0.get(f)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self` with the listed fields removed; absent fields are ignored.
    pub fn without(&self, fields: &BTreeSet<FieldName>) -> Row {
        Row(self
            .0
            .iter()
            .filter(|(f, _)| !fields.contains(*f))
            .map(|(f, t)| (f.clone(), t.clone()))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qualifier {
    /// `P(mr, mw)`: retains the rows of fields that attached methods may
    /// read and write; eligible as a prototype parent.
    Prototypal { mr: Row, mw: Row },
    /// `NC`: non-prototypal concrete, method calls allowed.
    Concrete,
    /// `NA`: non-prototypal abstract, the top of the object region.
    Abstract,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectType {
    pub readable: Row,
    pub writeable: Row,
    pub qual: Qualifier,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Str,
    Object(Rc<ObjectType>),
    /// Unattached method `m(recv, param -> ret)`, still carrying its
    /// receiver type.
    Method {
        recv: Rc<Type>,
        param: Rc<Type>,
        ret: Rc<Type>,
    },
    /// Attached method `m(., param -> ret)` whose receiver has been
    /// erased upon attachment.
    AttachedMethod { param: Rc<Type>, ret: Rc<Type> },
    /// Plain function `fun(param -> ret)`.
    Function { param: Rc<Type>, ret: Rc<Type> },
    /// Equi-recursive binder `mu a. body`. Children are reference
    /// counted so that embedding an already-ascribed type shares
    /// structure instead of copying it.
    Rec { var: RecName, body: Rc<Type> },
    RecVar(RecName),
}

impl Type {
    pub fn object(readable: Row, writeable: Row, qual: Qualifier) -> Type {
        Type::Object(Rc::new(ObjectType { readable, writeable, qual }))
    }

    pub fn method(recv: Type, param: Type, ret: Type) -> Type {
        Type::Method {
            recv: Rc::new(recv),
            param: Rc::new(param),
            ret: Rc::new(ret),
        }
    }

    pub fn attached(param: Type, ret: Type) -> Type {
        Type::AttachedMethod { param: Rc::new(param), ret: Rc::new(ret) }
    }

    pub fn function(param: Type, ret: Type) -> Type {
        Type::Function { param: Rc::new(param), ret: Rc::new(ret) }
    }

    pub fn rec(var: impl Into<RecName>, body: Type) -> Type {
        Type::Rec { var: var.into(), body: Rc::new(body) }
    }

    pub fn is_method(&self) -> bool {
        matches!(self, Type::Method { .. } | Type::AttachedMethod { .. })
    }

    /// True when `name` occurs free in `self`.
    fn mentions_var(&self, name: &str) -> bool {
        match self {
            Type::Int | Type::Str => false,
            Type::RecVar(v) => v == name,
            Type::Rec { var, body } => var != name && body.mentions_var(name),
            Type::Object(obj) => {
                let row_has = |r: &Row| r.0.values().any(|t| t.mentions_var(name));
                row_has(&obj.readable)
                    || row_has(&obj.writeable)
                    || match &obj.qual {
                        Qualifier::Prototypal { mr, mw } => row_has(mr) || row_has(mw),
                        _ => false,
                    }
            }
            Type::Method { recv, param, ret } => {
                recv.mentions_var(name) || param.mentions_var(name) || ret.mentions_var(name)
            }
            Type::AttachedMethod { param, ret } | Type::Function { param, ret } => {
                param.mentions_var(name) || ret.mentions_var(name)
            }
        }
    }

    /// Capture-avoiding substitution of `name` by `replacement`.
    /// Untouched subtrees are shared, not copied.
    pub fn subst(&self, name: &str, replacement: &Type) -> Type {
        if !self.mentions_var(name) {
            return self.clone();
        }
        match self {
            Type::Int | Type::Str => self.clone(),
            Type::RecVar(v) => {
                if v == name {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Type::Rec { var, body } => {
                if var == name {
                    // shadowed; substitution stops here
                    self.clone()
                } else if replacement.free_rec_vars().contains(var) {
                    // rename this binder out of the way first
                    let fresh = fresh_name(var, &{
                        let mut avoid = replacement.free_rec_vars();
                        avoid.extend(body.free_rec_vars());
                        avoid
                    });
                    let renamed = body.subst(var, &Type::RecVar(fresh.clone()));
                    Type::Rec {
                        var: fresh,
                        body: Rc::new(renamed.subst(name, replacement)),
                    }
                } else {
                    Type::Rec {
                        var: var.clone(),
                        body: Rc::new(body.subst(name, replacement)),
                    }
                }
            }
            Type::Object(obj) => Type::object(
                subst_row(&obj.readable, name, replacement),
                subst_row(&obj.writeable, name, replacement),
                match &obj.qual {
                    Qualifier::Prototypal { mr, mw } => Qualifier::Prototypal {
                        mr: subst_row(mr, name, replacement),
                        mw: subst_row(mw, name, replacement),
                    },
                    q => q.clone(),
                },
            ),
            Type::Method { recv, param, ret } => Type::method(
                recv.subst(name, replacement),
                param.subst(name, replacement),
                ret.subst(name, replacement),
            ),
            Type::AttachedMethod { param, ret } => {
                Type::attached(param.subst(name, replacement), ret.subst(name, replacement))
            }
            Type::Function { param, ret } => {
                Type::function(param.subst(name, replacement), ret.subst(name, replacement))
            }
        }
    }

    pub fn free_rec_vars(&self) -> BTreeSet<RecName> {
        let mut out = BTreeSet::new();
        self.free_rec_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_rec_vars_into(&self, bound: &mut Vec<RecName>, out: &mut BTreeSet<RecName>) {
        match self {
            Type::Int | Type::Str => {}
            Type::RecVar(v) => {
                if !bound.iter().any(|b| b == v) {
                    out.insert(v.clone());
                }
            }
            Type::Rec { var, body } => {
                bound.push(var.clone());
                body.free_rec_vars_into(bound, out);
                bound.pop();
            }
            Type::Object(obj) => {
                for t in obj.readable.0.values().chain(obj.writeable.0.values()) {
                    t.free_rec_vars_into(bound, out);
                }
                if let Qualifier::Prototypal { mr, mw } = &obj.qual {
                    for t in mr.0.values().chain(mw.0.values()) {
                        t.free_rec_vars_into(bound, out);
                    }
                }
            }
            Type::Method { recv, param, ret } => {
                recv.free_rec_vars_into(bound, out);
                param.free_rec_vars_into(bound, out);
                ret.free_rec_vars_into(bound, out);
            }
            Type::AttachedMethod { param, ret } | Type::Function { param, ret } => {
                param.free_rec_vars_into(bound, out);
                ret.free_rec_vars_into(bound, out);
            }
        }
    }

    /// True when the type mentions a recursive binder or variable
    /// anywhere; comparisons of binder-free types terminate structurally
    /// and skip the coinductive bookkeeping.
    fn mentions_rec(&self) -> bool {
        match self {
            Type::Int | Type::Str => false,
            Type::Rec { .. } | Type::RecVar(_) => true,
            Type::Object(obj) => {
                let row_has = |r: &Row| r.0.values().any(|t| t.mentions_rec());
                row_has(&obj.readable)
                    || row_has(&obj.writeable)
                    || match &obj.qual {
                        Qualifier::Prototypal { mr, mw } => row_has(mr) || row_has(mw),
                        _ => false,
                    }
            }
            Type::Method { recv, param, ret } => {
                recv.mentions_rec() || param.mentions_rec() || ret.mentions_rec()
            }
            Type::AttachedMethod { param, ret } | Type::Function { param, ret } => {
                param.mentions_rec() || ret.mentions_rec()
            }
        }
    }

    /// Alpha-canonical form: binders renamed to `%0`, `%1`, ... by
    /// binding depth. Free recursion variables keep their names.
    fn canon(&self) -> Type {
        self.canon_at(&mut Vec::new())
    }

    fn canon_at(&self, scope: &mut Vec<(RecName, RecName)>) -> Type {
        // subtrees without recursion are already canonical; share them
        if !self.mentions_rec() {
            return self.clone();
        }
        match self {
            Type::Int | Type::Str => self.clone(),
            Type::RecVar(v) => {
                for (orig, renamed) in scope.iter().rev() {
                    if orig == v {
                        return Type::RecVar(renamed.clone());
                    }
                }
                self.clone()
            }
            Type::Rec { var, body } => {
                let renamed = format!("%{}", scope.len());
                scope.push((var.clone(), renamed.clone()));
                let body = body.canon_at(scope);
                scope.pop();
                Type::Rec { var: renamed, body: Rc::new(body) }
            }
            Type::Object(obj) => Type::object(
                Row(obj
                    .readable
                    .0
                    .iter()
                    .map(|(f, t)| (f.clone(), t.canon_at(scope)))
                    .collect()),
                Row(obj
                    .writeable
                    .0
                    .iter()
                    .map(|(f, t)| (f.clone(), t.canon_at(scope)))
                    .collect()),
                match &obj.qual {
                    Qualifier::Prototypal { mr, mw } => Qualifier::Prototypal {
                        mr: Row(mr.0.iter().map(|(f, t)| (f.clone(), t.canon_at(scope))).collect()),
                        mw: Row(mw.0.iter().map(|(f, t)| (f.clone(), t.canon_at(scope))).collect()),
                    },
                    q => q.clone(),
                },
            ),
            Type::Method { recv, param, ret } => Type::method(
                recv.canon_at(scope),
                param.canon_at(scope),
                ret.canon_at(scope),
            ),
            Type::AttachedMethod { param, ret } => {
                Type::attached(param.canon_at(scope), ret.canon_at(scope))
            }
            Type::Function { param, ret } => {
                Type::function(param.canon_at(scope), ret.canon_at(scope))
            }
        }
    }
}

fn subst_row(row: &Row, name: &str, replacement: &Type) -> Row {
    Row(row
        .0
        .iter()
        .map(|(f, t)| (f.clone(), t.subst(name, replacement)))
        .collect())
}

fn fresh_name(base: &str, avoid: &BTreeSet<RecName>) -> RecName {
    let mut i = 0;
    loop {
        let candidate = format!("{base}'{i}");
        if !avoid.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// One-step unfolding of a recursive binder:
/// `mu a. body  ~>  body[a := mu a. body]`. Non-binders unfold to
/// themselves.
pub fn unfold(t: &Type) -> Type {
    match t {
        Type::Rec { var, body } => body.subst(var, t),
        _ => t.clone(),
    }
}

/// Decides the reflexive-transitive closure of the subtyping rules with
/// equi-recursive unfolding.
pub fn is_subtype(t1: &Type, t2: &Type) -> bool {
    Subtyper::default().sub(t1, t2)
}

/// `t1 <: t2 && t2 <: t1`.
pub fn type_equiv(t1: &Type, t2: &Type) -> bool {
    let mut s = Subtyper::default();
    s.sub(t1, t2) && s.sub(t2, t1)
}

/// Width-only row subtyping: every field of `r2` is in `r1` with an
/// equivalent type.
pub fn row_subtype(r1: &Row, r2: &Row) -> bool {
    Subtyper::default().row_sub(r1, r2)
}

pub fn row_equiv(r1: &Row, r2: &Row) -> bool {
    let mut s = Subtyper::default();
    s.row_sub(r1, r2) && s.row_sub(r2, r1)
}

#[derive(Default)]
struct Subtyper {
    /// Pairs assumed true on re-encounter; the coinductive hypothesis
    /// set. Keys are alpha-canonical.
    assumed: HashSet<(Type, Type)>,
}

impl Subtyper {
    fn sub(&mut self, t1: &Type, t2: &Type) -> bool {
        if t1 == t2 {
            return true;
        }
        // the coinductive hypothesis set is only needed once recursion is
        // in play; binder-free descent shrinks structurally
        if t1.mentions_rec() || t2.mentions_rec() {
            let key = (t1.canon(), t2.canon());
            if key.0 == key.1 {
                return true;
            }
            if !self.assumed.insert(key) {
                return true;
            }
        }

        match (t1, t2) {
            (Type::Rec { .. }, _) => {
                let u = unfold(t1);
                self.sub(&u, t2)
            }
            (_, Type::Rec { .. }) => {
                let u = unfold(t2);
                self.sub(t1, &u)
            }
            (Type::Int, Type::Int) | (Type::Str, Type::Str) => true,
            (Type::Object(o1), Type::Object(o2)) => self.obj_sub(o1, o2),
            // S-Method: an unattached method is a subtype of the attached
            // method with the same signature.
            (
                Type::Method { param: p1, ret: r1, .. },
                Type::AttachedMethod { param: p2, ret: r2 },
            ) => self.equiv(p1, p2) && self.equiv(r1, r2),
            // reflexivity up to component equivalence; no other method,
            // function, or contravariant subtyping
            (
                Type::Method { recv: v1, param: p1, ret: r1 },
                Type::Method { recv: v2, param: p2, ret: r2 },
            ) => self.equiv(v1, v2) && self.equiv(p1, p2) && self.equiv(r1, r2),
            (
                Type::AttachedMethod { param: p1, ret: r1 },
                Type::AttachedMethod { param: p2, ret: r2 },
            )
            | (
                Type::Function { param: p1, ret: r1 },
                Type::Function { param: p2, ret: r2 },
            ) => self.equiv(p1, p2) && self.equiv(r1, r2),
            _ => false,
        }
    }

    fn obj_sub(&mut self, o1: &ObjectType, o2: &ObjectType) -> bool {
        use Qualifier::*;
        match (&o1.qual, &o2.qual) {
            // S-NonProto (plus S-ConcAbs composed with it)
            (Concrete, Concrete) | (Abstract, Abstract) | (Concrete, Abstract) => {
                self.row_sub(&o1.readable, &o2.readable)
                    && self.row_sub(&o1.writeable, &o2.writeable)
            }
            // S-Proto: no subtyping between distinct prototypal types;
            // all four rows must be equivalent.
            (Prototypal { mr: mr1, mw: mw1 }, Prototypal { mr: mr2, mw: mw2 }) => {
                self.row_equiv(&o1.readable, &o2.readable)
                    && self.row_equiv(&o1.writeable, &o2.writeable)
                    && self.row_equiv(mr1, mr2)
                    && self.row_equiv(mw1, mw2)
            }
            // S-ProtoConc then S-NonProto: the source must be concrete
            // (r <: mr, w <: mw) and its base widens to the target.
            (Prototypal { mr, mw }, Concrete) => {
                self.row_sub(&o1.readable, mr)
                    && self.row_sub(&o1.writeable, mw)
                    && self.row_sub(&o1.readable, &o2.readable)
                    && self.row_sub(&o1.writeable, &o2.writeable)
            }
            // S-ProtoAbs then S-NonProto
            (Prototypal { .. }, Abstract) => {
                self.row_sub(&o1.readable, &o2.readable)
                    && self.row_sub(&o1.writeable, &o2.writeable)
            }
            (Concrete, Prototypal { .. })
            | (Abstract, Prototypal { .. })
            | (Abstract, Concrete) => false,
        }
    }

    fn row_sub(&mut self, r1: &Row, r2: &Row) -> bool {
        r2.0.iter().all(|(f, t2)| match r1.get(f) {
            Some(t1) => self.equiv(t1, t2),
            None => false,
        })
    }

    fn row_equiv(&mut self, r1: &Row, r2: &Row) -> bool {
        self.row_sub(r1, r2) && self.row_sub(r2, r1)
    }

    fn equiv(&mut self, t1: &Type, t2: &Type) -> bool {
        self.sub(t1, t2) && self.sub(t2, t1)
    }
}

/// Well-formedness under a set of bound recursion variables.
pub fn is_well_formed(t: &Type, bound: &BTreeSet<RecName>) -> bool {
    match t {
        // WF-NonObject: any non-object, non-variable type
        Type::Int
        | Type::Str
        | Type::Method { .. }
        | Type::AttachedMethod { .. }
        | Type::Function { .. } => true,
        // WF-Var
        Type::RecVar(v) => bound.contains(v),
        // WF-Rec
        Type::Rec { var, body } => {
            let mut inner = bound.clone();
            inner.insert(var.clone());
            is_well_formed(body, &inner)
        }
        Type::Object(obj) => {
            // any writeable field is also readable, with equivalent type
            if !row_subtype(&obj.readable, &obj.writeable) {
                return false;
            }
            if !obj.readable.0.values().all(|t| is_well_formed(t, bound)) {
                return false;
            }
            match &obj.qual {
                Qualifier::Concrete | Qualifier::Abstract => true,
                Qualifier::Prototypal { mr, mw } => {
                    // method-writeable fields are method-readable, field
                    // types are well formed, and mr agrees with r on
                    // every shared field
                    row_subtype(mr, mw)
                        && mr.0.values().all(|t| is_well_formed(t, bound))
                        && mr.0.iter().all(|(f, mt)| match obj.readable.get(f) {
                            Some(rt) => type_equiv(mt, rt),
                            None => true,
                        })
                }
            }
        }
    }
}

/// A resolved bound element: rows live beside non-object types in the
/// value domain of row variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Comp {
    /// Bottom of the row lattice; only ever appears in lower bounds.
    Bot,
    Row(Row),
    Ty(Type),
}

impl Comp {
    pub fn as_row(&self) -> Option<&Row> {
        match self {
            Comp::Row(r) => Some(r),
            _ => None,
        }
    }
}

/// `lhs <: rhs` on resolved components.
pub fn comp_subtype(lhs: &Comp, rhs: &Comp) -> bool {
    match (lhs, rhs) {
        (Comp::Bot, Comp::Bot) | (Comp::Bot, Comp::Row(_)) => true,
        (Comp::Row(r1), Comp::Row(r2)) => row_subtype(r1, r2),
        (Comp::Ty(t1), Comp::Ty(t2)) => is_subtype(t1, t2),
        _ => false,
    }
}

pub fn comp_equiv(lhs: &Comp, rhs: &Comp) -> bool {
    comp_subtype(lhs, rhs) && comp_subtype(rhs, lhs)
}

/// Greatest lower bound over the row semi-lattice (excluding bottom) and
/// the discrete non-object types. Returns the conflicting pair when no
/// glb exists.
pub fn glb(comps: &[Comp]) -> Result<Comp, (Comp, Comp)> {
    assert!(!comps.is_empty(), "glb of an empty set");
    let mut acc = comps[0].clone();
    for next in &comps[1..] {
        match glb2(&acc, next) {
            Some(merged) => acc = merged,
            None => {
                // report a conflicting pair of original inputs where
                // possible, not the partially merged accumulator
                for earlier in comps {
                    if std::ptr::eq(earlier, next) {
                        break;
                    }
                    if glb2(earlier, next).is_none() {
                        return Err((earlier.clone(), next.clone()));
                    }
                }
                return Err((acc, next.clone()));
            }
        }
    }
    Ok(acc)
}

fn glb2(a: &Comp, b: &Comp) -> Option<Comp> {
    match (a, b) {
        (Comp::Bot, _) | (_, Comp::Bot) => {
            // propagation never places bottom in an upper bound
            panic!("bottom row in glb input");
        }
        (Comp::Row(r1), Comp::Row(r2)) => {
            let mut merged = r1.0.clone();
            for (f, t2) in &r2.0 {
                match merged.get(f) {
                    Some(t1) => {
                        if !type_equiv(t1, t2) {
                            return None;
                        }
                    }
                    None => {
                        merged.insert(f.clone(), t2.clone());
                    }
                }
            }
            Some(Comp::Row(Row(merged)))
        }
        (Comp::Ty(t1), Comp::Ty(t2)) => glb_ty(t1, t2).map(Comp::Ty),
        _ => None,
    }
}

fn glb_ty(t1: &Type, t2: &Type) -> Option<Type> {
    match (t1, t2) {
        // a mixed attached/unattached pair of equal signature meets at
        // the unattached method, per S-Method
        (Type::Method { param, ret, .. }, Type::AttachedMethod { param: p2, ret: r2 })
            if type_equiv(param, p2) && type_equiv(ret, r2) =>
        {
            Some(t1.clone())
        }
        (Type::AttachedMethod { param: p1, ret: r1 }, Type::Method { param, ret, .. })
            if type_equiv(p1, param) && type_equiv(r1, ret) =>
        {
            Some(t2.clone())
        }
        _ => {
            if type_equiv(t1, t2) {
                Some(t1.clone())
            } else {
                None
            }
        }
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, (name, t)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}: {t}")?;
        }
        write!(f, ">")
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Str => write!(f, "str"),
            Type::Object(obj) => {
                write!(f, "[{}|{}]^", obj.readable, obj.writeable)?;
                match &obj.qual {
                    Qualifier::Prototypal { mr, mw } => write!(f, "P({mr},{mw})"),
                    Qualifier::Concrete => write!(f, "NC"),
                    Qualifier::Abstract => write!(f, "NA"),
                }
            }
            Type::Method { recv, param, ret } => write!(f, "m({recv}, {param} -> {ret})"),
            Type::AttachedMethod { param, ret } => write!(f, "m(., {param} -> {ret})"),
            Type::Function { param, ret } => write!(f, "fun({param} -> {ret})"),
            Type::Rec { var, body } => write!(f, "mu {var}. {body}"),
            Type::RecVar(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comp::Bot => write!(f, "_|_row"),
            Comp::Row(r) => write!(f, "{r}"),
            Comp::Ty(t) => write!(f, "{t}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(fields: &[(&str, Type)]) -> Row {
        Row::from_fields(fields.iter().map(|(f, t)| (f.to_string(), t.clone())))
    }

    fn m_attached_int_int() -> Type {
        Type::attached(Type::Int, Type::Int)
    }

    /// The example program's o2 type:
    /// [<d:int, m:M, a:int> | <a:int>]^P(<d:int,a:int>, <a:int>)
    fn o2_type() -> Type {
        Type::object(
            row(&[("d", Type::Int), ("m", m_attached_int_int()), ("a", Type::Int)]),
            row(&[("a", Type::Int)]),
            Qualifier::Prototypal {
                mr: row(&[("d", Type::Int), ("a", Type::Int)]),
                mw: row(&[("a", Type::Int)]),
            },
        )
    }

    /// o3: [<d,m,a,b> | <b>]^P(<d,a>, <a>)
    fn o3_type() -> Type {
        Type::object(
            row(&[
                ("d", Type::Int),
                ("m", m_attached_int_int()),
                ("a", Type::Int),
                ("b", Type::Int),
            ]),
            row(&[("b", Type::Int)]),
            Qualifier::Prototypal {
                mr: row(&[("d", Type::Int), ("a", Type::Int)]),
                mw: row(&[("a", Type::Int)]),
            },
        )
    }

    #[test]
    fn concrete_prototypal_converts_to_nc() {
        // o2's conversion to NC is allowed: w = <a> is contained in mw = <a>
        let o2 = o2_type();
        let nc = Type::object(
            row(&[("d", Type::Int), ("m", m_attached_int_int()), ("a", Type::Int)]),
            row(&[("a", Type::Int)]),
            Qualifier::Concrete,
        );
        assert!(is_subtype(&o2, &nc));
    }

    #[test]
    fn abstract_prototypal_does_not_convert_to_nc() {
        // o3's w = <b> lacks a, so w <: mw fails and the conversion is rejected
        let o3 = o3_type();
        let nc = Type::object(
            row(&[
                ("d", Type::Int),
                ("m", m_attached_int_int()),
                ("a", Type::Int),
                ("b", Type::Int),
            ]),
            row(&[("b", Type::Int)]),
            Qualifier::Concrete,
        );
        assert!(!is_subtype(&o3, &nc));
    }

    #[test]
    fn reflexivity() {
        for t in [Type::Int, Type::Str, o2_type(), o3_type(), m_attached_int_int()] {
            assert!(is_subtype(&t, &t));
        }
    }

    #[test]
    fn proto_abs_then_nonproto_width() {
        // [<d:int>|<d:int>]^P(<>,<>) <: [<d:int>|<>]^NA
        let o4 = Type::object(
            row(&[("d", Type::Int)]),
            row(&[("d", Type::Int)]),
            Qualifier::Prototypal { mr: Row::empty(), mw: Row::empty() },
        );
        let target = Type::object(row(&[("d", Type::Int)]), Row::empty(), Qualifier::Abstract);
        assert!(is_subtype(&o4, &target));
        // and o3 reaches the same NA type despite being abstract
        assert!(is_subtype(&o3_type(), &target));
    }

    #[test]
    fn row_reordering_is_equivalence() {
        let a = Type::object(
            row(&[("a", Type::Int), ("b", Type::Str)]),
            Row::empty(),
            Qualifier::Abstract,
        );
        let b = Type::object(
            row(&[("b", Type::Str), ("a", Type::Int)]),
            Row::empty(),
            Qualifier::Abstract,
        );
        assert!(type_equiv(&a, &b));
    }

    #[test]
    fn base_types_are_distinct() {
        assert!(!type_equiv(&Type::Int, &Type::Str));
        assert!(!is_subtype(&Type::Int, &Type::Str));
        assert!(!is_subtype(&Type::Str, &Type::Int));
    }

    #[test]
    fn no_depth_subtyping() {
        // shared field with non-equivalent types is not width subtyping
        let narrow = Type::object(row(&[("a", Type::Int)]), Row::empty(), Qualifier::Abstract);
        let wide = Type::object(
            row(&[("a", Type::Str), ("b", Type::Int)]),
            Row::empty(),
            Qualifier::Abstract,
        );
        assert!(!is_subtype(&wide, &narrow));
    }

    #[test]
    fn distinct_prototypal_types_unrelated() {
        let a = Type::object(
            row(&[("a", Type::Int)]),
            row(&[("a", Type::Int)]),
            Qualifier::Prototypal { mr: Row::empty(), mw: Row::empty() },
        );
        let b = Type::object(
            row(&[("a", Type::Int), ("b", Type::Int)]),
            row(&[("a", Type::Int)]),
            Qualifier::Prototypal { mr: Row::empty(), mw: Row::empty() },
        );
        assert!(!is_subtype(&a, &b));
        assert!(!is_subtype(&b, &a));
        assert!(is_subtype(&a, &a));
    }

    #[test]
    fn method_subtyping_only_strips_receivers() {
        let recv = Type::object(row(&[("f", Type::Int)]), Row::empty(), Qualifier::Concrete);
        let unattached = Type::method(recv, Type::Int, Type::Int);
        let attached = m_attached_int_int();
        assert!(is_subtype(&unattached, &attached));
        assert!(!is_subtype(&attached, &unattached));
        // no contravariant function subtyping
        let f1 = Type::function(Type::Int, Type::Int);
        let f2 = Type::function(Type::Str, Type::Int);
        assert!(!is_subtype(&f1, &f2));
        assert!(!is_subtype(&f2, &f1));
    }

    fn list_type() -> Type {
        // mu a. [<next: a>|<next: a>]^NA
        Type::rec(
            "a",
            Type::object(
                row(&[("next", Type::RecVar("a".into()))]),
                row(&[("next", Type::RecVar("a".into()))]),
                Qualifier::Abstract,
            ),
        )
    }

    #[test]
    fn unfold_is_equivalent_to_binder() {
        let t = list_type();
        let u = unfold(&t);
        assert!(matches!(u, Type::Object(_)));
        assert!(is_subtype(&t, &u));
        assert!(is_subtype(&u, &t));
        assert!(type_equiv(&t, &u));
    }

    #[test]
    fn unused_binder_unfolds_to_body() {
        let t = Type::rec("a", Type::Int);
        assert_eq!(unfold(&t), Type::Int);
        assert!(type_equiv(&t, &Type::Int));
    }

    #[test]
    fn alpha_renaming_is_equivalence() {
        let t1 = list_type();
        let t2 = Type::rec(
            "b",
            Type::object(
                row(&[("next", Type::RecVar("b".into()))]),
                row(&[("next", Type::RecVar("b".into()))]),
                Qualifier::Abstract,
            ),
        );
        assert!(type_equiv(&t1, &t2));
    }

    #[test]
    fn recursive_width_subtyping_through_unfolding() {
        // mu a.[<next:a, v:int>|<>]^NA  <:  [<next: mu a...>|<>]^NA (wider row unfolds)
        let t = Type::rec(
            "a",
            Type::object(
                row(&[("next", Type::RecVar("a".into())), ("v", Type::Int)]),
                Row::empty(),
                Qualifier::Abstract,
            ),
        );
        let target = Type::object(
            row(&[("next", t.clone())]),
            Row::empty(),
            Qualifier::Abstract,
        );
        assert!(is_subtype(&t, &target));
    }

    #[test]
    fn well_formedness_rules() {
        let empty = BTreeSet::new();
        // o1's type from the running example
        let o1 = Type::object(
            row(&[("d", Type::Int), ("m", m_attached_int_int())]),
            row(&[("d", Type::Int), ("m", m_attached_int_int())]),
            Qualifier::Prototypal {
                mr: row(&[("d", Type::Int), ("a", Type::Int)]),
                mw: row(&[("a", Type::Int)]),
            },
        );
        assert!(is_well_formed(&o1, &empty));

        // writeable field that is not readable
        let bad_w = Type::object(Row::empty(), row(&[("a", Type::Int)]), Qualifier::Concrete);
        assert!(!is_well_formed(&bad_w, &empty));

        // mr and r disagree on a shared field's type
        let bad_agree = Type::object(
            row(&[("a", Type::Int)]),
            Row::empty(),
            Qualifier::Prototypal { mr: row(&[("a", Type::Str)]), mw: Row::empty() },
        );
        assert!(!is_well_formed(&bad_agree, &empty));

        // unbound recursion variable
        assert!(!is_well_formed(&Type::RecVar("a".into()), &empty));
        assert!(is_well_formed(&list_type(), &empty));
    }

    #[test]
    fn glb_examples() {
        // glb({<a:int>, <b:str>}) = <a:int, b:str>
        let got = glb(&[
            Comp::Row(row(&[("a", Type::Int)])),
            Comp::Row(row(&[("b", Type::Str)])),
        ])
        .unwrap();
        assert_eq!(got, Comp::Row(row(&[("a", Type::Int), ("b", Type::Str)])));

        // glb({<a:int>, <a:str>}) is undefined
        assert!(glb(&[
            Comp::Row(row(&[("a", Type::Int)])),
            Comp::Row(row(&[("a", Type::Str)])),
        ])
        .is_err());

        // singleton
        let single = Comp::Row(row(&[("a", Type::Int)]));
        assert_eq!(glb(std::slice::from_ref(&single)).unwrap(), single);

        // mixed kinds
        assert!(glb(&[Comp::Ty(Type::Int), Comp::Row(Row::empty())]).is_err());

        // attached/unattached methods of one signature meet at the
        // unattached one
        let recv = Type::object(Row::empty(), Row::empty(), Qualifier::Concrete);
        let unattached = Type::method(recv, Type::Int, Type::Int);
        let got = glb(&[Comp::Ty(unattached.clone()), Comp::Ty(m_attached_int_int())]).unwrap();
        assert_eq!(got, Comp::Ty(unattached));
    }

    #[test]
    fn row_without_examples() {
        let r = row(&[("a", Type::Int), ("b", Type::Str)]);
        let mut fs = BTreeSet::new();
        fs.insert("a".to_string());
        assert_eq!(r.without(&fs), row(&[("b", Type::Str)]));
        assert_eq!(Row::empty().without(&fs), Row::empty());
        fs.insert("b".to_string());
        assert_eq!(row(&[("a", Type::Int)]).without(&fs), Row::empty());
    }

    #[test]
    fn sampled_width_subtyping_on_nonprototypal_objects() {
        // dropping readable fields (keeping writeables readable) gives a
        // supertype under the same NC/NA qualifier
        let mut rng = crate::sample::rng(41);
        for _ in 0..300 {
            let t = crate::sample::sample_object(&mut rng, 1);
            let obj = match &t {
                Type::Object(o) => o,
                _ => unreachable!(),
            };
            if matches!(obj.qual, Qualifier::Prototypal { .. }) {
                continue;
            }
            let mut wider = obj.readable.0.clone();
            wider.insert("zz".into(), Type::Int);
            let sub = Type::object(Row(wider), obj.writeable.clone(), obj.qual.clone());
            assert!(is_subtype(&sub, &t), "{sub} </: {t}");
            // and a shared field with a different type breaks it
            if let Some(f) = obj.readable.0.keys().next().cloned() {
                let mut depth = obj.readable.0.clone();
                let flipped = match depth[&f] {
                    Type::Int => Type::Str,
                    _ => Type::Int,
                };
                depth.insert(f, flipped);
                let bad = Type::object(Row(depth), Row::empty(), Qualifier::Abstract);
                let target = Type::object(obj.readable.clone(), Row::empty(), Qualifier::Abstract);
                assert!(!is_subtype(&bad, &target));
            }
        }
    }

    #[test]
    fn sampled_prototypal_types_relate_only_when_rows_equivalent() {
        let mut rng = crate::sample::rng(43);
        for _ in 0..500 {
            let (t1, t2) = (
                crate::sample::sample_object(&mut rng, 1),
                crate::sample::sample_object(&mut rng, 1),
            );
            let (o1, o2) = match (&t1, &t2) {
                (Type::Object(a), Type::Object(b)) => (a, b),
                _ => unreachable!(),
            };
            let (mr1, mw1, mr2, mw2) = match (&o1.qual, &o2.qual) {
                (
                    Qualifier::Prototypal { mr: a, mw: b },
                    Qualifier::Prototypal { mr: c, mw: d },
                ) => (a, b, c, d),
                _ => continue,
            };
            let all_equiv = row_equiv(&o1.readable, &o2.readable)
                && row_equiv(&o1.writeable, &o2.writeable)
                && row_equiv(mr1, mr2)
                && row_equiv(mw1, mw2);
            assert_eq!(is_subtype(&t1, &t2), all_equiv, "{t1} vs {t2}");
            // and every prototypal type relates to itself
            assert!(is_subtype(&t1, &t1));
        }
    }

    #[test]
    fn rendering_matches_notation() {
        assert_eq!(o2_type().to_string(),
            "[<a: int, d: int, m: m(., int -> int)>|<a: int>]^P(<a: int, d: int>,<a: int>)");
        assert_eq!(list_type().to_string(), "mu a. [<next: a>|<next: a>]^NA");
        assert_eq!(Type::function(Type::Int, Type::Str).to_string(), "fun(int -> str)");
    }
}
