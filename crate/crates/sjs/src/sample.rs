//! Seeded random generators over the type grammar, used by the property
//! suites: well-formed type sampling and subtype-preserving weakening.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::types::{Qualifier, Row, Type};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FIELDS: [&str; 3] = ["a", "b", "c"];

/// A random well-formed type of bounded depth.
pub fn sample_type(rng: &mut ChaCha8Rng, depth: u32) -> Type {
    let choice = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..10) };
    match choice {
        0 => Type::Int,
        1 => Type::Str,
        2..=5 => sample_object(rng, depth - 1),
        6 => Type::attached(sample_type(rng, depth - 1), sample_type(rng, depth - 1)),
        7 => Type::method(
            sample_object(rng, depth - 1),
            sample_type(rng, depth - 1),
            sample_type(rng, depth - 1),
        ),
        8 => Type::function(sample_type(rng, depth - 1), sample_type(rng, depth - 1)),
        _ => sample_rec(rng, depth - 1),
    }
}

fn sample_row(rng: &mut ChaCha8Rng, depth: u32, allow_var: Option<&str>) -> Row {
    let n = rng.gen_range(0..=FIELDS.len());
    let mut fields = Vec::new();
    for f in FIELDS.iter().take(n) {
        let t = if let (Some(var), true) = (allow_var, rng.gen_bool(0.3)) {
            Type::RecVar(var.to_string())
        } else if depth == 0 {
            if rng.gen_bool(0.5) {
                Type::Int
            } else {
                Type::Str
            }
        } else {
            sample_type(rng, depth)
        };
        fields.push((f.to_string(), t));
    }
    Row::from_fields(fields)
}

/// A random well-formed object type: the writeable row is a subset of
/// the readable one, and prototypal method rows agree with readable
/// field types.
pub fn sample_object(rng: &mut ChaCha8Rng, depth: u32) -> Type {
    sample_object_with(rng, depth, None)
}

fn sample_object_with(rng: &mut ChaCha8Rng, depth: u32, rec_var: Option<&str>) -> Type {
    let readable = sample_row(rng, depth, rec_var);
    let writeable = subset_row(rng, &readable);
    let qual = match rng.gen_range(0..3) {
        0 => Qualifier::Concrete,
        1 => Qualifier::Abstract,
        _ => {
            // mr agrees with r on shared fields; extra method-read
            // fields draw fresh types
            let mut mr_fields = Vec::new();
            for f in FIELDS {
                if rng.gen_bool(0.4) {
                    let t = match readable.get(f) {
                        Some(t) => t.clone(),
                        None => {
                            if rng.gen_bool(0.5) {
                                Type::Int
                            } else {
                                Type::Str
                            }
                        }
                    };
                    mr_fields.push((f.to_string(), t));
                }
            }
            let mr = Row::from_fields(mr_fields);
            let mw = subset_row(rng, &mr);
            Qualifier::Prototypal { mr, mw }
        }
    };
    Type::object(readable, writeable, qual)
}

fn subset_row(rng: &mut ChaCha8Rng, r: &Row) -> Row {
    Row(r
        .0
        .iter()
        .filter(|_| rng.gen_bool(0.6))
        .map(|(f, t)| (f.clone(), t.clone()))
        .collect())
}

/// A random recursive object type, with the bound variable appearing in
/// field positions.
pub fn sample_rec(rng: &mut ChaCha8Rng, depth: u32) -> Type {
    let var = "rec";
    let body = sample_object_with(rng, depth, Some(var));
    Type::rec(var, body)
}

/// A supertype of `t` constructed by one applicable subtyping rule;
/// returns `t` itself when no weakening applies.
pub fn weaken(rng: &mut ChaCha8Rng, t: &Type) -> Type {
    match t {
        Type::Object(obj) => {
            match &obj.qual {
                Qualifier::Prototypal { mr, mw } => {
                    let concrete = crate::types::row_subtype(&obj.readable, mr)
                        && crate::types::row_subtype(&obj.writeable, mw);
                    if concrete && rng.gen_bool(0.5) {
                        // S-ProtoConc
                        Type::object(
                            obj.readable.clone(),
                            obj.writeable.clone(),
                            Qualifier::Concrete,
                        )
                    } else {
                        // S-ProtoAbs
                        Type::object(
                            obj.readable.clone(),
                            obj.writeable.clone(),
                            Qualifier::Abstract,
                        )
                    }
                }
                Qualifier::Concrete => {
                    if rng.gen_bool(0.5) {
                        // S-ConcAbs
                        Type::object(
                            obj.readable.clone(),
                            obj.writeable.clone(),
                            Qualifier::Abstract,
                        )
                    } else {
                        // S-NonProto width subtyping
                        Type::object(
                            drop_field(rng, &obj.readable, &obj.writeable),
                            subset_row(rng, &obj.writeable),
                            Qualifier::Concrete,
                        )
                    }
                }
                Qualifier::Abstract => Type::object(
                    drop_field(rng, &obj.readable, &obj.writeable),
                    subset_row(rng, &obj.writeable),
                    Qualifier::Abstract,
                ),
            }
        }
        // S-Method
        Type::Method { param, ret, .. } => Type::attached((**param).clone(), (**ret).clone()),
        // equi-recursive unfolding is an equivalence, hence a weakening
        Type::Rec { .. } => crate::types::unfold(t),
        _ => t.clone(),
    }
}

/// Drop readable fields while keeping every writeable field readable.
fn drop_field(rng: &mut ChaCha8Rng, readable: &Row, writeable: &Row) -> Row {
    Row(readable
        .0
        .iter()
        .filter(|(f, _)| writeable.get(f).is_some() || rng.gen_bool(0.7))
        .map(|(f, t)| (f.clone(), t.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{is_subtype, is_well_formed};
    use std::collections::BTreeSet;

    #[test]
    fn sampled_types_are_well_formed() {
        let mut rng = rng(7);
        let empty = BTreeSet::new();
        for _ in 0..500 {
            let t = sample_type(&mut rng, 2);
            assert!(is_well_formed(&t, &empty), "ill-formed sample: {t}");
        }
    }

    #[test]
    fn weakening_produces_supertypes() {
        let mut rng = rng(11);
        for _ in 0..500 {
            let t = sample_type(&mut rng, 2);
            let w = weaken(&mut rng, &t);
            assert!(is_subtype(&t, &w), "weakening not a supertype: {t} -> {w}");
        }
    }
}
