//! Static type inference and checking for a JavaScript subset with
//! objects, prototype inheritance, first-class methods, and structural
//! subtyping, plus a small-step interpreter used as a soundness oracle.
//!
//! The pipeline is: parse/desugar ([`surface`]) -> constraint generation
//! ([`congen`]) -> fixed-point bound propagation ([`solver`]) -> type
//! ascription and verification ([`ascribe`]). [`interp`] executes the
//! same core terms directly, and [`fuzz`] drives both ends against each
//! other.

pub mod ascribe;
pub mod congen;
pub mod constraints;
pub mod expr;
pub mod fuzz;
pub mod interp;
pub mod pipeline;
pub mod sample;
pub mod solver;
pub mod span;
pub mod surface;
pub mod types;
