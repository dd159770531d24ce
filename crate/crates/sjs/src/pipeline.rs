//! End-to-end orchestration of the checking pipeline, shared by the CLI
//! and the fuzzer.

use serde::Serialize;

use crate::ascribe::{
    ascribe_all, verify_assignment, AscribeError, Assignment, Diagnostic, DiagnosticKind,
};
use crate::congen::{generate_program, TopBinding};
use crate::constraints::ConstraintStore;
use crate::expr::Expr;
use crate::solver::{propagate_with, SolverOptions};
use crate::span::Span;
use crate::surface::{parse, ParseError, SourceProgram};

/// Exit-status contract: 0 success, 1 type/parse errors, 2 internal
/// assertion failures.
pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE_ERROR: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

pub struct Checked {
    pub store: ConstraintStore,
    pub bindings: Vec<TopBinding>,
    pub expr: Expr,
    pub outcome: Result<Assignment, Vec<Diagnostic>>,
}

pub enum PipelineError {
    Parse(ParseError),
    Internal(String),
}

/// Run the inference pipeline on an already-parsed program.
pub fn check_expr(e: &Expr, opts: &SolverOptions) -> Result<Checked, PipelineError> {
    let mut store = ConstraintStore::new();
    let gen = match generate_program(e, &mut store) {
        Ok(g) => g,
        Err(unbound) => {
            // surface as a diagnostic so callers see one error shape
            let d = Diagnostic::simple(
                DiagnosticKind::UnboundVariable,
                unbound.span,
                format!("unbound variable `{}`", unbound.name),
            );
            return Ok(Checked {
                store,
                bindings: Vec::new(),
                expr: e.clone(),
                outcome: Err(vec![d]),
            });
        }
    };
    propagate_with(&mut store, opts);
    let outcome = match ascribe_all(&store) {
        Ok(assignment) => Ok(assignment),
        Err(AscribeError::Diagnostics(ds)) => Err(ds),
        Err(AscribeError::Internal(msg)) => return Err(PipelineError::Internal(msg)),
    };
    Ok(Checked {
        store,
        bindings: gen.bindings,
        expr: e.clone(),
        outcome,
    })
}

/// Parse and check a source program.
pub fn check_source(src: &SourceProgram, opts: &SolverOptions) -> Result<Checked, PipelineError> {
    let e = parse(src).map_err(PipelineError::Parse)?;
    check_expr(&e, opts)
}

impl Checked {
    /// Run the post-hoc verification lemmas when inference succeeded.
    pub fn verify(&self) -> Result<(), String> {
        match &self.outcome {
            Ok(assignment) => verify_assignment(&self.store, assignment),
            Err(_) => Ok(()),
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match &self.outcome {
            Ok(_) => &[],
            Err(ds) => ds,
        }
    }

    /// Types of the top-level bindings, skipping desugaring temporaries.
    pub fn binding_reports(&self) -> Vec<BindingReport> {
        let assignment = match &self.outcome {
            Ok(a) => a,
            Err(_) => return Vec::new(),
        };
        self.bindings
            .iter()
            .filter(|b| !b.name.starts_with('$'))
            .map(|b| BindingReport {
                name: b.name.clone(),
                r#type: assignment.type_of(b.var).to_string(),
                span: b.span,
            })
            .collect()
    }
}

#[derive(Serialize)]
pub struct BindingReport {
    pub name: String,
    pub r#type: String,
    pub span: Span,
}

#[derive(Serialize)]
pub struct CheckReport {
    pub path: String,
    pub ok: bool,
    pub bindings: Vec<BindingReport>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Render diagnostics the way the CLI prints them.
pub fn render_diagnostics(path: &str, diagnostics: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diagnostics {
        out.push_str(&format!("{path}:{d}\n"));
        for detail in &d.details {
            out.push_str(&format!("    {detail}\n"));
        }
    }
    out
}
