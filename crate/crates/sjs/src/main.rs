//! Command-line driver: check, infer, graph, run, fuzz.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sjs::ascribe::Diagnostic;
use sjs::interp;
use sjs::pipeline::{
    check_source, render_diagnostics, CheckReport, PipelineError, EXIT_INTERNAL, EXIT_OK,
    EXIT_TYPE_ERROR,
};
use sjs::solver::{Rule, SolverOptions};
use sjs::surface::{parse, SourceProgram};

#[derive(Parser)]
#[command(name = "sjs", about = "Type inference and checking for a JavaScript subset", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Type-check source files; exit 1 on any diagnostic.
    Check {
        /// Input files (.sjs); multiple files check in parallel.
        paths: Vec<PathBuf>,
        /// Re-check the inferred assignment against every constraint.
        #[arg(long)]
        verify: bool,
        /// Output machine-readable JSON.
        #[arg(long)]
        json: bool,
    },
    /// Infer and print the types of all top-level bindings.
    Infer {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the constraint graph.
    Graph {
        path: PathBuf,
        /// Emit DOT instead of a plain edge list.
        #[arg(long)]
        dot: bool,
        /// Show the graph after propagation instead of before.
        #[arg(long)]
        post: bool,
        /// Also print one line per bound insertion (rowvar, side,
        /// literal, rule).
        #[arg(long)]
        trace: bool,
    },
    /// Execute a program under the small-step semantics.
    Run {
        path: PathBuf,
        #[arg(long, default_value_t = interp::DEFAULT_MAX_STEPS)]
        max_steps: u32,
        /// Print each rule name fired.
        #[arg(long)]
        trace: bool,
    },
    /// Generate random programs and check the soundness property.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        rounds: u32,
        #[arg(long, default_value_t = 30)]
        budget: u32,
        /// Disable one propagation rule (e.g. `xi`) to exercise the
        /// oracle.
        #[arg(long)]
        inject_bug: Option<String>,
        /// Directory for reproducer files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::Check { paths, verify, json } => cmd_check(&paths, verify, json),
        Cmd::Infer { path, json } => cmd_infer(&path, json),
        Cmd::Graph { path, dot, post, trace } => cmd_graph(&path, dot, post, trace),
        Cmd::Run { path, max_steps, trace } => cmd_run(&path, max_steps, trace),
        Cmd::Fuzz { seed, rounds, budget, inject_bug, out_dir } => {
            cmd_fuzz(seed, rounds, budget, inject_bug.as_deref(), &out_dir)
        }
    };
    ExitCode::from(code as u8)
}

fn read_source(path: &Path) -> Result<SourceProgram, String> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(SourceProgram::new(text, path.display().to_string())),
        Err(e) => Err(format!("sjs: cannot read {}: {e}", path.display())),
    }
}

fn verify_forced() -> bool {
    std::env::var("SJS_DEBUG_VERIFY").map(|v| v == "1").unwrap_or(false)
}

fn check_one(path: &Path, verify: bool) -> Result<(i32, CheckReport), (i32, String)> {
    let src = read_source(path).map_err(|e| (EXIT_INTERNAL, e))?;
    let report = |ok, bindings, diagnostics| CheckReport {
        path: src.path.clone(),
        ok,
        bindings,
        diagnostics,
    };
    match check_source(&src, &SolverOptions::default()) {
        Ok(checked) => {
            if checked.diagnostics().is_empty() {
                if verify || verify_forced() {
                    if let Err(msg) = checked.verify() {
                        return Err((
                            EXIT_INTERNAL,
                            format!("{}: internal: assignment verification failed: {msg}", src.path),
                        ));
                    }
                }
                Ok((EXIT_OK, report(true, checked.binding_reports(), Vec::new())))
            } else {
                Ok((
                    EXIT_TYPE_ERROR,
                    report(false, Vec::new(), checked.diagnostics().to_vec()),
                ))
            }
        }
        Err(PipelineError::Parse(pe)) => {
            let d = Diagnostic::simple(
                sjs::ascribe::DiagnosticKind::ParseError,
                pe.span,
                pe.message.clone(),
            );
            Ok((EXIT_TYPE_ERROR, report(false, Vec::new(), vec![d])))
        }
        Err(PipelineError::Internal(msg)) => {
            Err((EXIT_INTERNAL, format!("{}: internal: {msg}", src.path)))
        }
    }
}

fn cmd_check(paths: &[PathBuf], verify: bool, json: bool) -> i32 {
    if paths.is_empty() {
        eprintln!("sjs check: no input files");
        return EXIT_INTERNAL;
    }
    // one pipeline per file, in parallel
    let results: Vec<Result<(i32, CheckReport), (i32, String)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| scope.spawn(move || check_one(p, verify)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut worst = EXIT_OK;
    for result in results {
        match result {
            Ok((code, report)) => {
                worst = worst.max(code);
                if json {
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                } else if report.ok {
                    println!("{}: ok", report.path);
                } else {
                    print!("{}", render_diagnostics(&report.path, &report.diagnostics));
                }
            }
            Err((code, msg)) => {
                worst = worst.max(code);
                eprintln!("{msg}");
            }
        }
    }
    worst
}

fn cmd_infer(path: &Path, json: bool) -> i32 {
    let src = match read_source(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INTERNAL;
        }
    };
    match check_source(&src, &SolverOptions::default()) {
        Ok(checked) => {
            if !checked.diagnostics().is_empty() {
                print!("{}", render_diagnostics(&src.path, checked.diagnostics()));
                return EXIT_TYPE_ERROR;
            }
            let bindings = checked.binding_reports();
            if json {
                println!("{}", serde_json::to_string_pretty(&bindings).unwrap());
            } else {
                for b in &bindings {
                    println!("{} : {}", b.name, b.r#type);
                }
            }
            EXIT_OK
        }
        Err(PipelineError::Parse(pe)) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "error": { "kind": "ParseError", "message": pe.message, "span": pe.span } })
                );
            } else {
                eprintln!("{}:{pe}", src.path);
            }
            EXIT_TYPE_ERROR
        }
        Err(PipelineError::Internal(msg)) => {
            eprintln!("{}: internal: {msg}", src.path);
            EXIT_INTERNAL
        }
    }
}

fn cmd_graph(path: &Path, dot: bool, post: bool, trace: bool) -> i32 {
    let src = match read_source(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INTERNAL;
        }
    };
    let e = match parse(&src) {
        Ok(e) => e,
        Err(pe) => {
            eprintln!("{}:{pe}", src.path);
            return EXIT_TYPE_ERROR;
        }
    };
    let mut store = sjs::constraints::ConstraintStore::new();
    if let Err(unbound) = sjs::congen::generate_program(&e, &mut store) {
        eprintln!("{}:{unbound}", src.path);
        return EXIT_TYPE_ERROR;
    }
    let solve = if post || trace {
        let opts = SolverOptions { trace, ..Default::default() };
        Some(sjs::solver::propagate_with(&mut store, &opts))
    } else {
        None
    };
    if !post {
        // re-generate to show the pre-propagation graph
        let mut pre = sjs::constraints::ConstraintStore::new();
        sjs::congen::generate_program(&e, &mut pre).expect("already generated once");
        print_graph(&pre, dot);
    } else {
        print_graph(&store, dot);
    }
    if let Some(solve) = solve {
        if trace {
            for rec in &solve.trace {
                println!(
                    "trace: {} {} {} rule {} at {}",
                    rec.rowvar,
                    rec.side,
                    render_literal(&store, rec.lit),
                    rec.rule,
                    rec.span
                );
            }
        }
    }
    EXIT_OK
}

fn render_literal(store: &sjs::constraints::ConstraintStore, l: sjs::constraints::LitId) -> String {
    use sjs::constraints::Literal;
    match store.lit(l) {
        Literal::Int => "int".into(),
        Literal::Str => "str".into(),
        Literal::BotRow => "_|_row".into(),
        Literal::Row(fields) => {
            let inner: Vec<String> = fields.iter().map(|(f, v)| format!("{f}: {v}")).collect();
            format!("<{}>", inner.join(", "))
        }
        Literal::Method { recv, param, ret } => format!("m({recv}, {param} -> {ret})"),
        Literal::Fun { param, ret } => format!("fun({param} -> {ret})"),
    }
}

fn print_graph(store: &sjs::constraints::ConstraintStore, dot: bool) {
    if dot {
        print!("{}", store.to_dot(|lit| {
            use sjs::constraints::Literal;
            match lit {
                Literal::Int => "int".into(),
                Literal::Str => "str".into(),
                Literal::BotRow => "_|_row".into(),
                Literal::Row(fields) => {
                    let inner: Vec<String> =
                        fields.iter().map(|(f, v)| format!("{f}: {v}")).collect();
                    format!("<{}>", inner.join(", "))
                }
                Literal::Method { recv, param, ret } => format!("m({recv}, {param} -> {ret})"),
                Literal::Fun { param, ret } => format!("fun({param} -> {ret})"),
            }
        }));
    } else {
        for (from, to, label) in store.edge_set() {
            if label.is_empty() {
                println!("{from} -> {to}");
            } else {
                println!("{from} -> {to} \\{{{label}}}");
            }
        }
    }
}

fn cmd_run(path: &Path, max_steps: u32, trace: bool) -> i32 {
    let src = match read_source(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_INTERNAL;
        }
    };
    let e = match parse(&src) {
        Ok(e) => e,
        Err(pe) => {
            eprintln!("{}:{pe}", src.path);
            return EXIT_TYPE_ERROR;
        }
    };
    let mut rules = Vec::new();
    let (outcome, _) = if trace {
        interp::run_traced(&e, max_steps, Some(&mut rules))
    } else {
        interp::run(&e, max_steps)
    };
    for rule in &rules {
        println!("step: {rule}");
    }
    println!("{outcome}");
    EXIT_OK
}

fn cmd_fuzz(seed: u64, rounds: u32, budget: u32, inject: Option<&str>, out_dir: &Path) -> i32 {
    let mut opts = SolverOptions::default();
    if let Some(name) = inject {
        match name.parse::<Rule>() {
            Ok(rule) => {
                opts.disabled.insert(rule);
                println!("injected bug: propagation rule {rule} disabled");
            }
            Err(e) => {
                eprintln!("sjs fuzz: {e}");
                return EXIT_INTERNAL;
            }
        }
    }
    let mut finding_paths = Vec::new();
    let (accepted, rejected, violations) =
        sjs::fuzz::campaign(seed, rounds, budget, &opts, |finding| {
            let name = format!("finding-{}.sjs", finding.seed);
            let path = out_dir.join(name);
            let body = format!(
                "// soundness violation (seed {}): {}\n{}",
                finding.seed,
                finding.reason,
                finding.minimized.pretty()
            );
            if let Err(e) = std::fs::write(&path, body) {
                eprintln!("sjs fuzz: cannot write {}: {e}", path.display());
            } else {
                finding_paths.push(path.display().to_string());
            }
        });
    println!(
        "fuzz: {rounds} rounds, {accepted} accepted, {rejected} rejected, {violations} violations"
    );
    for p in finding_paths {
        println!("reproducer: {p}");
    }
    if violations > 0 {
        EXIT_TYPE_ERROR
    } else {
        EXIT_OK
    }
}
