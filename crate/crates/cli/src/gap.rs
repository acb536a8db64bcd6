//! `gap` subcommand.

use crate::parse::{int_list, parsed_list};
use crate::EXIT_USAGE;
use clap::{Args, ValueEnum};
use gapforge_core::exact::formula_gap;
use gapforge_core::io::fmt17;
use gapforge_core::layer::DEFAULT_DENSE_CAP;
use gapforge_core::numeric::{auto_method, dense_gap, iterative_gap, GapResult, Method, SolverConfig};
use gapforge_core::tensornet::{build_mpo, dmrg_gap, DmrgConfig, SweepRecord};
use gapforge_core::{Boundary, CircuitSpec, GapError, GroupKind};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Formula,
    Dense,
    Iterative,
    Dmrg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    /// Gate groups, comma separated.
    #[arg(long, default_value = "unitary")]
    group: String,
    /// Boundary conditions, comma separated.
    #[arg(long, default_value = "open")]
    boundary: String,
    /// Qudit counts: list and/or `start:stop:step` ranges.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 2)]
    d: u64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Residual tolerance of the Krylov solver.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 50)]
    krylov_depth: usize,
    /// Entry cap for dense matrices.
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    dense_cap: usize,
    /// MPS bond dimension.
    #[arg(long, default_value_t = 80)]
    chi: usize,
    #[arg(long, default_value_t = 40)]
    sweeps: usize,
    /// DMRG energy convergence threshold.
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
    /// Rerun DMRG at 1.2χ and flag rows whose gap moves by more than the threshold.
    #[arg(long)]
    chi_check: bool,
    /// Directory for per-run DMRG sweep histories.
    #[arg(long)]
    history_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write zero in the seconds column so output is reproducible byte for byte.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Debug)]
struct Row {
    spec: CircuitSpec,
    lambda: f64,
    method: Method,
    residual: f64,
    iterations: usize,
    seconds: f64,
    status: String,
    history: Vec<SweepRecord>,
}

const COLUMNS: [&str; 11] = [
    "group", "boundary", "d", "m", "n", "lambda", "method", "residual", "iterations", "seconds", "status",
];

fn solve(spec: CircuitSpec, method: Method, args: &GapArgs) -> Row {
    let start = Instant::now();
    let cfg = SolverConfig {
        tolerance: args.tol,
        max_iterations: args.max_iter,
        krylov_depth: args.krylov_depth,
        seed: args.seed,
        dense_cap: args.dense_cap,
        ..Default::default()
    };
    let mut history = Vec::new();
    let mut status = "ok".to_string();
    let outcome: Result<GapResult, GapError> = match method {
        Method::Formula => formula_gap(&spec).map(|lambda| GapResult {
            spec,
            lambda,
            method,
            residual: 0.0,
            iterations: 0,
            converged: true,
            unit_eigenvalues: None,
            degeneracy: None,
            eigvec: None,
        }),
        Method::Dense => dense_gap(&spec, &cfg),
        Method::Iterative => iterative_gap(&spec, &cfg),
        Method::Dmrg => {
            let dcfg = DmrgConfig {
                chi: args.chi,
                max_sweeps: args.sweeps,
                threshold: args.threshold,
                seed: args.seed,
                chi_check: args.chi_check,
                ..Default::default()
            };
            build_mpo(&spec).and_then(|mpo| dmrg_gap(&mpo, &dcfg)).map(|out| {
                if out.chi_too_small(args.threshold) {
                    status = "chi_too_small".into();
                }
                history = out.history;
                out.result
            })
        }
    };
    let seconds = if args.deterministic { 0.0 } else { start.elapsed().as_secs_f64() };
    match outcome {
        Ok(r) => Row {
            spec,
            lambda: r.lambda,
            method,
            residual: r.residual,
            iterations: r.iterations,
            seconds,
            status,
            history,
        },
        Err(e) => {
            let (lambda, residual, status) = match e {
                GapError::NoConvergence { estimate, residual } => (estimate, residual, "no_convergence".to_string()),
                other => (f64::NAN, f64::NAN, format!("error: {other}")),
            };
            Row {
                spec,
                lambda,
                method,
                residual,
                iterations: 0,
                seconds,
                status,
                history,
            }
        }
    }
}

fn write_history(dir: &PathBuf, row: &Row) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let s = row.spec;
    let path = dir.join(format!("{}_{}_d{}_m{}_n{}.csv", s.group, s.boundary, s.d, s.m, s.n));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sweep", "energy", "delta", "max_entropy"])?;
    for h in &row.history {
        w.write_record([h.sweep.to_string(), fmt17(h.energy), fmt17(h.delta), fmt17(h.max_entropy)])?;
    }
    w.flush()
}

fn write_rows(rows: &[Row], format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS)?;
            for r in rows {
                let s = r.spec;
                w.write_record([
                    s.group.to_string(),
                    s.boundary.to_string(),
                    s.d.to_string(),
                    s.m.to_string(),
                    s.n.to_string(),
                    fmt17(r.lambda),
                    r.method.to_string(),
                    fmt17(r.residual),
                    r.iterations.to_string(),
                    fmt17(r.seconds),
                    r.status.clone(),
                ])?;
            }
            w.flush()
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "group": r.spec.group.name(),
                        "boundary": r.spec.boundary.name(),
                        "d": r.spec.d,
                        "m": r.spec.m,
                        "n": r.spec.n,
                        "lambda": fmt17(r.lambda),
                        "method": r.method.name(),
                        "residual": fmt17(r.residual),
                        "iterations": r.iterations,
                        "seconds": fmt17(r.seconds),
                        "status": r.status,
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &items)?;
            writeln!(out)
        }
    }
}

pub fn run(args: GapArgs) -> u8 {
    let lists = (parsed_list::<GroupKind>(&args.group), parsed_list::<Boundary>(&args.boundary), int_list(&args.n));
    let (groups, boundaries, ns) = match lists {
        (Ok(g), Ok(b), Ok(n)) => (g, b, n),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if !(args.tol > 0.0) || !(args.threshold > 0.0) {
        eprintln!("error: tolerances must be positive");
        return EXIT_USAGE;
    }
    if args.chi < 2 {
        eprintln!("error: --chi must be at least 2");
        return EXIT_USAGE;
    }
    let mut jobs = Vec::new();
    for &g in &groups {
        for &b in &boundaries {
            for &n in &ns {
                let spec = match CircuitSpec::new(g, b, args.d, args.m, n) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_USAGE;
                    }
                };
                let method = match args.method {
                    MethodArg::Formula if g != GroupKind::Unitary => {
                        eprintln!("error: the closed-form gap exists only for unitary circuits");
                        return EXIT_USAGE;
                    }
                    MethodArg::Formula => Method::Formula,
                    MethodArg::Dense => Method::Dense,
                    MethodArg::Iterative => Method::Iterative,
                    MethodArg::Dmrg => Method::Dmrg,
                    MethodArg::Auto => match auto_method(&spec, args.dense_cap) {
                        Ok(m) => m,
                        Err(e) => {
                            eprintln!("error: {e}");
                            return EXIT_USAGE;
                        }
                    },
                };
                jobs.push((spec, method));
            }
        }
    }
    let rows: Vec<Row> = jobs.par_iter().map(|&(s, m)| solve(s, m, &args)).collect();
    if let Some(dir) = &args.history_dir {
        for r in rows.iter().filter(|r| !r.history.is_empty()) {
            if let Err(e) = write_history(dir, r) {
                eprintln!("error: writing history: {e}");
                return 1;
            }
        }
    }
    let written = match &args.output {
        Some(path) => std::fs::File::create(path).and_then(|mut f| write_rows(&rows, args.format, &mut f)),
        None => write_rows(&rows, args.format, &mut std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    for r in rows.iter().filter(|r| r.status == "chi_too_small") {
        eprintln!("warning: χ = {} looks too small for {:?}", args.chi, r.spec);
    }
    if rows.iter().any(|r| r.status == "no_convergence") {
        3
    } else if rows.iter().any(|r| r.status.starts_with("error")) {
        1
    } else {
        0
    }
}
