use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use conformal_check::{parse_inner, parse_psi, parse_tolerance, render, run, Format, RunConfig};
use lorentz_conformal::catalog::EntryParams;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

/// Evaluates conformal invariants of catalog hypersurfaces in de Sitter space
/// and checks them against their closed forms.
#[derive(Parser, Debug)]
#[command(name = "conformal-check", version)]
struct Cli {
    /// Family id (product-ds, product-flat, product-ads, wp, example32,
    /// example33) or `labeled` for the classification set. Repeatable.
    #[arg(long = "entry", required = true)]
    entries: Vec<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "K")]
    big_k: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Values of lambda for D = A + lambda B. For example32/33 the first one
    /// is also the target of the inner solve.
    #[arg(long = "lambda", allow_negative_numbers = true)]
    lambdas: Vec<f64>,
    /// Inner hypersurface for cone entries: auto, umbilic, product:K1.
    #[arg(long)]
    inner: Option<String>,
    /// Sign of the cone coordinate for example33 (+1 or -1).
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<i8>,
    /// Chart of the lifted products: 1 or 2.
    #[arg(long)]
    psi: Option<String>,
    /// Points per axis of the pointwise grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Points per axis of the finite-difference subgrid.
    #[arg(long = "fd-grid")]
    fd_grid: Option<usize>,
    #[arg(long = "jet-order", default_value_t = 4)]
    jet_order: usize,
    #[arg(long = "fd-step", default_value_t = lorentz_conformal::sweep::DEFAULT_FD_STEP)]
    fd_step: f64,
    /// Skip the step-halving refinement of finite-difference rows.
    #[arg(long = "no-refine")]
    no_refine: bool,
    /// Tolerance override NAME=X. Repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
    /// Eigenvalue clustering threshold.
    #[arg(long, default_value_t = 1e-3)]
    cluster: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long = "report", value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run N random conformal maps per entry and compare invariants.
    #[arg(long)]
    equivalence: Option<usize>,
}

fn config(cli: &Cli) -> Result<RunConfig, String> {
    let d = EntryParams::default();
    let mut tolerances = BTreeMap::new();
    for t in &cli.tol {
        let (k, v) = parse_tolerance(t).map_err(|e| e.0)?;
        tolerances.insert(k, v);
    }
    let params = EntryParams {
        m: cli.m.unwrap_or(d.m),
        k: cli.k.unwrap_or(d.k),
        big_k: cli.big_k.unwrap_or(d.big_k),
        p: cli.p.unwrap_or(d.p),
        q: cli.q.unwrap_or(d.q),
        a: cli.a.unwrap_or(d.a),
        r: cli.r.unwrap_or(d.r),
        lambda: None,
        inner: match &cli.inner {
            Some(s) => parse_inner(s).map_err(|e| e.0)?,
            None => d.inner,
        },
        epsilon: cli.eps.unwrap_or(d.epsilon),
        psi: match &cli.psi {
            Some(s) => parse_psi(s).map_err(|e| e.0)?,
            None => d.psi,
        },
    };
    Ok(RunConfig {
        entries: cli.entries.clone(),
        params,
        lambdas: cli.lambdas.clone(),
        grid: cli.grid,
        fd_grid: cli.fd_grid,
        jet_order: cli.jet_order,
        fd_step: cli.fd_step,
        refine: !cli.no_refine,
        tolerances,
        cluster_threshold: cli.cluster,
        seed: cli.seed,
        format: match cli.report {
            ReportFormat::Json => Format::Json,
            ReportFormat::Csv => Format::Csv,
        },
        out: cli.out.clone(),
        equivalence: cli.equivalence,
        perturbation: Default::default(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("conformal-check: {e}");
            return ExitCode::from(2);
        }
    };
    let (report, code) = run(&cfg);
    let text = render(&report, cfg.format);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("conformal-check: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    for w in &report.header.warnings {
        eprintln!("conformal-check: {w}");
    }
    for e in &report.entries {
        if let Some(err) = &e.error {
            eprintln!("{}: {err}", e.id);
        }
    }
    ExitCode::from(code as u8)
}
