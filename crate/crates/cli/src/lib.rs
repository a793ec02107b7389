//! Batch driver: evaluates catalog entries, checks residuals and
//! expectations, classifies, and assembles reports.

pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use lorentz_conformal::catalog::{make_entry, CatalogEntry, EntryParams, ExpectedInvariants, Family, InnerKind, InnerSpec};
use lorentz_conformal::checker::{classify, eigen_structure, Thresholds};
use lorentz_conformal::conformal::Perturbation;
use lorentz_conformal::linalg::{sym_eigenvalues, Mat};
use lorentz_conformal::spaceforms::PsiChart;
use lorentz_conformal::sweep::{equivalence_suite, sweep_chart, Sweep, SweepOptions, DEFAULT_FD_STEP, REFINEMENT_FLOOR};
use lorentz_conformal::GeomError;

use report::{
    Cluster, EntryReport, EquivalenceSummary, Header, InvariantSummary, LambdaSpectrum, Report, ResidualRow, Spectrum,
    Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Serializable copy of [`EntryParams`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub m: usize,
    pub k: usize,
    #[serde(rename = "K")]
    pub big_k: usize,
    pub p: usize,
    pub q: usize,
    pub a: f64,
    pub r: f64,
    pub lambda: Option<f64>,
    pub inner: String,
    pub epsilon: i8,
    pub psi: String,
}

impl From<&EntryParams> for ParamsEcho {
    fn from(p: &EntryParams) -> Self {
        Self {
            m: p.m,
            k: p.k,
            big_k: p.big_k,
            p: p.p,
            q: p.q,
            a: p.a,
            r: p.r,
            lambda: p.lambda,
            inner: p.inner.to_string(),
            epsilon: p.epsilon,
            psi: p.psi.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub entries: Vec<String>,
    pub params: EntryParams,
    pub lambdas: Vec<f64>,
    pub grid: Option<usize>,
    pub fd_grid: Option<usize>,
    pub jet_order: usize,
    pub fd_step: f64,
    pub refine: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub cluster_threshold: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub equivalence: Option<usize>,
    pub perturbation: Perturbation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            entries: vec![],
            params: EntryParams::default(),
            lambdas: vec![],
            grid: None,
            fd_grid: None,
            jet_order: 4,
            fd_step: DEFAULT_FD_STEP,
            refine: true,
            tolerances: BTreeMap::new(),
            cluster_threshold: 1e-3,
            seed: 7,
            format: Format::Json,
            out: None,
            equivalence: None,
            perturbation: Perturbation::default(),
        }
    }
}

/// Configuration problems: reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Default tolerance per residual row; `--tol NAME=X` overrides by exact
/// name or by the prefix before `(`.
pub fn default_tolerance(name: &str) -> f64 {
    let base = name.split('(').next().unwrap_or(name);
    let base = base.strip_prefix("refine:").unwrap_or(base);
    match base {
        "trace_b" | "b_symmetry" => 1e-9,
        "norm_b" | "phi" => 1e-7,
        "a_symmetry" => 1e-8,
        "trace_a" | "blaschke_routes" | "bianchi" | "gauss" => 1e-6,
        "lap_y" | "y_null" | "n_null" | "y_n" | "xi_norm" | "frame_orthogonality" | "a_from_frame"
        | "b_from_frame" | "row_dy" | "row_dn" | "row_dyi" | "row_dxi" => 1e-6,
        "phi_curl" | "codazzi_a" | "codazzi_b" | "codazzi_d" => 1e-5,
        "b_parallel" | "d_parallel" => 1e-5,
        "quadric" => 1e-10,
        "expected_rho" | "expected_b_eigenvalues" => 1e-8,
        "expected_d_eigenvalues" | "b_cluster_spread" | "d_cluster_spread" => 1e-6,
        "equivalence" => 1e-6,
        "chart_overlap" => 1e-8,
        "inner_constraints" => 1e-10,
        _ => 0.0,
    }
}

impl RunConfig {
    pub fn tolerance(&self, name: &str) -> f64 {
        if let Some(t) = self.tolerances.get(name) {
            return *t;
        }
        let base = name.split('(').next().unwrap_or(name);
        self.tolerances.get(base).copied().unwrap_or_else(|| default_tolerance(name))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.entries.is_empty() {
            return Err(ConfigError("no entry selected (use --entry)".into()));
        }
        if !(3..=4).contains(&self.jet_order) {
            return Err(ConfigError(format!("--jet-order must be 3 or 4, got {}", self.jet_order)));
        }
        if !(self.fd_step > 0.0) {
            return Err(ConfigError(format!("--fd-step must be positive, got {}", self.fd_step)));
        }
        if !(self.cluster_threshold > 0.0) {
            return Err(ConfigError(format!("cluster threshold must be positive, got {}", self.cluster_threshold)));
        }
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                return Err(ConfigError(format!("tolerance {k} must be positive, got {v}")));
            }
        }
        if let Some(n) = self.grid {
            if n < 2 {
                return Err(ConfigError(format!("--grid must be >= 2, got {n}")));
            }
        }
        if let Some(n) = self.fd_grid {
            if n < 1 {
                return Err(ConfigError(format!("--fd-grid must be >= 1, got {n}")));
            }
        }
        for e in &self.entries {
            if e != "labeled" {
                Family::from_id(e).map_err(|err| ConfigError(err.to_string()))?;
            }
        }
        Ok(())
    }

    fn thresholds(&self) -> Thresholds {
        Thresholds { cluster: self.cluster_threshold, ..Thresholds::default() }
    }

    fn echo(&self) -> Value {
        json!({
            "entries": self.entries,
            "params": ParamsEcho::from(&self.params),
            "lambdas": self.lambdas,
            "grid": self.grid,
            "fd_grid": self.fd_grid,
            "jet_order": self.jet_order,
            "fd_step": self.fd_step,
            "refine": self.refine,
            "tolerances": self.tolerances,
            "cluster_threshold": self.cluster_threshold,
            "seed": self.seed,
            "format": self.format,
            "equivalence": self.equivalence,
        })
    }
}

/// Conventions printed in every report header.
pub fn conventions() -> Vec<String> {
    [
        "ambient S^{m+1}_1: <x,x> = 1 in R^{m+2}_1, metric diag(-1, +1, ...)",
        "conformal space: null cone of R^{m+3}_2 with two leading time-like slots",
        "unit normal future-pointing (n_0 > 0) unless the entry reverses it",
        "h_ab = -<n, d_a d_b x>, H = tr h / m, rho^2 = m/(m-1) (|h|^2 - m H^2)",
        "frame E_i = rho^-1 e_i; B, A, Phi in this frame",
        "R_ijkl = g(R(E_i,E_j)E_k, E_l), sectional curvature R_ijji, R_ij = sum_k R_ikkj",
        "T_ijk = (nabla_{E_k} T)(E_i, E_j); Phi_ij = (nabla_{E_j} Phi)(E_i)",
        "D^lambda = A + lambda B",
        "chart partials from order-4 jets; covariant derivatives of B, A, Phi by central differences at steps h and 2h with Richardson extrapolation",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn spectrum_of(field: &[Mat<f64>], threshold: f64) -> Spectrum {
    match eigen_structure(field, threshold) {
        Ok(s) => Spectrum {
            clusters: Some(
                s.values
                    .iter()
                    .zip(&s.multiplicities)
                    .map(|(v, k)| Cluster { value: *v, multiplicity: *k, spread: s.deviation })
                    .collect(),
            ),
            error: None,
        },
        Err(e) => Spectrum { clusters: None, error: Some(e.to_string()) },
    }
}

fn expand(spec: &[(f64, usize)], sign: f64) -> Vec<f64> {
    let mut v: Vec<f64> = spec.iter().flat_map(|(x, k)| std::iter::repeat(sign * x).take(*k)).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Largest deviation of the per-point descending eigenvalues from `expected`.
fn spectrum_deviation(field: &[Mat<f64>], expected: &[(f64, usize)], up_to_sign: bool) -> f64 {
    let signs: &[f64] = if up_to_sign { &[1.0, -1.0] } else { &[1.0] };
    signs
        .iter()
        .map(|s| {
            let e = expand(expected, *s);
            field
                .iter()
                .map(|f| match sym_eigenvalues(&f.symmetric_part()) {
                    Ok(ev) if ev.len() == e.len() => {
                        ev.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                    }
                    _ => f64::INFINITY,
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn expectation_rows(cfg: &RunConfig, entry: &CatalogEntry<f64>, sw: &Sweep, rows: &mut Vec<ResidualRow>) {
    let ex: &ExpectedInvariants = &entry.expected;
    let mut push = |name: String, v: f64| {
        let tol = cfg.tolerance(&name);
        rows.push(ResidualRow::new(name, v, tol));
    };
    if let Some(rho) = ex.rho {
        push("expected_rho".into(), sw.samples.iter().map(|s| (s.rho - rho).abs()).fold(0.0, f64::max));
    }
    if let Some(f) = &ex.rho_field {
        push("expected_rho".into(), sw.samples.iter().map(|s| (s.rho - f(&s.point)).abs()).fold(0.0, f64::max));
    }
    if let Some(b) = &ex.b_eigenvalues {
        push("expected_b_eigenvalues".into(), spectrum_deviation(&sw.b_field(), b, ex.b_up_to_sign));
    }
    if let Some(n) = ex.b_distinct {
        let got = eigen_structure(&sw.b_field(), cfg.cluster_threshold).map(|s| s.t);
        push("b_distinct_count".into(), got.map_or(f64::INFINITY, |t| (t as f64 - n as f64).abs()));
        if let Ok(s) = eigen_structure(&sw.b_field(), cfg.cluster_threshold) {
            push("b_cluster_spread".into(), s.deviation);
        }
    }
    if let Some((lam, d)) = &ex.d_eigenvalues {
        if let Some(field) = sw.d_field(*lam) {
            push(format!("expected_d_eigenvalues(lambda={lam})"), spectrum_deviation(&field, d, false));
        }
    }
    if let Some(t) = ex.t {
        if let Some(lam) = entry.lambda() {
            if let Some(field) = sw.d_field(lam) {
                let got = eigen_structure(&field, cfg.cluster_threshold).map(|s| s.t);
                push(format!("t_count(lambda={lam})"), got.map_or(f64::INFINITY, |g| (g as f64 - t as f64).abs()));
            }
        }
    }
    if ex.phi_zero {
        push("phi".into(), sw.phi_max);
    }
    if ex.b_parallel {
        push("b_parallel".into(), sw.grad_b_max);
    }
    if ex.d_parallel && sw.a_field().is_some() {
        for (i, l) in sw.lambdas.iter().enumerate() {
            if ex.d_parallel_lambda.map_or(true, |dl| dl == *l) {
                push(format!("d_parallel(lambda={l})"), sw.grad_d_max[i]);
            }
        }
    }
}

fn exit_code_for(err: &GeomError) -> i32 {
    match err {
        GeomError::Parameter(_) | GeomError::NoAdmissibleInner(_) => 2,
        _ => 1,
    }
}

fn inner_value(entry: &CatalogEntry<f64>) -> Option<Value> {
    entry.inner.as_ref().map(|s| {
        let kind = match s.kind {
            InnerKind::Product { k, shape } => json!({"kind": "product", "k": k, "shape": shape}),
            InnerKind::Umbilic { c } => json!({"kind": "umbilic", "curvature": c}),
        };
        json!({
            "inner": kind,
            "lambda": s.lambda,
            "curvatures": s.curvatures.iter().map(|(v, k)| json!({"value": v, "multiplicity": k})).collect::<Vec<_>>(),
            "trace_residual": s.trace_residual,
            "norm_residual": s.norm_residual,
            "scalar_residual": s.scalar_residual,
            "mean_residual": s.mean_residual,
        })
    })
}

fn error_report(id: String, family: &str, params: Value, err: &GeomError) -> (EntryReport, i32) {
    (
        EntryReport {
            id,
            family: family.to_string(),
            label: family.to_string(),
            params,
            status: "error".into(),
            error: Some(err.to_string()),
            lambda: None,
            inner: None,
            invariants: None,
            residuals: vec![],
            classification: None,
            equivalence: None,
        },
        exit_code_for(err),
    )
}

/// Evaluates one built entry. Returns the report and its exit code.
pub fn evaluate_entry(cfg: &RunConfig, entry: &CatalogEntry<f64>) -> (EntryReport, i32) {
    let params = serde_json::to_value(ParamsEcho::from(&entry.params)).expect("params serialize");
    let mut lambdas = cfg.lambdas.clone();
    if lambdas.is_empty() {
        lambdas.push(0.0);
    }
    if let Some(l) = entry.lambda() {
        if !lambdas.contains(&l) {
            lambdas.push(l);
        }
    }
    let opts = SweepOptions {
        grid_points: cfg.grid.or(Some(entry.grid_points)),
        fd_grid_points: cfg.fd_grid,
        jet_order: cfg.jet_order,
        fd_step: cfg.fd_step,
        lambdas: lambdas.clone(),
        refine: cfg.refine,
        perturbation: cfg.perturbation,
    };
    let sw = match sweep_chart(&entry.chart, &opts) {
        Ok(s) => s,
        Err(e) => return error_report(entry.id(), entry.family.id(), params, &e),
    };

    let mut rows: Vec<ResidualRow> = Vec::new();
    let quadric = entry.chart.quadric_residual_on_grid(sw.grid_points).unwrap_or(f64::INFINITY);
    rows.push(ResidualRow::new("quadric", quadric, cfg.tolerance("quadric")));
    if let Some(s) = &entry.inner {
        let v = s.trace_residual.max(s.norm_residual).max(s.mean_residual).max(s.scalar_residual);
        rows.push(ResidualRow::new("inner_constraints", v, cfg.tolerance("inner_constraints")));
    }
    for st in &sw.stats {
        // derivatives of B and D are observations, checked only as expectations
        if st.name == "phi" || st.name == "grad_b" || st.name.starts_with("grad_d") {
            continue;
        }
        rows.push(ResidualRow::new(st.name.clone(), st.max, cfg.tolerance(&st.name)));
    }
    for st in &sw.stats {
        if let Some(fine) = st.refined {
            if st.name == "phi" || st.name == "grad_b" || st.name.starts_with("grad_d") {
                continue;
            }
            rows.push(ResidualRow::new(format!("refine:{}", st.name), fine, (st.max / 4.0).max(REFINEMENT_FLOOR)));
        }
    }
    expectation_rows(cfg, entry, &sw, &mut rows);

    if let Some(alt) = &entry.alternate_chart {
        let pts = entry.chart.domain().grid(3);
        match lorentz_conformal::sweep::compare_invariants(&entry.chart, alt, &pts, cfg.jet_order) {
            Ok(d) => rows.push(ResidualRow::new("chart_overlap", d, cfg.tolerance("chart_overlap"))),
            Err(e) => rows.push(ResidualRow::new(format!("chart_overlap: {e}"), f64::INFINITY, 0.0)),
        }
    }

    let class_lambda = entry.lambda().unwrap_or(lambdas[0]);
    let classification = match sw.classifier_input(class_lambda) {
        Ok(input) => {
            let v = classify(&input, &cfg.thresholds());
            if cfg.perturbation.is_zero() {
                let ok = v.is_consistent_with(entry.label());
                rows.push(ResidualRow::new("classification", if ok { 0.0 } else { 1.0 }, 0.0));
            }
            Some(serde_json::to_value(&v).expect("verdict serializes"))
        }
        Err(e) => Some(json!({"skipped": e.to_string()})),
    };

    let equivalence = cfg.equivalence.map(|n| {
        let grid = 3;
        match equivalence_suite(&entry.chart, n, cfg.seed, grid, cfg.jet_order) {
            Ok(out) => {
                if n > 0 {
                    rows.push(ResidualRow::new(format!("equivalence(N={n})"), out.max_deviation, cfg.tolerance("equivalence")));
                }
                for (t, why) in &out.skipped {
                    rows.push(ResidualRow::new(format!("equivalence_trial_{t}_skipped: {why}"), f64::INFINITY, 0.0));
                }
                EquivalenceSummary {
                    trials: n,
                    seed: cfg.seed,
                    max_deviation: out.max_deviation,
                    skipped: out.skipped.iter().map(|(t, w)| format!("trial {t}: {w}")).collect(),
                }
            }
            Err(e) => {
                rows.push(ResidualRow::new(format!("equivalence: {e}"), f64::INFINITY, 0.0));
                EquivalenceSummary { trials: n, seed: cfg.seed, max_deviation: f64::NAN, skipped: vec![e.to_string()] }
            }
        }
    });

    let b = sw.b_field();
    let invariants = InvariantSummary {
        grid_points: sw.grid_points,
        stencil_grid_points: sw.fd_grid_points,
        fd_step: sw.fd_step,
        jet_order: sw.jet_order,
        rho_min: sw.samples.iter().map(|s| s.rho).fold(f64::INFINITY, f64::min),
        rho_max: sw.samples.iter().map(|s| s.rho).fold(f64::NEG_INFINITY, f64::max),
        b_eigenvalues: spectrum_of(&b, cfg.cluster_threshold),
        a_eigenvalues: sw.a_field().map(|a| spectrum_of(&a, cfg.cluster_threshold)),
        d_eigenvalues: lambdas
            .iter()
            .filter_map(|l| sw.d_field(*l).map(|f| LambdaSpectrum { lambda: *l, spectrum: spectrum_of(&f, cfg.cluster_threshold) }))
            .collect(),
        phi_max: sw.phi_max,
    };
    let pass = rows.iter().all(|r| r.pass);
    (
        EntryReport {
            id: entry.id(),
            family: entry.family.id().to_string(),
            label: entry.label().name().to_string(),
            params,
            status: if pass { "ok".into() } else { "failed".into() },
            error: None,
            lambda: entry.lambda(),
            inner: inner_value(entry),
            invariants: Some(invariants),
            residuals: rows,
            classification,
            equivalence,
        },
        if pass { 0 } else { 1 },
    )
}

/// Builds the entries a configuration selects.
pub fn build_entries(cfg: &RunConfig) -> Vec<(String, Result<CatalogEntry<f64>, GeomError>)> {
    let mut out = Vec::new();
    for sel in &cfg.entries {
        if sel == "labeled" {
            match lorentz_conformal::catalog::labeled_entries::<f64>() {
                Ok(list) => out.extend(list.into_iter().map(|e| (e.family.id().to_string(), Ok(e)))),
                Err(e) => out.push(("labeled".to_string(), Err(e))),
            }
            continue;
        }
        let family = match Family::from_id(sel) {
            Ok(f) => f,
            Err(e) => {
                out.push((sel.clone(), Err(e)));
                continue;
            }
        };
        let mut params = cfg.params.clone();
        if matches!(family, Family::Example32 | Family::Example33) && params.lambda.is_none() {
            params.lambda = cfg.lambdas.first().copied();
        }
        out.push((sel.clone(), make_entry::<f64>(family, &params)));
    }
    out
}

/// Runs the configured entries and returns the report and exit code.
pub fn run(cfg: &RunConfig) -> (Report, i32) {
    let mut warnings = Vec::new();
    if cfg.equivalence == Some(0) {
        warnings.push("equivalence suite with N = 0 is vacuous".to_string());
    }
    if cfg.jet_order == 3 {
        warnings.push("jet order 3: rows built on the Blaschke tensor are omitted and classification is skipped".to_string());
    }
    let mut entries = Vec::new();
    let mut code = 0;
    if let Err(e) = cfg.validate() {
        warnings.push(e.0.clone());
        code = 2;
    } else {
        for (sel, built) in build_entries(cfg) {
            let (rep, c) = match built {
                Ok(entry) => evaluate_entry(cfg, &entry),
                Err(e) => {
                    let params = serde_json::to_value(ParamsEcho::from(&cfg.params)).expect("params serialize");
                    error_report(sel.clone(), &sel, params, &e)
                }
            };
            code = code.max(c);
            entries.push(rep);
        }
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let failed_rows = entries.iter().map(|e| e.residuals.iter().filter(|r| !r.pass).count()).sum();
    let errors = entries.iter().filter(|e| e.error.is_some()).count();
    let report = Report {
        header: Header {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            conventions: conventions(),
            config: cfg.echo(),
            warnings,
        },
        verdict: Verdict { pass: code == 0, entries: entries.len(), failed_rows, errors, exit_code: code },
        entries,
    };
    (report, code)
}

/// Equivalence suite alone: `n` random conformal maps on each entry.
pub fn run_equivalence_suite(cfg: &RunConfig, n: usize) -> (Report, i32) {
    let cfg = RunConfig { equivalence: Some(n), ..cfg.clone() };
    run(&cfg)
}

/// Renders the report in the configured format.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report::to_json(report),
        Format::Csv => report::to_csv(report),
    }
}

/// Parses `NAME=X`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError(format!("--tol expects NAME=X, got '{s}'")))?;
    let v: f64 = v.parse().map_err(|_| ConfigError(format!("--tol value '{v}' is not a number")))?;
    if !(v > 0.0) {
        return Err(ConfigError(format!("tolerance {k} must be positive, got {v}")));
    }
    Ok((k.to_string(), v))
}

pub fn parse_inner(s: &str) -> Result<InnerSpec, ConfigError> {
    InnerSpec::parse(s).map_err(|e| ConfigError(e.to_string()))
}

pub fn parse_psi(s: &str) -> Result<PsiChart, ConfigError> {
    match s {
        "1" | "psi1" => Ok(PsiChart::Psi1),
        "2" | "psi2" => Ok(PsiChart::Psi2),
        _ => Err(ConfigError(format!("--psi must be 1 or 2, got '{s}'"))),
    }
}
