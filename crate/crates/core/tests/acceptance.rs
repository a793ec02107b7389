//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when an
//! attainable criterion fails.

mod common;

use std::time::Instant;

use lorentz_conformal::catalog::{
    labeled_entries, make_example_32, make_example_33, make_product_in_desitter, CatalogEntry, Family, InnerSpec,
    Spectrum,
};
use lorentz_conformal::checker::{classify, eigen_structure, Thresholds};
use lorentz_conformal::conformal::Perturbation;
use lorentz_conformal::linalg::{sym_eigenvalues, Mat};
use lorentz_conformal::sweep::{compare_invariants, equivalence_suite, sweep_chart, Sweep, SweepOptions};
use lorentz_conformal::GeomError;

struct Outcome {
    failed_attainable: Vec<String>,
}

impl Outcome {
    fn line(&mut self, label: &str, pass: bool, text: String) {
        println!("criterion {label:>3} {} {text}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed_attainable.push(label.to_string());
        }
    }

    /// A criterion with no admissible construction: reported, never counted.
    fn unattainable(&mut self, label: &str, text: String) {
        println!("criterion {label:>3} FAIL {text} [unattainable, see README]");
    }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

fn expand(spec: &Spectrum) -> Vec<f64> {
    sorted_desc(spec.iter().flat_map(|(x, k)| std::iter::repeat(*x).take(*k)).collect())
}

fn spectrum_gap(field: &[Mat<f64>], want: &[f64]) -> f64 {
    field
        .iter()
        .map(|m| {
            let got = sorted_desc(sym_eigenvalues(&m.symmetric_part()).unwrap());
            got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest value of the stats selected by `pick` over all sweeps, with the
/// entry and stat where it occurs.
fn worst(runs: &[(CatalogEntry<f64>, Sweep)], pick: impl Fn(&str) -> bool) -> (f64, String) {
    let mut out = (0.0f64, String::from("-"));
    for (e, sw) in runs {
        for s in sw.stats.iter().filter(|s| pick(&s.name)) {
            if !(s.max <= out.0) {
                out = (s.max, format!("{} {}", e.id(), s.name));
            }
        }
    }
    out
}

fn is_integrability(name: &str) -> bool {
    name.starts_with("phi_curl") || name.starts_with("codazzi")
}

fn is_frame(name: &str) -> bool {
    matches!(
        name,
        "lap_y" | "y_null" | "n_null" | "y_n" | "xi_norm" | "frame_orthogonality" | "a_from_frame" | "b_from_frame"
    ) || name.starts_with("row_")
}

fn entry_lambdas(e: &CatalogEntry<f64>) -> Vec<f64> {
    match (e.family, e.m(), e.params.k) {
        (Family::ProductDeSitter, 3, 1) => vec![0.0, 0.5, 1.0],
        _ => vec![e.lambda().unwrap_or(0.0)],
    }
}

fn run_sweep(e: &CatalogEntry<f64>, lambdas: Vec<f64>) -> Sweep {
    sweep_chart(&e.chart, &SweepOptions { lambdas, ..SweepOptions::default() })
        .unwrap_or_else(|err| panic!("{}: {err}", e.id()))
}

/// Expected-value checks of a cone entry: `(rho gap, D gap, Phi max, grad D max)`.
fn cone_oracle(e: &CatalogEntry<f64>, sw: &Sweep) -> (f64, f64, f64, f64) {
    let lambda = e.lambda().unwrap();
    let rho = e.expected.rho_field.as_ref().map_or(0.0, |f| {
        sw.samples.iter().map(|s| (s.rho - f(&s.point)).abs()).fold(0.0, f64::max)
    });
    let (l, spec) = e.expected.d_eigenvalues.as_ref().unwrap();
    assert_eq!(*l, lambda);
    let d = spectrum_gap(&sw.d_field(lambda).unwrap(), &expand(spec));
    (rho, d, sw.phi_max, sw.grad_d_max[0])
}

fn main() {
    let start = Instant::now();
    let mut out = Outcome { failed_attainable: Vec::new() };
    let th = Thresholds::default();

    let runs: Vec<(CatalogEntry<f64>, Sweep)> = labeled_entries::<f64>()
        .unwrap()
        .into_iter()
        .map(|e| {
            let sw = run_sweep(&e, entry_lambdas(&e));
            (e, sw)
        })
        .collect();

    // 1
    let dims: std::collections::BTreeSet<usize> = runs.iter().map(|(e, _)| e.m()).collect();
    let (tr, tr_at) = worst(&runs, |n| n == "trace_b");
    let (nb, nb_at) = worst(&runs, |n| n == "norm_b");
    out.line(
        "1",
        tr <= 1e-9 && nb <= 1e-7 && [3, 4, 5].iter().all(|m| dims.contains(m)),
        format!("trace and norm of B over m in {dims:?}: |tr B| {tr:.2e} ({tr_at}) <= 1e-9, ||B|^2 - (m-1)/m| {nb:.2e} ({nb_at}) <= 1e-7"),
    );

    // 2
    let (br, br_at) = worst(&runs, |n| n == "blaschke_routes");
    out.line("2", br <= 1e-6, format!("Blaschke tensor, curvature route vs frame route: {br:.2e} ({br_at}) <= 1e-6"));

    // 3
    let (ir, ir_at) = worst(&runs, |n| is_integrability(n) || n == "gauss" || n == "bianchi");
    let mut unrefined = Vec::new();
    for (e, sw) in &runs {
        for s in sw.stats.iter().filter(|s| s.fd_based && (is_integrability(&s.name) || s.name.starts_with("row_"))) {
            if s.refinement_ok() != Some(true) {
                unrefined.push(format!("{} {} {:.2e} -> {:?}", e.id(), s.name, s.max, s.refined));
            }
        }
    }
    out.line(
        "3",
        ir <= 1e-5 && unrefined.is_empty(),
        format!(
            "integrability residuals {ir:.2e} ({ir_at}) <= 1e-5; halving the step cuts every residual by 4x or reaches 1e-10: {}",
            if unrefined.is_empty() { "yes".to_string() } else { unrefined.join("; ") }
        ),
    );

    // 4
    let (fr, fr_at) = worst(&runs, is_frame);
    out.line("4", fr <= 1e-6, format!("moving-frame identities {fr:.2e} ({fr_at}) <= 1e-6"));

    // 5 and 6 at the stated parameters, then the admissible variants
    match make_example_32::<f64>(3, 2, 1.0, InnerSpec::Auto, Some(0.0)) {
        Err(GeomError::NoAdmissibleInner(msg)) => {
            out.unattainable("5", format!("example32(m=3,K=2,r=1,lambda=0): no admissible inner hypersurface: {msg}"))
        }
        Err(err) => out.line("5", false, format!("example32(m=3,K=2,r=1,lambda=0): {err}")),
        Ok(e) => {
            let sw = run_sweep(&e, vec![0.0]);
            let (rho, d, phi, gd) = cone_oracle(&e, &sw);
            let want = [0.5, 0.5, -0.5];
            let dp = spectrum_gap(&sw.d_field(0.0).unwrap(), &want);
            out.line(
                "5",
                rho <= 1e-8 && d <= 1e-6 && dp <= 1e-6 && phi <= 1e-7 && gd <= 1e-5,
                format!("example32 lambda=0: rho {rho:.2e}, D0 {dp:.2e}, Phi {phi:.2e}, grad D0 {gd:.2e}"),
            );
        }
    }
    let (e32, sw32) = runs.iter().find(|(e, _)| e.family == Family::Example32).unwrap();
    let (rho, d, phi, gd) = cone_oracle(e32, sw32);
    out.line(
        "5a",
        rho <= 1e-8 && d <= 1e-6 && phi <= 1e-7 && gd <= 1e-5,
        format!(
            "{} admissible variant: rho vs y0 {rho:.2e} <= 1e-8, D eigenvalues {d:.2e} <= 1e-6, Phi {phi:.2e} <= 1e-7, grad D {gd:.2e} <= 1e-5",
            e32.id()
        ),
    );

    let mut stated = Vec::new();
    for eps in [1i8, -1] {
        match make_example_33::<f64>(3, 2, 1.0, InnerSpec::Auto, Some(0.0), eps) {
            Err(GeomError::NoAdmissibleInner(msg)) => stated.push(Err(format!("eps={eps}: {msg}"))),
            Err(err) => stated.push(Ok((false, format!("eps={eps}: {err}")))),
            Ok(e) => {
                let sw = run_sweep(&e, vec![0.0]);
                let dp = spectrum_gap(&sw.d_field(0.0).unwrap(), &[0.5, -0.5, -0.5]);
                stated.push(Ok((dp <= 1e-6 && sw.phi_max <= 1e-7, format!("eps={eps}: D0 {dp:.2e}, Phi {:.2e}", sw.phi_max))));
            }
        }
    }
    if let Some(Err(msg)) = stated.iter().find(|r| r.is_err()) {
        out.unattainable("6", format!("example33(m=3,K=2,r=1,lambda=0): no admissible inner hypersurface: {msg}"));
    } else {
        let pass = stated.iter().all(|r| matches!(r, Ok((true, _))));
        let text: Vec<String> = stated.iter().filter_map(|r| r.as_ref().ok().map(|x| x.1.clone())).collect();
        out.line("6", pass, format!("example33 lambda=0: {}", text.join("; ")));
    }
    let mut texts = Vec::new();
    let mut pass = true;
    for eps in [1i8, -1] {
        let e = make_example_33::<f64>(3, 2, 3f64.sqrt(), InnerSpec::Auto, Some(0.0), eps).unwrap();
        let sw = run_sweep(&e, vec![0.0]);
        let (_, d, phi, gd) = cone_oracle(&e, &sw);
        pass &= d <= 1e-6 && phi <= 1e-7 && gd <= 1e-5;
        texts.push(format!("{}: D0 {d:.2e}, Phi {phi:.2e}, grad D0 {gd:.2e}", e.id()));
    }
    out.line("6a", pass, format!("admissible lambda=0 variants, both eps: {}", texts.join("; ")));

    // 7
    let (wp, wsw) = runs.iter().find(|(e, _)| e.family == Family::WarpedProduct && e.m() == 3).unwrap();
    let bs = eigen_structure(&wsw.b_field(), th.cluster).unwrap();
    out.line(
        "7",
        bs.t == 3 && bs.deviation <= 1e-6 && wsw.grad_b_max <= 1e-5 && wsw.phi_max <= 1e-7,
        format!(
            "{}: {} distinct B eigenvalues {:?}, spread {:.2e} <= 1e-6, grad B {:.2e} <= 1e-5, Phi {:.2e} <= 1e-7",
            wp.id(),
            bs.t,
            bs.values,
            bs.deviation,
            wsw.grad_b_max,
            wsw.phi_max
        ),
    );

    // 8: principal curvatures of S^2(a) x H^1 in closed form
    let (pd, psw) = runs
        .iter()
        .find(|(e, _)| e.family == Family::ProductDeSitter && e.m() == 3)
        .unwrap();
    let a = 2f64.sqrt();
    let (alpha, beta) = ((a * a - 1.0).sqrt() / a, a / (a * a - 1.0).sqrt());
    let kappa = [alpha, alpha, beta];
    let h = kappa.iter().sum::<f64>() / 3.0;
    let rho = (1.5 * kappa.iter().map(|k| (k - h).powi(2)).sum::<f64>()).sqrt();
    let b_oracle = sorted_desc(kappa.iter().map(|k| (k - h) / rho).collect());
    let stated = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
    let oracle_gap = b_oracle.iter().zip(&stated).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let rho_gap = psw.samples.iter().map(|s| (s.rho - 0.5f64.sqrt()).abs()).fold(0.0, f64::max);
    let b_gap = spectrum_gap(&psw.b_field(), &b_oracle);
    let gd = psw.grad_d_max.iter().fold(0.0f64, |x, v| x.max(*v));
    out.line(
        "8",
        (rho - 0.5f64.sqrt()).abs() <= 1e-12
            && oracle_gap <= 1e-12
            && rho_gap <= 1e-8
            && b_gap <= 1e-8
            && psw.grad_b_max <= 1e-5
            && gd <= 1e-5
            && psw.lambdas == [0.0, 0.5, 1.0],
        format!(
            "{}: rho - 1/sqrt2 {rho_gap:.2e}, B vs (-1/3,-1/3,2/3) {b_gap:.2e} <= 1e-8, grad B {:.2e}, grad D for lambda {:?} {gd:.2e} <= 1e-5",
            pd.id(),
            psw.grad_b_max,
            psw.lambdas
        ),
    );

    // 9
    let mut overlap = (0.0f64, String::new());
    let mut routes = Vec::new();
    for (e, _) in &runs {
        if let Some(alt) = &e.alternate_chart {
            let pts = e.chart.domain().grid(3);
            let dev = compare_invariants(&e.chart, alt, &pts, 4).unwrap();
            routes.push(e.family.id());
            if dev >= overlap.0 {
                overlap = (dev, e.id());
            }
        }
    }
    out.line(
        "9",
        overlap.0 <= 1e-8 && routes.contains(&"product-flat") && routes.contains(&"product-ads") && routes.contains(&"wp"),
        format!("two projective charts over {routes:?}: {:.2e} ({}) <= 1e-8", overlap.0, overlap.1),
    );

    // 10
    let eq = equivalence_suite(&pd.chart, 20, 7, 3, 4).unwrap();
    out.line(
        "10",
        eq.trials == 20 && eq.skipped.is_empty() && eq.max_deviation <= 1e-6,
        format!(
            "20 seeded random maps (seed 7) on {}: max deviation {:.2e} <= 1e-6, {} skipped",
            pd.id(),
            eq.max_deviation,
            eq.skipped.len()
        ),
    );

    // 11
    let mut parallel = 0;
    let mut phi_worst = 0.0f64;
    for (_, sw) in &runs {
        if sw.grad_d_max.iter().any(|g| *g <= 1e-5) {
            parallel += 1;
            phi_worst = phi_worst.max(sw.phi_max);
        }
    }
    out.line(
        "11",
        parallel > 0 && phi_worst <= 1e-7,
        format!("{parallel} entries with parallel D: max Phi {phi_worst:.2e} <= 1e-7"),
    );

    // 12
    let mut consistent = 0;
    let mut misses = Vec::new();
    for (e, sw) in &runs {
        let lambda = e.lambda().unwrap_or(0.0);
        let v = classify(&sw.classifier_input(lambda).unwrap(), &th);
        if v.is_consistent_with(e.label()) {
            consistent += 1;
        } else {
            misses.push(format!("{} -> {}", e.id(), v.branch));
        }
    }
    let control = make_product_in_desitter::<f64>(3, 1, a).unwrap();
    let mut controls = Vec::new();
    for p in [Perturbation { b11: 1e-2, phi1: 0.0 }, Perturbation { b11: 0.0, phi1: 1e-2 }] {
        let opts = SweepOptions { refine: false, perturbation: p, ..SweepOptions::default() };
        let sw = sweep_chart(&control.chart, &opts).unwrap();
        controls.push(classify(&sw.classifier_input(0.0).unwrap(), &th).branch);
    }
    out.line(
        "12",
        consistent == 9 && runs.len() == 9 && controls.iter().all(|b| b == "inconsistent"),
        format!("{consistent}/9 labeled entries branch-consistent {misses:?}; perturbed controls (B, Phi) -> {controls:?}"),
    );

    // 13
    match common::worst_partial_deviation(2024, 50, 1e-6) {
        Ok(w) => out.line("13", true, format!("50 random compositions, order-4 partials vs Richardson differences: {w:.2e} <= 1e-6")),
        Err(msg) => out.line("13", false, msg),
    }

    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if !out.failed_attainable.is_empty() {
        println!("failed: {:?}", out.failed_attainable);
        std::process::exit(1);
    }
}
