use lorentz_conformal::catalog::{
    labeled_entries, make_entry, make_example_32, make_example_33, make_lifted_product, make_product_in_desitter,
    make_wp, Branch, EntryParams, Family, InnerKind, InnerSpec, LiftedKind,
};
use lorentz_conformal::checker::eigen_structure;
use lorentz_conformal::conformal::{point_invariants, Perturbation};
use lorentz_conformal::linalg::sym_eigenvalues;
use lorentz_conformal::spaceforms::PsiChart;
use lorentz_conformal::GeomError;
use proptest::prelude::*;

fn expand(spec: &[(f64, usize)]) -> Vec<f64> {
    let mut v: Vec<f64> = spec.iter().flat_map(|(x, k)| std::iter::repeat(*x).take(*k)).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

#[test]
fn labeled_entries_sit_on_their_quadric() {
    let entries = labeled_entries::<f64>().unwrap();
    assert_eq!(entries.len(), 9);
    for e in &entries {
        let q = e.chart.quadric_residual_on_grid(e.grid_points).unwrap();
        assert!(q <= 1e-10, "{}: {q}", e.id());
        if let Some(alt) = &e.alternate_chart {
            assert!(alt.quadric_residual_on_grid(e.grid_points).unwrap() <= 1e-10);
        }
    }
    let labels: Vec<Branch> = entries.iter().map(|e| e.label()).collect();
    for f in Family::ALL {
        assert!(labels.contains(&Branch::Family(f)), "{f} missing");
    }
}

#[test]
fn entries_are_deterministic() {
    let a = labeled_entries::<f64>().unwrap();
    let b = labeled_entries::<f64>().unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.id(), y.id());
        assert_eq!(x.chart.domain(), y.chart.domain());
        for p in x.chart.domain().grid(3) {
            assert_eq!(x.chart.point(&p).unwrap(), y.chart.point(&p).unwrap());
        }
    }
}

#[test]
fn pipeline_reproduces_expected_spectra() {
    for e in labeled_entries::<f64>().unwrap() {
        let ex = &e.expected;
        for p in e.chart.domain().grid(3) {
            let inv = point_invariants(&e.chart, &p, 4, Perturbation::default()).unwrap();
            if let Some(b) = &ex.b_eigenvalues {
                let got = sym_eigenvalues(&inv.b).unwrap();
                let want = expand(b);
                let dev = |s: f64| {
                    let mut w: Vec<f64> = want.iter().map(|v| s * v).collect();
                    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    got.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                };
                let d = if ex.b_up_to_sign { dev(1.0).min(dev(-1.0)) } else { dev(1.0) };
                assert!(d <= 1e-8, "{}: B {got:?} vs {want:?}", e.id());
            }
            if let Some(rho) = ex.rho {
                assert!((inv.rho - rho).abs() <= 1e-8, "{}", e.id());
            }
            if let Some(f) = &ex.rho_field {
                assert!((inv.rho - f(&p)).abs() <= 1e-8, "{}: rho {} vs {}", e.id(), inv.rho, f(&p));
            }
            if let Some((lam, d)) = &ex.d_eigenvalues {
                let dm = inv.para_blaschke(*lam).unwrap();
                let got = sym_eigenvalues(&dm).unwrap();
                let want = expand(d);
                let dev = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(dev <= 1e-6, "{}: D {got:?} vs {want:?}", e.id());
            }
            if ex.phi_zero {
                assert!(inv.phi.iter().all(|v| v.abs() <= 1e-7), "{}", e.id());
            }
        }
    }
}

#[test]
fn lifted_products_have_two_clusters() {
    for (kind, a) in [(LiftedKind::Flat, 1.0), (LiftedKind::AntiDeSitter, 0.6)] {
        let e = make_lifted_product::<f64>(kind, 3, 1, a, PsiChart::Psi1).unwrap();
        let field: Vec<_> = e
            .chart
            .domain()
            .grid(5)
            .iter()
            .map(|p| point_invariants(&e.chart, p, 3, Perturbation::default()).unwrap().b)
            .collect();
        assert_eq!(eigen_structure(&field, 1e-3).unwrap().t, 2);
    }
}

#[test]
fn warped_product_domain_keeps_away_from_the_tip() {
    let e = make_wp::<f64>(3, 1, 1, 2f64.sqrt(), PsiChart::Psi1).unwrap();
    assert_eq!(e.expected.b_distinct, Some(3));
    // axes are (hyperboloid, sphere, t); t stays in R^+ with a margin
    let t_axis = &e.chart.domain().axis_samples(9)[2];
    assert!(t_axis.iter().all(|t| *t > 0.1), "{t_axis:?}");
}

#[test]
fn guards_reject_invalid_parameters() {
    let is_param = |r: Result<_, GeomError>| matches!(r, Err(GeomError::Parameter(_)));
    assert!(is_param(make_product_in_desitter::<f64>(3, 1, 1.0).map(|_| ())));
    assert!(is_param(make_product_in_desitter::<f64>(3, 3, 2.0).map(|_| ())));
    assert!(is_param(make_lifted_product::<f64>(LiftedKind::AntiDeSitter, 3, 1, 1.0, PsiChart::Psi1).map(|_| ())));
    assert!(is_param(make_lifted_product::<f64>(LiftedKind::Flat, 3, 1, -1.0, PsiChart::Psi1).map(|_| ())));
    assert!(is_param(make_wp::<f64>(3, 1, 2, 2.0, PsiChart::Psi1).map(|_| ())));
    assert!(is_param(make_wp::<f64>(3, 1, 1, 0.9, PsiChart::Psi1).map(|_| ())));
    assert!(is_param(make_example_32::<f64>(3, 3, 1.0, InnerSpec::Auto, None).map(|_| ())));
    assert!(is_param(make_example_33::<f64>(3, 2, -1.0, InnerSpec::Auto, None, 1).map(|_| ())));
    assert!(is_param(make_entry::<f64>(Family::from_id("product-ds").unwrap(), &EntryParams { a: 0.5, ..Default::default() })
        .map(|_| ())));
    let err = Family::from_id("torus").unwrap_err().to_string();
    assert!(err.contains("product-ds") && err.contains("example33"), "{err}");
}

#[test]
fn cone_at_lambda_zero_reports_constraint_residuals() {
    for build in [
        make_example_32::<f64>(3, 2, 1.0, InnerSpec::Auto, Some(0.0)).map(|_| ()),
        make_example_33::<f64>(3, 2, 1.0, InnerSpec::Auto, Some(0.0), 1).map(|_| ()),
    ] {
        match build {
            Err(GeomError::NoAdmissibleInner(msg)) => {
                assert!(msg.contains("lambda = 0"), "{msg}");
                assert!(msg.contains("umbilic"), "{msg}");
            }
            other => panic!("expected NoAdmissibleInner, got {other:?}"),
        }
    }
}

#[test]
fn cone_inner_solutions_satisfy_their_constraints() {
    let cases = [
        make_example_32::<f64>(3, 2, 1.0, InnerSpec::Auto, None).unwrap(),
        make_example_32::<f64>(4, 3, 1.0, InnerSpec::Auto, None).unwrap(),
        make_example_32::<f64>(4, 2, 2.0, InnerSpec::Auto, None).unwrap(),
        make_example_32::<f64>(3, 2, 0.5, InnerSpec::Auto, Some(-2.0 / 3.0)).unwrap(),
        make_example_33::<f64>(3, 2, 3f64.sqrt(), InnerSpec::Auto, Some(0.0), 1).unwrap(),
        make_example_33::<f64>(3, 2, 1.0, InnerSpec::Auto, None, -1).unwrap(),
    ];
    for e in &cases {
        let s = e.inner.as_ref().expect("cone entries record their inner solution");
        for r in [s.trace_residual, s.norm_residual, s.scalar_residual, s.mean_residual] {
            assert!(r <= 1e-10, "{}: {r}", e.id());
        }
        assert_eq!(e.lambda(), Some(s.lambda));
        assert_eq!(e.expected.t, Some(2));
    }
    assert!(matches!(cases[0].inner.as_ref().unwrap().kind, InnerKind::Umbilic { .. }));
    assert!((cases[0].lambda().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn cone_with_no_product_inner_is_reported() {
    assert!(matches!(
        make_example_33::<f64>(4, 3, 1.0, InnerSpec::Product(1), None, 1),
        Err(GeomError::NoAdmissibleInner(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn expected_b_is_trace_free_with_fixed_norm(m in 3usize..7, k_off in 0usize..5, a in 1.05f64..4.0) {
        let k = 1 + k_off % (m - 1);
        let e = make_product_in_desitter::<f64>(m, k, a).unwrap();
        let b = expand(e.expected.b_eigenvalues.as_ref().unwrap());
        let tr: f64 = b.iter().sum();
        let nrm: f64 = b.iter().map(|v| v * v).sum();
        prop_assert!(tr.abs() < 1e-12);
        prop_assert!((nrm - (m as f64 - 1.0) / m as f64).abs() < 1e-12);
    }
}
