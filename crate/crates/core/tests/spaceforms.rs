use lorentz_conformal::catalog::{lifted_product_inner, make_lifted_product, LiftedKind};
use lorentz_conformal::chart::{Ambient, Domain, ImmersionChart, Interval};
use lorentz_conformal::conformal::{align_orientation, light_cone_metric, point_invariants, Perturbation};
use lorentz_conformal::pseudo_linalg::{random_pseudo_orthogonal, PseudoOrthogonalMap, SignatureMetric};
use lorentz_conformal::spaceforms::{
    act_and_reproject, embed_sigma, invert_anti_de_sitter_route, invert_flat_route, lift_composed_chart, project_psi,
    PsiChart, SigmaKind,
};
use lorentz_conformal::sweep::compare_invariants;
use lorentz_conformal::Jet;
use proptest::prelude::*;

fn light_dot(y: &[f64]) -> f64 {
    SignatureMetric::new(y.len(), 2).unwrap().dot(y, y)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn flat_route_lands_on_the_cone_and_inverts(u in prop::collection::vec(-1.5f64..1.5, 4)) {
        let y = embed_sigma(SigmaKind::Flat, &u).unwrap();
        let scale: f64 = y.rep().iter().map(|v| v * v).sum();
        prop_assert!(light_dot(y.rep()).abs() <= 1e-12 * scale.max(1.0));
        for which in [PsiChart::Psi1, PsiChart::Psi2] {
            if let Ok(x) = project_psi(which, &y) {
                prop_assert!((SignatureMetric::lorentz(x.len()).dot(&x, &x) - 1.0).abs() < 1e-9);
                let back = invert_flat_route(which, &x).unwrap();
                for (a, b) in back.iter().zip(&u) {
                    prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn anti_de_sitter_route_inverts(v in prop::collection::vec(-1.0f64..1.0, 3), t in -1.0f64..1.0) {
        // u in H^4_1: <u,u>_2 = -1 with two time-like slots
        let s: f64 = v.iter().map(|x| x * x).sum();
        let r = (1.0 + s).sqrt();
        let u = vec![r * t.cos(), r * t.sin(), v[0], v[1], v[2]];
        let y = embed_sigma(SigmaKind::AntiDeSitter, &u).unwrap();
        prop_assert!(light_dot(y.rep()).abs() < 1e-12);
        for which in [PsiChart::Psi1, PsiChart::Psi2] {
            if let Ok(x) = project_psi(which, &y) {
                let back = invert_anti_de_sitter_route(which, &x).unwrap();
                // the projective class fixes u only up to sign
                let sign = (back[4] * u[4] + back[0] * u[0] + back[1] * u[1]).signum();
                for (a, b) in back.iter().zip(&u) {
                    prop_assert!((sign * a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pseudo_orthogonal_maps_preserve_the_form(seed in any::<u64>()) {
        let metric = light_cone_metric(3);
        let t = random_pseudo_orthogonal::<f64>(&metric, seed).unwrap();
        prop_assert!(t.defect() <= 1e-10);
        let again = random_pseudo_orthogonal::<f64>(&metric, seed).unwrap();
        prop_assert_eq!(t.matrix(), again.matrix());
        let id = t.compose(&t.inverse());
        prop_assert!((id.matrix() - &lorentz_conformal::Mat::identity(6)).max_abs() < 1e-9);
    }
}

#[test]
fn de_sitter_route_is_the_identity_on_psi2() {
    let u = [0.3f64, 0.2, -0.5, (1.0f64 + 0.09 - 0.04 - 0.25).sqrt()];
    let y = embed_sigma(SigmaKind::DeSitter, &u).unwrap();
    let x = project_psi(PsiChart::Psi2, &y).unwrap();
    for (a, b) in x.iter().zip(&u) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn lifted_anti_de_sitter_product_stays_on_the_quadric() {
    for which in [PsiChart::Psi1, PsiChart::Psi2] {
        let inner = lifted_product_inner::<f64>(LiftedKind::AntiDeSitter, 3, 1, 0.6).unwrap();
        let lifted = lift_composed_chart(&inner, which).unwrap();
        assert!(lifted.quadric_residual_on_grid(9).unwrap() <= 1e-10);
        for p in lifted.domain().grid(3) {
            assert!(point_invariants(&lifted, &p, 4, Perturbation::default()).unwrap().rho > 0.0);
        }
    }
}

#[test]
fn constant_section_is_not_an_immersion() {
    let d = Domain::new(vec![Interval::closed(-0.2, 0.2); 3]);
    let inner = ImmersionChart::new(3, Ambient::Minkowski, d, "constant", |u: &[Jet]| {
        Ok((0..4).map(|_| u[0].constant_like(0.0)).collect())
    })
    .unwrap();
    let lifted = lift_composed_chart(&inner, PsiChart::Psi1).unwrap();
    assert!(point_invariants(&lifted, &[0.0, 0.0, 0.0], 3, Perturbation::default()).is_err());
}

#[test]
fn identity_map_changes_nothing() {
    let entry = make_lifted_product::<f64>(LiftedKind::Flat, 3, 1, 1.0, PsiChart::Psi1).unwrap();
    let id = PseudoOrthogonalMap::identity(light_cone_metric(3));
    let moved = act_and_reproject(&id, &entry.chart).unwrap();
    let pts = entry.chart.domain().grid(3);
    let dev = compare_invariants(&entry.chart, &moved, &pts, 4).unwrap();
    assert!(dev <= 1e-12, "{dev} {}", moved.label());
}

#[test]
fn block_swap_preserves_invariants() {
    for kind in [LiftedKind::Flat, LiftedKind::AntiDeSitter] {
        let a = if kind == LiftedKind::Flat { 1.0 } else { 0.6 };
        let entry = make_lifted_product::<f64>(kind, 3, 1, a, PsiChart::Psi1).unwrap();
        let swap = PseudoOrthogonalMap::block_swap(light_cone_metric(3)).unwrap();
        let moved = act_and_reproject(&swap, &entry.chart).unwrap();
        let center = moved.domain().center();
        let moved = align_orientation(&entry.chart, moved, &center).unwrap();
        let pts = moved.domain().grid(3);
        let dev = compare_invariants(&entry.chart, &moved, &pts, 4).unwrap();
        assert!(dev <= 1e-8, "{kind:?}: {dev}");
    }
}

#[test]
fn two_projective_charts_agree_on_their_overlap() {
    for kind in [LiftedKind::Flat, LiftedKind::AntiDeSitter] {
        let a = if kind == LiftedKind::Flat { 1.0 } else { 0.6 };
        let entry = make_lifted_product::<f64>(kind, 3, 1, a, PsiChart::Psi1).unwrap();
        let alt = entry.alternate_chart.as_ref().expect("lifted entries carry the other chart");
        let pts = entry.chart.domain().grid(3);
        assert!(compare_invariants(&entry.chart, alt, &pts, 4).unwrap() <= 1e-8);
    }
}
