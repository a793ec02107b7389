use lorentz_conformal::catalog::make_product_in_desitter;
use lorentz_conformal::chart::{Ambient, Domain, ImmersionChart, Interval};
use lorentz_conformal::hypersurface::{
    christoffels, conformal_factor, covariant_hessian_logrho, first_fundamental, gauss_equation_defect,
    second_fundamental,
};
use lorentz_conformal::linalg::sym_eigenvalues;
use lorentz_conformal::{GeomError, Jet};
use proptest::prelude::*;

fn boxed(m: usize, half: f64) -> Domain {
    Domain::new(vec![Interval::closed(-half, half); m])
}

/// Graph of `u -> sqrt(1 - |u|^2)` completed to the unit sphere `S^m(1)`,
/// placed in the slice `x_0 = sinh t` of de Sitter space.
fn sphere_slice(m: usize, t: f64) -> ImmersionChart<f64> {
    ImmersionChart::new(m, Ambient::DeSitter(1.0), boxed(m, 0.4), "sphere slice", move |u: &[Jet]| {
        let r = t.cosh();
        let mut s = u[0].constant_like(1.0);
        for ui in u {
            s -= &ui.square();
        }
        let last = s.sqrt()?;
        let mut x = vec![u[0].constant_like(t.sinh())];
        x.extend(u.iter().map(|ui| ui * r));
        x.push(last * r);
        Ok(x)
    })
    .unwrap()
}

/// A non-isoparametric graph over the equatorial sphere.
fn generic_chart() -> ImmersionChart<f64> {
    ImmersionChart::new(3, Ambient::DeSitter(1.0), boxed(3, 0.3), "generic", |u: &[Jet]| {
        let f = u[0].sin() * 0.3 + (&u[1] * &u[2]) * 0.2 + u[2].square() * 0.1;
        let s = (f.square() + 1.0).sqrt()?;
        let r2 = &(&u[0].square() + &u[1].square()) + &u[2].square();
        let last = (-r2 + 1.0).sqrt()?;
        Ok(vec![f, &s * &u[0], &s * &u[1], &s * &u[2], &s * &last])
    })
    .unwrap()
}

#[test]
fn product_principal_curvatures_match_closed_form() {
    let a = 2f64.sqrt();
    let entry = make_product_in_desitter::<f64>(3, 1, a).unwrap();
    let alpha = (a * a - 1.0).sqrt() / a;
    let beta = a / (a * a - 1.0).sqrt();
    let h_mean = (2.0 * alpha + beta) / 3.0;
    assert!((h_mean - 0.9428090415820634).abs() < 1e-15);
    for p in entry.chart.domain().grid(3) {
        let (h, mean) = second_fundamental(&entry.chart, &p).unwrap();
        let mut ev = sym_eigenvalues(&h).unwrap();
        // the future-pointing normal may be the opposite of the outward one
        let sign = mean.signum();
        ev.iter_mut().for_each(|v| *v *= sign);
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in ev.iter().zip([alpha, alpha, beta]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
        assert!((mean.abs() - h_mean).abs() < 1e-12);
        let rho = conformal_factor(&entry.chart, &p).unwrap();
        assert!((rho - 0.5f64.sqrt()).abs() < 1e-12);
        // rho = sqrt(k(m-k)/(m-1)) (beta - alpha) with k(m-k)/(m-1) = 1
        assert!((rho - (beta - alpha)).abs() < 1e-12);
    }
}

#[test]
fn product_metric_is_block_diagonal() {
    let entry = make_product_in_desitter::<f64>(3, 1, 1.5).unwrap();
    for p in entry.chart.domain().grid(3) {
        let g = first_fundamental(&entry.chart, &p).unwrap();
        assert!(g[(0, 1)].abs() < 1e-14 && g[(0, 2)].abs() < 1e-14, "{g:?}");
    }
}

#[test]
fn constant_rho_has_vanishing_log_hessian() {
    let entry = make_product_in_desitter::<f64>(3, 2, 1.3).unwrap();
    for p in entry.chart.domain().grid(3) {
        assert!(covariant_hessian_logrho(&entry.chart, &p).unwrap().max_abs() < 1e-10);
    }
}

#[test]
fn totally_geodesic_sphere_is_umbilic() {
    let c = sphere_slice(3, 0.0);
    let (h, mean) = second_fundamental(&c, &[0.1, -0.2, 0.05]).unwrap();
    assert!(h.max_abs() < 1e-13 && mean.abs() < 1e-13);
    assert!(matches!(conformal_factor(&c, &[0.1, -0.2, 0.05]), Err(GeomError::Umbilic(_))));
}

#[test]
fn sphere_slices_are_umbilic() {
    let c = sphere_slice(3, 0.7);
    let (h, mean) = second_fundamental(&c, &[0.2, 0.1, -0.3]).unwrap();
    // h = tanh(t) I up to orientation
    assert!((mean.abs() - 0.7f64.tanh()).abs() < 1e-12);
    let shifted = &h - &lorentz_conformal::Mat::identity(3).scale(mean);
    assert!(shifted.max_abs() < 1e-12);
    assert!(conformal_factor(&c, &[0.2, 0.1, -0.3]).is_err());
}

#[test]
fn flipping_the_normal_negates_h() {
    let c = generic_chart();
    let p = [0.05, -0.1, 0.2];
    let (h, mean) = second_fundamental(&c, &p).unwrap();
    let (hf, meanf) = second_fundamental(&c.clone().with_flipped_normal(true), &p).unwrap();
    assert!((&h + &hf).max_abs() < 1e-14);
    assert!((mean + meanf).abs() < 1e-14);
}

#[test]
fn flat_isometric_chart() {
    let c = ImmersionChart::new(2, Ambient::Minkowski, boxed(2, 1.0), "flat", |u: &[Jet]| {
        Ok(vec![u[0].constant_like(0.0), u[0].clone(), u[1].clone()])
    })
    .unwrap();
    let p = [0.3, -0.4];
    let g = first_fundamental(&c, &p).unwrap();
    assert!((&g - &lorentz_conformal::Mat::identity(2)).max_abs() < 1e-15);
    assert!(christoffels(&c, &p).unwrap().iter().all(|m| m.max_abs() < 1e-15));
    let x = c.evaluate(&p, 4).unwrap();
    for (i, xi) in x.iter().enumerate().skip(1) {
        assert_eq!(xi.gradient()[i - 1], 1.0);
        assert!(xi.coeffs()[3..].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn sphere_second_partials_match_differences() {
    // round S^2(1) in R^3 via the lower-dimensional de Sitter slice t = 0
    let c = sphere_slice(2, 0.0);
    let p = [0.2, -0.15];
    let x = c.evaluate(&p, 4).unwrap();
    let f = |q: [f64; 2]| c.point(&q).unwrap();
    let h = 1e-4;
    for a in 0..2 {
        for b in 0..2 {
            let at = |sa: f64, sb: f64| {
                let mut q = p;
                q[a] += sa;
                q[b] += sb;
                f(q)
            };
            let d = |s: f64| -> Vec<f64> {
                let (pp, pm, mp, mm) = (at(s, s), at(s, -s), at(-s, s), at(-s, -s));
                (0..pp.len()).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * s * s)).collect()
            };
            let (d1, d2) = (d(h), d(h / 2.0));
            for (k, xk) in x.iter().enumerate() {
                let fd = (4.0 * d2[k] - d1[k]) / 3.0;
                let mut multi = [0u8; 2];
                multi[a] += 1;
                multi[b] += 1;
                let got = xk.partial(&multi);
                assert!((got - fd).abs() <= 1e-6 * got.abs().max(1.0), "x{k} d{a}d{b}: {got} vs {fd}");
            }
        }
    }
}

#[test]
fn outside_domain_is_rejected() {
    let c = generic_chart();
    assert!(matches!(c.evaluate(&[0.5, 0.0, 0.0], 2), Err(GeomError::OutsideDomain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gauss_equation_holds_on_generic_chart(x in -0.25f64..0.25, y in -0.25f64..0.25, z in -0.25f64..0.25) {
        let c = generic_chart();
        prop_assert!(gauss_equation_defect(&c, &[x, y, z]).unwrap() < 1e-10);
    }

    #[test]
    fn mean_curvature_is_trace_over_m(x in -0.25f64..0.25, y in -0.25f64..0.25, z in -0.25f64..0.25) {
        let c = generic_chart();
        let (h, mean) = second_fundamental(&c, &[x, y, z]).unwrap();
        prop_assert!((h.trace() / 3.0 - mean).abs() < 1e-14);
        prop_assert!(h.asymmetry() < 1e-13);
    }
}
