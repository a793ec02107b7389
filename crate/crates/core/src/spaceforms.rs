//! The conformal atlas of the Lorentzian space forms.
//!
//! `R^{m+3}_2` always carries its two time-like slots first. With that
//! ordering the embeddings into the light cone are
//!
//! * `sigma_0(u)  = [(q + 1, 2 u, q - 1)]`, `q = <u,u>_1`, for `u` in `R^{m+1}_1`;
//! * `sigma_1(u)  = [(u_0, 1, u_1, ..., u_{m+1})]` for `u` in `S^{m+1}_1`;
//! * `sigma_-1(u) = [(u, 1)]` for `u` in `H^{m+1}_1 \subset R^{m+2}_2`;
//!
//! and the two affine charts of the projectivized cone onto `S^{m+1}_1` are
//! `Psi1[y] = y_0^{-1} (y_1, y_2, ...)` on `y_0 != 0` and
//! `Psi2[y] = y_1^{-1} (y_0, y_2, ...)` on `y_1 != 0`.

use std::fmt;

use crate::chart::{Ambient, Domain, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::jets::Jet;
use crate::pseudo_linalg::{PseudoOrthogonalMap, SignatureMetric};
use crate::scalar::Real;

/// Smallest admissible `|denominator|` of a projective chart.
pub const CHART_EPS: f64 = 1e-12;
/// Nullity tolerance for light-cone representatives (relative).
pub const NULL_TOL: f64 = 1e-10;

/// Which space form a point lives in before entering the light cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SigmaKind {
    /// `sigma_0` on `R^{m+1}_1`.
    Flat,
    /// `sigma_1` on `S^{m+1}_1`.
    DeSitter,
    /// `sigma_-1` on `H^{m+1}_1`.
    AntiDeSitter,
}

impl SigmaKind {
    pub fn from_curvature(c: i32) -> Result<Self> {
        match c {
            0 => Ok(SigmaKind::Flat),
            1 => Ok(SigmaKind::DeSitter),
            -1 => Ok(SigmaKind::AntiDeSitter),
            _ => Err(GeomError::Parameter(format!("sigma kind must be 0, 1 or -1, got {c}"))),
        }
    }

    fn for_ambient(ambient: Ambient) -> Result<Self> {
        match ambient {
            Ambient::Minkowski => Ok(SigmaKind::Flat),
            Ambient::DeSitter(r) if r == 1.0 => Ok(SigmaKind::DeSitter),
            Ambient::AntiDeSitter(r) if r == 1.0 => Ok(SigmaKind::AntiDeSitter),
            other => Err(GeomError::Unsupported(format!("no conformal embedding for {}", other.name()))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SigmaKind::Flat => "sigma_0",
            SigmaKind::DeSitter => "sigma_1",
            SigmaKind::AntiDeSitter => "sigma_-1",
        }
    }
}

/// The two affine charts `U_1 = {y_0 != 0}`, `U_2 = {y_1 != 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PsiChart {
    Psi1,
    Psi2,
}

impl PsiChart {
    /// Slot whose value divides the others.
    pub fn denominator_slot(&self) -> usize {
        match self {
            PsiChart::Psi1 => 0,
            PsiChart::Psi2 => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PsiChart::Psi1 => "Psi1",
            PsiChart::Psi2 => "Psi2",
        }
    }

    fn region(&self) -> &'static str {
        match self {
            PsiChart::Psi1 => "U1",
            PsiChart::Psi2 => "U2",
        }
    }
}

/// Named maps of the atlas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConformalMapTag {
    Sigma(SigmaKind),
    Psi(PsiChart),
    /// `Psi o sigma_kind`, a map into `S^{m+1}_1`.
    Composed(SigmaKind, PsiChart),
}

impl fmt::Display for ConformalMapTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalMapTag::Sigma(k) => write!(f, "{}", k.name()),
            ConformalMapTag::Psi(p) => write!(f, "{}", p.name()),
            ConformalMapTag::Composed(k, p) => write!(f, "{} o {}", p.name(), k.name()),
        }
    }
}

/// A point of `Q^{m+1}_1`: a nonzero null vector of `R^{m+3}_2` up to scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveLightPoint<T> {
    rep: Vec<T>,
}

impl<T: Real> ProjectiveLightPoint<T> {
    pub fn new(rep: Vec<T>) -> Result<Self> {
        if rep.len() < 4 {
            return Err(GeomError::DimensionMismatch { expected: 4, got: rep.len() });
        }
        let metric = SignatureMetric::new(rep.len(), 2)?;
        let scale = rep.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        if scale == T::zero() {
            return Err(GeomError::Parameter("zero vector is not a point of the light cone".into()));
        }
        let q = metric.dot(&rep, &rep);
        if !(q.abs() <= T::c(NULL_TOL) * scale * scale) {
            return Err(GeomError::Quadric(q.to_f64_lossy()));
        }
        Ok(Self { rep })
    }

    pub fn rep(&self) -> &[T] {
        &self.rep
    }

    /// Representative whose first nonzero coordinate is positive.
    pub fn canonical(&self) -> Vec<T> {
        let first = self.rep.iter().find(|v| **v != T::zero()).copied().unwrap_or(T::one());
        if first < T::zero() {
            self.rep.iter().map(|v| -*v).collect()
        } else {
            self.rep.clone()
        }
    }

    pub fn metric(&self) -> SignatureMetric {
        SignatureMetric::new(self.rep.len(), 2).expect("valid")
    }

    /// Membership in the hyperplane missed by `sigma_kind`.
    pub fn in_excluded_hyperplane(&self, kind: SigmaKind) -> bool {
        let n = self.rep.len();
        let scale = self.rep.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let eps = T::c(CHART_EPS) * scale;
        let v = match kind {
            SigmaKind::Flat => self.rep[0] - self.rep[n - 1],
            SigmaKind::DeSitter => self.rep[1],
            SigmaKind::AntiDeSitter => self.rep[n - 1],
        };
        v.abs() <= eps
    }

    pub fn in_chart(&self, which: PsiChart) -> bool {
        let scale = self.rep.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        self.rep[which.denominator_slot()].abs() > T::c(CHART_EPS) * scale
    }
}

/// `sigma_kind(u)`.
pub fn embed_sigma<T: Real>(kind: SigmaKind, u: &[T]) -> Result<ProjectiveLightPoint<T>> {
    let n = u.len();
    let rep = match kind {
        SigmaKind::Flat => {
            let q = SignatureMetric::lorentz(n).dot(u, u);
            let mut rep = Vec::with_capacity(n + 2);
            rep.push(q + T::one());
            rep.extend(u.iter().map(|v| T::c(2.0) * *v));
            rep.push(q - T::one());
            rep
        }
        SigmaKind::DeSitter => {
            let q = SignatureMetric::lorentz(n).dot(u, u);
            if (q - T::one()).abs() > T::c(NULL_TOL) {
                return Err(GeomError::Quadric((q - T::one()).to_f64_lossy()));
            }
            let mut rep = Vec::with_capacity(n + 1);
            rep.push(u[0]);
            rep.push(T::one());
            rep.extend_from_slice(&u[1..]);
            rep
        }
        SigmaKind::AntiDeSitter => {
            let q = SignatureMetric::new(n, 2)?.dot(u, u);
            if (q + T::one()).abs() > T::c(NULL_TOL) {
                return Err(GeomError::Quadric((q + T::one()).to_f64_lossy()));
            }
            let mut rep = u.to_vec();
            rep.push(T::one());
            rep
        }
    };
    ProjectiveLightPoint::new(rep)
}

/// `Psi[y]`, a point of `S^{m+1}_1`.
pub fn project_psi<T: Real>(which: PsiChart, point: &ProjectiveLightPoint<T>) -> Result<Vec<T>> {
    if !point.in_chart(which) {
        return Err(GeomError::OutsideProjectiveChart {
            chart: which.region(),
            detail: format!("y_{} = 0", which.denominator_slot() + 1),
        });
    }
    let y = point.rep();
    let d = y[which.denominator_slot()];
    let mut out = Vec::with_capacity(y.len() - 1);
    match which {
        PsiChart::Psi1 => out.push(y[1] / d),
        PsiChart::Psi2 => out.push(y[0] / d),
    }
    out.extend(y[2..].iter().map(|v| *v / d));
    Ok(out)
}

/// Inverse of `Psi1 o sigma_0` on its image.
pub fn invert_flat_route<T: Real>(which: PsiChart, x: &[T]) -> Result<Vec<T>> {
    // lift x to (1, x) or (x_0, 1, x_1..) and rescale so that y_0 - y_last = 2
    let y = lift_from_desitter(which, x);
    let n = y.len();
    let s = y[0] - y[n - 1];
    if s.abs() <= T::c(CHART_EPS) {
        return Err(GeomError::AtInfinity("point lies on the hyperplane missed by sigma_0".into()));
    }
    Ok(y[1..n - 1].iter().map(|v| *v / s).collect())
}

/// Inverse of `Psi o sigma_-1` on its image.
pub fn invert_anti_de_sitter_route<T: Real>(which: PsiChart, x: &[T]) -> Result<Vec<T>> {
    let y = lift_from_desitter(which, x);
    let n = y.len();
    let s = y[n - 1];
    if s.abs() <= T::c(CHART_EPS) {
        return Err(GeomError::AtInfinity("point lies on the hyperplane missed by sigma_-1".into()));
    }
    Ok(y[..n - 1].iter().map(|v| *v / s).collect())
}

fn lift_from_desitter<T: Real>(which: PsiChart, x: &[T]) -> Vec<T> {
    let mut y = Vec::with_capacity(x.len() + 1);
    match which {
        PsiChart::Psi1 => {
            y.push(T::one());
            y.extend_from_slice(x);
        }
        PsiChart::Psi2 => {
            y.push(x[0]);
            y.push(T::one());
            y.extend_from_slice(&x[1..]);
        }
    }
    y
}

/// `sigma_kind` on jets.
pub fn sigma_jets<T: Real>(kind: SigmaKind, u: &[Jet<T>]) -> Vec<Jet<T>> {
    let one = u[0].constant_like(T::one());
    match kind {
        SigmaKind::Flat => {
            let mut q = -u[0].square();
            for c in &u[1..] {
                q += &c.square();
            }
            let mut rep = Vec::with_capacity(u.len() + 2);
            rep.push(&q + T::one());
            rep.extend(u.iter().map(|c| c * T::c(2.0)));
            rep.push(q - T::one());
            rep
        }
        SigmaKind::DeSitter => {
            let mut rep = vec![u[0].clone(), one];
            rep.extend_from_slice(&u[1..]);
            rep
        }
        SigmaKind::AntiDeSitter => {
            let mut rep = u.to_vec();
            rep.push(one);
            rep
        }
    }
}

/// `Psi` on jets.
pub fn psi_jets<T: Real>(which: PsiChart, y: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
    let slot = which.denominator_slot();
    let scale = y.iter().fold(T::zero(), |acc, j| acc.max(j.value().abs()));
    if !(y[slot].value().abs() > T::c(CHART_EPS) * scale) {
        return Err(GeomError::OutsideProjectiveChart {
            chart: which.region(),
            detail: format!("y_{} = 0", slot + 1),
        });
    }
    let inv = y[slot].recip()?;
    let mut out = Vec::with_capacity(y.len() - 1);
    out.push(&y[1 - slot] * &inv);
    out.extend(y[2..].iter().map(|c| c * &inv));
    Ok(out)
}

fn scan_points(domain: &Domain) -> Vec<Vec<f64>> {
    let mut pts = domain.corners();
    let n: usize = if domain.dim() <= 3 { 5 } else { 3 };
    // box faces included: no margins here
    let samples: Vec<Vec<f64>> = domain
        .axes
        .iter()
        .map(|a| (0..n).map(|i| a.lo + a.width() * i as f64 / (n - 1) as f64).collect())
        .collect();
    let m = domain.dim();
    for flat in 0..n.pow(m as u32) {
        let mut rem = flat;
        let mut p = vec![0.0; m];
        for ax in (0..m).rev() {
            p[ax] = samples[ax][rem % n];
            rem /= n;
        }
        pts.push(p);
    }
    pts
}

/// Chart of `Psi o sigma_kind o inner`, with `kind` chosen by the inner
/// ambient (`R^{m+1}_1`, `S^{m+1}_1` or `H^{m+1}_1`).
pub fn lift_composed_chart<T: Real>(inner: &ImmersionChart<T>, which: PsiChart) -> Result<ImmersionChart<T>> {
    let kind = SigmaKind::for_ambient(inner.ambient())?;
    let slot = which.denominator_slot();
    let mut sign = 0i8;
    for p in scan_points(inner.domain()) {
        let pt: Vec<T> = p.iter().map(|v| T::c(*v)).collect();
        let u = inner.evaluate_unchecked(&pt, 0)?;
        let y = sigma_jets(kind, &u);
        let scale = y.iter().fold(T::zero(), |acc, j| acc.max(j.value().abs()));
        let d = y[slot].value();
        let s = if d > T::zero() { 1 } else { -1 };
        if d.abs() <= T::c(CHART_EPS) * scale || (sign != 0 && s != sign) {
            return Err(GeomError::ExcludedSet {
                corner: p,
                detail: format!("{} o {} denominator vanishes on the domain box", which.name(), kind.name()),
            });
        }
        sign = s;
    }
    let inner_map = inner.map().clone();
    let label = format!("{} [{}]", inner.label(), ConformalMapTag::Composed(kind, which));
    let chart = ImmersionChart::new(inner.m(), Ambient::DeSitter(1.0), inner.domain().clone(), label, move |u| {
        let v = inner_map(u)?;
        psi_jets(which, &sigma_jets(kind, &v))
    })?;
    Ok(chart.with_flipped_normal(inner.flip_normal()))
}

/// Light-cone lift `(1, x)` of a de Sitter point as jets (the conformal
/// factor is irrelevant under the homogeneous charts).
fn cone_jets<T: Real>(x: &[Jet<T>]) -> Vec<Jet<T>> {
    let mut y = Vec::with_capacity(x.len() + 1);
    y.push(x[0].constant_like(T::one()));
    y.extend_from_slice(x);
    y
}

fn apply_jets<T: Real>(map: &PseudoOrthogonalMap<T>, y: &[Jet<T>]) -> Vec<Jet<T>> {
    let m = map.matrix();
    (0..y.len())
        .map(|i| {
            let mut acc = y[0].constant_like(T::zero());
            for (j, yj) in y.iter().enumerate() {
                let c = m[(i, j)];
                if c != T::zero() {
                    acc += &(yj * c);
                }
            }
            acc
        })
        .collect()
}

/// Smallest `|y_slot| / |y|` of `T (1, x)` over the scan points, or `None`
/// when the sign changes.
fn chart_margin<T: Real>(chart: &ImmersionChart<T>, map: &PseudoOrthogonalMap<T>, domain: &Domain, slot: usize) -> Result<Option<f64>> {
    let mut sign = 0i8;
    let mut margin = f64::INFINITY;
    for p in scan_points(domain) {
        let pt: Vec<T> = p.iter().map(|v| T::c(*v)).collect();
        let x: Vec<T> = chart.evaluate_unchecked(&pt, 0)?.iter().map(|j| j.value()).collect();
        let mut y = vec![T::one()];
        y.extend(x);
        let ty = map.apply(&y);
        let scale = ty.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let d = ty[slot];
        let s = if d > T::zero() { 1 } else { -1 };
        if sign != 0 && s != sign {
            return Ok(None);
        }
        sign = s;
        margin = margin.min((d.abs() / scale).to_f64_lossy());
    }
    Ok(Some(margin))
}

/// Relative margin above which `Psi1` is used even if `Psi2` has more room.
const PREFERRED_MARGIN: f64 = 1e-2;

/// The chart `p -> Psi(T Y(p))`, preferring `Psi1`, else the affine chart with the larger
/// margin and shrinking the domain box when neither covers it.
pub fn act_and_reproject<T: Real>(map: &PseudoOrthogonalMap<T>, chart: &ImmersionChart<T>) -> Result<ImmersionChart<T>> {
    if !matches!(chart.ambient(), Ambient::DeSitter(r) if r == 1.0) {
        return Err(GeomError::Unsupported("act_and_reproject expects a chart into S^(m+1)_1".into()));
    }
    let m = chart.m();
    if map.metric().dim() != m + 3 || map.metric().timelike() != 2 {
        return Err(GeomError::DimensionMismatch { expected: m + 3, got: map.metric().dim() });
    }
    let mut domain = chart.domain().clone();
    for _ in 0..5 {
        let mut best: Option<(f64, PsiChart)> = None;
        for which in [PsiChart::Psi1, PsiChart::Psi2] {
            if let Some(margin) = chart_margin(chart, map, &domain, which.denominator_slot())? {
                // Psi1 inverts the (1, x) lift, so it is kept whenever usable
                let keep_psi1 = matches!(best, Some((b, PsiChart::Psi1)) if b >= PREFERRED_MARGIN);
                if margin > 1e-6 && !keep_psi1 && best.map_or(true, |(b, _)| margin > b) {
                    best = Some((margin, which));
                }
            }
        }
        if let Some((_, which)) = best {
            let inner_map = chart.map().clone();
            let t = map.clone();
            let label = format!("{} [T, {}]", chart.label(), which.name());
            let out = ImmersionChart::new(m, Ambient::DeSitter(1.0), domain, label, move |u| {
                let x = inner_map(u)?;
                psi_jets(which, &apply_jets(&t, &cone_jets(&x)))
            })?;
            return Ok(out.with_flipped_normal(chart.flip_normal()));
        }
        domain = domain.shrunk(0.5);
    }
    Err(GeomError::NoAdmissibleChart(format!(
        "image of '{}' leaves both U1 and U2 on every shrunken domain",
        chart.label()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudo_linalg::random_pseudo_orthogonal;

    #[test]
    fn sigma_examples() {
        let p = embed_sigma(SigmaKind::Flat, &[0.0f64, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.canonical(), vec![1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(project_psi(PsiChart::Psi1, &p).unwrap(), vec![0.0, 0.0, 0.0, 0.0, -1.0]);

        let u = [0.5f64, (1.25f64).sqrt(), 0.0];
        let p = embed_sigma(SigmaKind::DeSitter, &u).unwrap();
        assert_eq!(project_psi(PsiChart::Psi2, &p).unwrap(), u.to_vec());

        let ch = 0.3f64.cosh();
        let u = [ch * 0.6f64.cos(), ch * 0.6f64.sin(), 0.3f64.sinh()];
        let p = embed_sigma(SigmaKind::AntiDeSitter, &u).unwrap();
        let metric = p.metric();
        assert!(metric.dot(p.rep(), p.rep()).abs() <= 1e-12);
        assert!(p.in_excluded_hyperplane(SigmaKind::Flat) == false);
    }

    #[test]
    fn psi_examples() {
        // y_1 = y_2: both charts agree
        let p = ProjectiveLightPoint::new(vec![1.0f64, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(project_psi(PsiChart::Psi1, &p).unwrap(), vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(project_psi(PsiChart::Psi2, &p).unwrap(), vec![1.0, 1.0, 1.0, 0.0]);
        assert!(ProjectiveLightPoint::new(vec![1.0f64, 1.0, 1.0, 0.0, 0.0]).is_err());
        let q = ProjectiveLightPoint::new(vec![0.0f64, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            project_psi(PsiChart::Psi1, &q),
            Err(GeomError::OutsideProjectiveChart { chart: "U1", .. })
        ));
    }

    #[test]
    fn block_swap_exchanges_charts() {
        let metric = SignatureMetric::new(6, 2).unwrap();
        let swap = PseudoOrthogonalMap::<f64>::block_swap(metric).unwrap();
        for seed in 0..10u64 {
            let t = random_pseudo_orthogonal::<f64>(&metric, seed).unwrap();
            let rep = t.apply(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
            let p = ProjectiveLightPoint::new(rep.clone()).unwrap();
            let q = ProjectiveLightPoint::new(swap.apply(&rep)).unwrap();
            let a = project_psi(PsiChart::Psi1, &p).unwrap();
            let b = project_psi(PsiChart::Psi2, &q).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            let s = SignatureMetric::lorentz(5);
            assert!((s.dot(&a, &a) - 1.0).abs() <= 1e-10 * (1.0 + a.iter().map(|v| v * v).sum::<f64>()));
        }
    }

    #[test]
    fn route_inverses_round_trip() {
        let u = [0.3f64, -0.2, 0.7, 0.1];
        for which in [PsiChart::Psi1, PsiChart::Psi2] {
            let x = project_psi(which, &embed_sigma(SigmaKind::Flat, &u).unwrap()).unwrap();
            let back = invert_flat_route(which, &x).unwrap();
            for (a, b) in back.iter().zip(&u) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let ch = 0.4f64.cosh();
        let y = [ch * 0.5f64.cos(), ch * 0.5f64.sin(), 0.4f64.sinh() * 0.6, 0.4f64.sinh() * 0.8];
        for which in [PsiChart::Psi1, PsiChart::Psi2] {
            let x = project_psi(which, &embed_sigma(SigmaKind::AntiDeSitter, &y).unwrap()).unwrap();
            let back = invert_anti_de_sitter_route(which, &x).unwrap();
            for (a, b) in back.iter().zip(&y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
