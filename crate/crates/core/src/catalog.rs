//! Constructors for the hypersurface families with parallel para-Blaschke
//! tensor, with parameter guards and closed-form expectations.

use std::fmt;
use std::sync::Arc;

use crate::chart::{default_grid_points, Ambient, Domain, ImmersionChart, Interval};
use crate::conformal::align_orientation;
use crate::error::{GeomError, Result};
use crate::hypersurface::hypersurface_jets;
use crate::jets::Jet;
use crate::scalar::Real;
use crate::spaceforms::{lift_composed_chart, PsiChart};

/// Hypersurface families, addressed on the command line by [`Family::id`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `S^{m-k}(a) x H^k(-1/(a^2-1))` in `S^{m+1}_1`.
    ProductDeSitter,
    /// `H^k(-1/a^2) x R^{m-k}` in `R^{m+1}_1`, lifted.
    ProductFlat,
    /// `H^k(-1/a^2) x H^{m-k}(-1/(1-a^2))` in `H^{m+1}_1`, lifted.
    ProductAntiDeSitter,
    /// Warped product `WP(p, q, a)` in `R^{m+1}_1`, lifted.
    WarpedProduct,
    /// Cone construction over a hypersurface of `S^{K+1}_1(r)`.
    Example32,
    /// Cone construction over a hypersurface of `H^{K+1}_1(-1/r^2)`.
    Example33,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ProductDeSitter,
        Family::ProductFlat,
        Family::ProductAntiDeSitter,
        Family::WarpedProduct,
        Family::Example32,
        Family::Example33,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Family::ProductDeSitter => "product-ds",
            Family::ProductFlat => "product-flat",
            Family::ProductAntiDeSitter => "product-ads",
            Family::WarpedProduct => "wp",
            Family::Example32 => "example32",
            Family::Example33 => "example33",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| {
                let known: Vec<&str> = Family::ALL.iter().map(|f| f.id()).collect();
                GeomError::Parameter(format!("unknown entry '{id}' (known: {})", known.join(", ")))
            })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Classification buckets a verdict can name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// Constant scalar and mean curvature in one of the three space forms.
    ConstantMeanCurvature,
    Family(Family),
    Inconsistent,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::ConstantMeanCurvature => "constant-mean-curvature",
            Branch::Family(f) => f.id(),
            Branch::Inconsistent => "inconsistent",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which inner hypersurface the cone constructions use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InnerSpec {
    /// Products `k = 1..K-1` in order, then the umbilic slice.
    #[default]
    Auto,
    /// Product with `k` factors of the hyperbolic kind.
    Product(usize),
    Umbilic,
}

impl InnerSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InnerSpec::Auto),
            "umbilic" => Ok(InnerSpec::Umbilic),
            _ => s
                .strip_prefix("product:")
                .and_then(|k| k.parse().ok())
                .map(InnerSpec::Product)
                .ok_or_else(|| GeomError::Parameter(format!("inner spec must be auto, umbilic or product:k, got '{s}'"))),
        }
    }
}

impl fmt::Display for InnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerSpec::Auto => f.write_str("auto"),
            InnerSpec::Product(k) => write!(f, "product:{k}"),
            InnerSpec::Umbilic => f.write_str("umbilic"),
        }
    }
}

/// Family parameters; unused fields are ignored by a family.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryParams {
    pub m: usize,
    pub k: usize,
    pub big_k: usize,
    pub p: usize,
    pub q: usize,
    pub a: f64,
    pub r: f64,
    /// Required para-Blaschke parameter for the cone constructions.
    pub lambda: Option<f64>,
    pub inner: InnerSpec,
    /// `+1` or `-1`: sign of the leading inner coordinate (cone over
    /// anti-de Sitter only).
    pub epsilon: i8,
    pub psi: PsiChart,
}

impl Default for EntryParams {
    fn default() -> Self {
        Self {
            m: 3,
            k: 1,
            big_k: 2,
            p: 1,
            q: 1,
            a: 2f64.sqrt(),
            r: 1.0,
            lambda: None,
            inner: InnerSpec::Auto,
            epsilon: 1,
            psi: PsiChart::Psi1,
        }
    }
}

/// Eigenvalues with multiplicities, descending.
pub type Spectrum = Vec<(f64, usize)>;

/// What an entry is known to satisfy.
#[derive(Clone, Default)]
pub struct ExpectedInvariants {
    pub b_eigenvalues: Option<Spectrum>,
    /// Compare `B` eigenvalues up to a global sign (orientation not tracked).
    pub b_up_to_sign: bool,
    /// `D^lambda` eigenvalues for the entry's own `lambda`.
    pub d_eigenvalues: Option<(f64, Spectrum)>,
    pub phi_zero: bool,
    pub b_parallel: bool,
    /// Parallel for every lambda (`None`) or only the listed one.
    pub d_parallel: bool,
    pub d_parallel_lambda: Option<f64>,
    /// Distinct eigenvalue count of `B`.
    pub b_distinct: Option<usize>,
    /// Distinct eigenvalue count of `D^lambda`.
    pub t: Option<usize>,
    pub rho: Option<f64>,
    /// Closed-form conformal factor as a function of the chart point.
    pub rho_field: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl fmt::Debug for ExpectedInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpectedInvariants")
            .field("b_eigenvalues", &self.b_eigenvalues)
            .field("b_up_to_sign", &self.b_up_to_sign)
            .field("d_eigenvalues", &self.d_eigenvalues)
            .field("phi_zero", &self.phi_zero)
            .field("b_parallel", &self.b_parallel)
            .field("d_parallel", &self.d_parallel)
            .field("b_distinct", &self.b_distinct)
            .field("t", &self.t)
            .field("rho", &self.rho)
            .field("rho_field", &self.rho_field.is_some())
            .finish()
    }
}

/// Solved inner hypersurface of a cone construction.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolution {
    pub kind: InnerKind,
    pub lambda: f64,
    /// Principal curvatures with multiplicities.
    pub curvatures: Spectrum,
    /// `|tr h - m lambda|`.
    pub trace_residual: f64,
    /// `||h|^2 - (m-1)/m - m lambda^2|`.
    pub norm_residual: f64,
    /// Scalar and mean curvature plugged back into the defining constraints.
    pub scalar_residual: f64,
    pub mean_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerKind {
    /// Product with `k` hyperbolic directions and shape parameter
    /// (`b` for the de Sitter case, `s` for anti-de Sitter).
    Product { k: usize, shape: f64 },
    /// Umbilic slice with principal curvature `c`.
    Umbilic { c: f64 },
}

/// A constructed catalog hypersurface.
#[derive(Clone)]
pub struct CatalogEntry<T> {
    pub family: Family,
    pub params: EntryParams,
    pub chart: ImmersionChart<T>,
    /// Same hypersurface through the other affine chart, for lifted entries.
    pub alternate_chart: Option<ImmersionChart<T>>,
    pub expected: ExpectedInvariants,
    pub inner: Option<InnerSolution>,
    pub grid_points: usize,
}

impl<T: Real> fmt::Debug for CatalogEntry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("id", &self.id())
            .field("chart", &self.chart)
            .field("expected", &self.expected)
            .field("inner", &self.inner)
            .finish()
    }
}

impl<T: Real> CatalogEntry<T> {
    /// `family(key=value, ...)`, unique per parameter set.
    pub fn id(&self) -> String {
        let p = &self.params;
        let body = match self.family {
            Family::ProductDeSitter | Family::ProductFlat | Family::ProductAntiDeSitter => {
                format!("m={},k={},a={}", p.m, p.k, fmt_num(p.a))
            }
            Family::WarpedProduct => format!("m={},p={},q={},a={}", p.m, p.p, p.q, fmt_num(p.a)),
            Family::Example32 | Family::Example33 => {
                let mut s = format!("m={},K={},r={},inner={}", p.m, p.big_k, fmt_num(p.r), p.inner);
                if let Some(l) = p.lambda {
                    s.push_str(&format!(",lambda={}", fmt_num(l)));
                }
                if self.family == Family::Example33 {
                    s.push_str(&format!(",eps={}", p.epsilon));
                }
                s
            }
        };
        format!("{}({})", self.family.id(), body)
    }

    pub fn label(&self) -> Branch {
        Branch::Family(self.family)
    }

    /// The lambda the entry was built for, if any.
    pub fn lambda(&self) -> Option<f64> {
        self.inner.as_ref().map(|s| s.lambda)
    }

    pub fn m(&self) -> usize {
        self.params.m
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Builds the entry for `family` with `params`.
pub fn make_entry<T: Real>(family: Family, params: &EntryParams) -> Result<CatalogEntry<T>> {
    match family {
        Family::ProductDeSitter => make_product_in_desitter(params.m, params.k, params.a),
        Family::ProductFlat => make_lifted_product(LiftedKind::Flat, params.m, params.k, params.a, params.psi),
        Family::ProductAntiDeSitter => {
            make_lifted_product(LiftedKind::AntiDeSitter, params.m, params.k, params.a, params.psi)
        }
        Family::WarpedProduct => make_wp(params.m, params.p, params.q, params.a, params.psi),
        Family::Example32 => make_example_32(params.m, params.big_k, params.r, params.inner, params.lambda),
        Family::Example33 => {
            make_example_33(params.m, params.big_k, params.r, params.inner, params.lambda, params.epsilon)
        }
    }
}

/// The nine labeled entries used by the classifier and acceptance suite.
pub fn labeled_entries<T: Real>() -> Result<Vec<CatalogEntry<T>>> {
    let sqrt2 = 2f64.sqrt();
    Ok(vec![
        make_product_in_desitter(3, 1, sqrt2)?,
        make_product_in_desitter(5, 2, 1.5)?,
        make_lifted_product(LiftedKind::Flat, 3, 1, 1.0, PsiChart::Psi1)?,
        make_lifted_product(LiftedKind::AntiDeSitter, 3, 1, 0.6, PsiChart::Psi1)?,
        make_wp(3, 1, 1, sqrt2, PsiChart::Psi1)?,
        make_wp(4, 1, 1, sqrt2, PsiChart::Psi1)?,
        make_example_32(3, 2, 1.0, InnerSpec::Auto, None)?,
        make_example_33(3, 2, 1.0, InnerSpec::Auto, None, 1)?,
        make_example_33(3, 2, 1.0, InnerSpec::Auto, None, -1)?,
    ])
}

fn guard(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(GeomError::Parameter(msg()))
    }
}

fn sym_box(n: usize, half: f64) -> Vec<Interval> {
    vec![Interval::closed(-half, half); n]
}

/// `(v, sqrt(R^2 - |v|^2))`.
fn sphere_graph<T: Real>(v: &[Jet<T>], radius: f64, template: &Jet<T>) -> Result<Vec<Jet<T>>> {
    let mut rest = template.constant_like(T::c(radius * radius));
    for c in v {
        rest -= &c.square();
    }
    let mut out = v.to_vec();
    out.push(rest.sqrt()?);
    Ok(out)
}

/// `(sign sqrt(s^2 + |w|^2), w)`.
fn hyperboloid_graph<T: Real>(w: &[Jet<T>], s: f64, sign: f64, template: &Jet<T>) -> Result<Vec<Jet<T>>> {
    let mut lead = template.constant_like(T::c(s * s));
    for c in w {
        lead += &c.square();
    }
    let mut out = vec![lead.sqrt()? * T::c(sign)];
    out.extend_from_slice(w);
    Ok(out)
}

fn spectrum(values: &[(f64, usize)]) -> Spectrum {
    let mut v: Vec<(f64, usize)> = values.iter().copied().filter(|(_, k)| *k > 0).collect();
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    // merge equal values
    let mut out: Spectrum = Vec::new();
    for (val, k) in v {
        match out.last_mut() {
            Some((w, kk)) if (*w - val).abs() <= 1e-12 * (1.0 + val.abs()) => *kk += k,
            _ => out.push((val, k)),
        }
    }
    out
}

/// Conformal data of a hypersurface with constant principal curvatures
/// `kappa` (with multiplicities) in a space form of curvature `c`:
/// `(rho, B eigenvalues, A eigenvalues)`, valid when `rho` and `H` are constant.
fn isoparametric_invariants(kappa: &[(f64, usize)], curvature: f64) -> (f64, Vec<(f64, usize)>, Vec<(f64, usize)>) {
    let m: usize = kappa.iter().map(|(_, k)| k).sum();
    let mf = m as f64;
    let h = kappa.iter().map(|(v, k)| v * *k as f64).sum::<f64>() / mf;
    let q: f64 = kappa.iter().map(|(v, k)| (v - h).powi(2) * *k as f64).sum();
    let rho = (mf / (mf - 1.0) * q).sqrt();
    let b = kappa.iter().map(|(v, k)| ((v - h) / rho, *k)).collect();
    let a = kappa
        .iter()
        .map(|(v, k)| ((0.5 * (h * h + curvature) - h * v) / (rho * rho), *k))
        .collect();
    (rho, b, a)
}

/// Item-4 product `S^{m-k}(a) x H^k(-1/(a^2-1)) \subset S^{m+1}_1`.
pub fn make_product_in_desitter<T: Real>(m: usize, k: usize, a: f64) -> Result<CatalogEntry<T>> {
    guard(m >= 2, || format!("m must be >= 2, got {m}"))?;
    guard(a > 1.0, || format!("product in de Sitter space needs a > 1, got a = {a}"))?;
    guard(k >= 1 && k < m, || format!("need 1 <= k <= m-1, got k = {k}, m = {m}"))?;
    let s = (a * a - 1.0).sqrt();
    let ns = m - k;
    // parameters: w in R^k (hyperboloid), v in R^{m-k} (sphere)
    let mut axes = sym_box(k, s / (k as f64).sqrt());
    axes.extend(sym_box(ns, 0.6 * a / (ns as f64).sqrt()));
    let domain = Domain::new(axes);
    let chart = ImmersionChart::new(m, Ambient::DeSitter(1.0), domain, format!("S^{ns}({a})xH^{k}"), move |u| {
        let z = hyperboloid_graph(&u[..k], s, 1.0, &u[0])?;
        let y = sphere_graph(&u[k..], a, &u[0])?;
        Ok(z.into_iter().chain(y).collect())
    })?;
    let alpha = s / a;
    let beta = a / s;
    let kappa = [(alpha, ns), (beta, k)];
    let (rho, b, amat) = isoparametric_invariants(&kappa, 1.0);
    Ok(CatalogEntry {
        family: Family::ProductDeSitter,
        params: EntryParams { m, k, a, ..Default::default() },
        chart,
        alternate_chart: None,
        expected: parallel_expectations(rho, &b, &amat, false),
        inner: None,
        grid_points: default_grid_points(m),
    })
}

fn aligned_alternate<T: Real>(chart: &ImmersionChart<T>, alt: Option<ImmersionChart<T>>) -> Result<Option<ImmersionChart<T>>> {
    let Some(alt) = alt else { return Ok(None) };
    let center: Vec<T> = chart.domain().center().iter().map(|v| T::c(*v)).collect();
    align_orientation(chart, alt, &center).map(Some)
}

fn parallel_expectations(rho: f64, b: &[(f64, usize)], a: &[(f64, usize)], up_to_sign: bool) -> ExpectedInvariants {
    let bs = spectrum(b);
    let d0 = spectrum(a);
    ExpectedInvariants {
        b_distinct: Some(bs.len()),
        b_eigenvalues: Some(bs),
        b_up_to_sign: up_to_sign,
        d_eigenvalues: if up_to_sign { None } else { Some((0.0, d0)) },
        phi_zero: true,
        b_parallel: true,
        d_parallel: true,
        rho: if up_to_sign { None } else { Some(rho) },
        ..Default::default()
    }
}

/// Products in the flat and anti-de Sitter space forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftedKind {
    /// `H^k(-1/a^2) x R^{m-k} \subset R^{m+1}_1`, `a > 0`.
    Flat,
    /// `H^k(-1/a^2) x H^{m-k}(-1/(1-a^2)) \subset H^{m+1}_1`, `0 < a < 1`.
    AntiDeSitter,
}

/// Inner chart of a lifted product, before the conformal lift.
pub fn lifted_product_inner<T: Real>(kind: LiftedKind, m: usize, k: usize, a: f64) -> Result<ImmersionChart<T>> {
    guard(k >= 1 && k < m, || format!("need 1 <= k <= m-1, got k = {k}, m = {m}"))?;
    match kind {
        LiftedKind::Flat => {
            guard(a > 0.0, || format!("hyperbolic-by-flat product needs a > 0, got a = {a}"))?;
            // keep 1 + <u,u> = 1 - a^2 + |w|^2 away from zero: w_0 >= lo > sqrt(max(a^2-1, 0))
            let lo = (a * a - 1.0).max(0.0).sqrt() + 0.5;
            let mut axes = sym_box(k, 0.8 * a / (k as f64).sqrt());
            axes.extend(vec![Interval::closed(lo, lo + 1.0); m - k]);
            ImmersionChart::new(m, Ambient::Minkowski, Domain::new(axes), format!("H^{k}({a})xR^{}", m - k), move |u| {
                let z = hyperboloid_graph(&u[..k], a, 1.0, &u[0])?;
                Ok(z.into_iter().chain(u[k..].iter().cloned()).collect())
            })
        }
        LiftedKind::AntiDeSitter => {
            guard(a > 0.0 && a < 1.0, || format!("hyperbolic-by-hyperbolic product needs 0 < a < 1, got a = {a}"))?;
            let t = (1.0 - a * a).sqrt();
            let mut axes = sym_box(k, 0.8 * a / (k as f64).sqrt());
            axes.extend(sym_box(m - k, 0.8 * t / ((m - k) as f64).sqrt()));
            ImmersionChart::new(
                m,
                Ambient::AntiDeSitter(1.0),
                Domain::new(axes),
                format!("H^{k}({a})xH^{}({t})", m - k),
                move |u| {
                    let z = hyperboloid_graph(&u[..k], a, 1.0, &u[0])?;
                    let w = hyperboloid_graph(&u[k..], t, 1.0, &u[0])?;
                    let mut y = vec![z[0].clone(), w[0].clone()];
                    y.extend_from_slice(&z[1..]);
                    y.extend_from_slice(&w[1..]);
                    Ok(y)
                },
            )
        }
    }
}

/// Products of the flat and anti-de Sitter families, lifted into `S^{m+1}_1`.
pub fn make_lifted_product<T: Real>(kind: LiftedKind, m: usize, k: usize, a: f64, psi: PsiChart) -> Result<CatalogEntry<T>> {
    let inner = lifted_product_inner::<T>(kind, m, k, a)?;
    let chart = lift_composed_chart(&inner, psi)?;
    let other = match psi {
        PsiChart::Psi1 => PsiChart::Psi2,
        PsiChart::Psi2 => PsiChart::Psi1,
    };
    let alternate_chart = aligned_alternate(&chart, lift_composed_chart(&inner, other).ok())?;
    let (kappa, curvature) = match kind {
        LiftedKind::Flat => (vec![(1.0 / a, k), (0.0, m - k)], 0.0),
        LiftedKind::AntiDeSitter => {
            let t = (1.0 - a * a).sqrt();
            (vec![(t / a, k), (-a / t, m - k)], -1.0)
        }
    };
    let (rho, b, amat) = isoparametric_invariants(&kappa, curvature);
    let family = match kind {
        LiftedKind::Flat => Family::ProductFlat,
        LiftedKind::AntiDeSitter => Family::ProductAntiDeSitter,
    };
    Ok(CatalogEntry {
        family,
        params: EntryParams { m, k, a, psi, ..Default::default() },
        chart,
        alternate_chart,
        expected: parallel_expectations(rho, &b, &amat, true),
        inner: None,
        grid_points: default_grid_points(m),
    })
}

/// Inner chart `u = (t u', t u'', u''')` of the warped product in `R^{m+1}_1`.
pub fn wp_inner<T: Real>(m: usize, p: usize, q: usize, a: f64) -> Result<ImmersionChart<T>> {
    guard(p >= 1 && q >= 1, || format!("warped product needs p, q >= 1, got p = {p}, q = {q}"))?;
    guard(p + q < m, || format!("warped product needs p + q < m, got p + q = {}, m = {m}", p + q))?;
    guard(a > 1.0, || format!("warped product needs a > 1, got a = {a}"))?;
    let s = (a * a - 1.0).sqrt();
    let flat = m - p - q - 1;
    // parameters: hyperboloid (q), sphere (p), t, flat (m-p-q-1)
    let mut axes = sym_box(q, 0.8 * s / (q as f64).sqrt());
    axes.extend(sym_box(p, 0.6 * a / (p as f64).sqrt()));
    axes.push(Interval::closed(0.5, 1.5));
    axes.extend(sym_box(flat, 0.5));
    ImmersionChart::new(m, Ambient::Minkowski, Domain::new(axes), format!("WP({p},{q},{a})"), move |u| {
        let hyp = hyperboloid_graph(&u[..q], s, 1.0, &u[0])?;
        let sph = sphere_graph(&u[q..q + p], a, &u[0])?;
        let t = &u[q + p];
        let mut out: Vec<Jet<T>> = hyp.iter().map(|c| c * t).collect();
        out.extend(sph.iter().map(|c| c * t));
        out.extend(u[q + p + 1..].iter().cloned());
        Ok(out)
    })
}

/// The warped product `WP(p, q, a)` lifted into `S^{m+1}_1`.
pub fn make_wp<T: Real>(m: usize, p: usize, q: usize, a: f64, psi: PsiChart) -> Result<CatalogEntry<T>> {
    let inner = wp_inner::<T>(m, p, q, a)?;
    let chart = lift_composed_chart(&inner, psi)?;
    let other = match psi {
        PsiChart::Psi1 => PsiChart::Psi2,
        PsiChart::Psi2 => PsiChart::Psi1,
    };
    let alternate_chart = aligned_alternate(&chart, lift_composed_chart(&inner, other).ok())?;
    // cone over S^p(a) x H^q in the unit de Sitter quadric: curvatures scale as 1/t
    let s = (a * a - 1.0).sqrt();
    let kappa = [(s / a, p), (a / s, q), (0.0, m - p - q)];
    let (_, b, _) = isoparametric_invariants(&kappa, 0.0);
    let bs = spectrum(&b);
    Ok(CatalogEntry {
        family: Family::WarpedProduct,
        params: EntryParams { m, p, q, a, psi, ..Default::default() },
        chart,
        alternate_chart,
        expected: ExpectedInvariants {
            b_distinct: Some(bs.len()),
            b_eigenvalues: Some(bs),
            b_up_to_sign: true,
            phi_zero: true,
            b_parallel: true,
            d_parallel: true,
            ..Default::default()
        },
        inner: None,
        grid_points: default_grid_points(m),
    })
}

// ---------------------------------------------------------------------------
// Cone constructions

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ConeKind {
    /// Inner hypersurface in `S^{K+1}_1(r)`.
    DeSitter,
    /// Inner hypersurface in `H^{K+1}_1(-1/r^2)`.
    AntiDeSitter,
}

fn constraint_residuals(m: usize, big_k: usize, r: f64, lambda: f64, kappa: &[(f64, usize)], kind: ConeKind) -> (f64, f64, f64, f64) {
    let mf = m as f64;
    let kf = big_k as f64;
    let tr: f64 = kappa.iter().map(|(v, k)| v * *k as f64).sum();
    let nsq: f64 = kappa.iter().map(|(v, k)| v * v * *k as f64).sum();
    let trace_res = (tr - mf * lambda).abs();
    let norm_res = (nsq - (mf - 1.0) / mf - mf * lambda * lambda).abs();
    // scalar curvature from the Gauss equation with a time-like normal
    let (ambient, target) = match kind {
        ConeKind::DeSitter => (
            kf * (kf - 1.0) / (r * r),
            (mf * kf * (kf - 1.0) + (mf - 1.0) * r * r) / (mf * r * r) - mf * (mf - 1.0) * lambda * lambda,
        ),
        ConeKind::AntiDeSitter => (
            -kf * (kf - 1.0) / (r * r),
            (-mf * kf * (kf - 1.0) + (mf - 1.0) * r * r) / (mf * r * r) - mf * (mf - 1.0) * lambda * lambda,
        ),
    };
    let scal = ambient - tr * tr + nsq;
    let scal_res = (scal - target).abs();
    let mean_res = (tr / kf - mf * lambda / kf).abs();
    (trace_res, norm_res, scal_res, mean_res)
}

/// Principal curvatures of the inner product with shape parameter `x`
/// (`sigma = s/b` in `(0,1)` for de Sitter, `tau = t/s > 0` for anti-de Sitter).
fn product_curvatures(kind: ConeKind, big_k: usize, k: usize, r: f64, x: f64) -> Spectrum {
    match kind {
        // sphere directions alpha = sigma/r (K-k), hyperbolic beta = 1/(r sigma) (k)
        ConeKind::DeSitter => vec![(x / r, big_k - k), (1.0 / (r * x), k)],
        // z-factor alpha = tau/r (k), w-factor beta = -1/(r tau) (K-k)
        ConeKind::AntiDeSitter => vec![(x / r, k), (-1.0 / (r * x), big_k - k)],
    }
}

fn norm_defect(m: usize, kappa: &[(f64, usize)]) -> f64 {
    let mf = m as f64;
    let tr: f64 = kappa.iter().map(|(v, k)| v * *k as f64).sum();
    let nsq: f64 = kappa.iter().map(|(v, k)| v * v * *k as f64).sum();
    nsq - tr * tr / mf - (mf - 1.0) / mf
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Candidate inner hypersurfaces (all orientations normalized to
/// `lambda >= 0`), in the order products `k = 1..K-1`, then umbilic.
fn inner_candidates(kind: ConeKind, m: usize, big_k: usize, r: f64, spec: InnerSpec, target: Option<f64>) -> (Vec<InnerSolution>, Vec<String>) {
    let mf = m as f64;
    let mut found = Vec::new();
    let mut notes = Vec::new();
    let ks: Vec<usize> = match spec {
        InnerSpec::Auto => (1..big_k).collect(),
        InnerSpec::Product(k) => vec![k],
        InnerSpec::Umbilic => vec![],
    };
    for k in ks {
        if k == 0 || k >= big_k {
            notes.push(format!("product:{k} invalid (need 1 <= k <= K-1)"));
            continue;
        }
        let curv = |x: f64| product_curvatures(kind, big_k, k, r, x);
        let mut roots: Vec<f64> = Vec::new();
        match target {
            Some(lam) => {
                // trace equation is quadratic in the shape parameter
                let lam = lam.abs();
                let cands: Vec<f64> = match kind {
                    ConeKind::DeSitter => {
                        // (K-k) s^2 - m lam r s + k = 0, s in (0,1)
                        let (qa, qb, qc) = ((big_k - k) as f64, -mf * lam * r, k as f64);
                        let disc = qb * qb - 4.0 * qa * qc;
                        if disc < 0.0 {
                            vec![]
                        } else {
                            vec![(-qb - disc.sqrt()) / (2.0 * qa), (-qb + disc.sqrt()) / (2.0 * qa)]
                        }
                    }
                    ConeKind::AntiDeSitter => {
                        // k t^2 - m lam r t - (K-k) = 0, t > 0
                        let (qa, qb, qc) = (k as f64, -mf * lam * r, -((big_k - k) as f64));
                        let disc = qb * qb - 4.0 * qa * qc;
                        vec![(-qb + disc.sqrt()) / (2.0 * qa)]
                    }
                };
                let valid: Vec<f64> = cands
                    .into_iter()
                    .filter(|x| *x > 0.0 && (kind == ConeKind::AntiDeSitter || *x < 1.0))
                    .collect();
                if valid.is_empty() {
                    notes.push(format!("product:{k}: trace equation tr h = m lambda has no admissible root"));
                }
                for x in valid {
                    let d = norm_defect(m, &curv(x));
                    if d.abs() <= 1e-10 {
                        roots.push(x);
                    } else {
                        notes.push(format!("product:{k}: trace root {x:.6} leaves norm residual {d:.3e}"));
                    }
                }
            }
            None => {
                let f = |x: f64| norm_defect(m, &curv(x));
                let (lo, hi) = match kind {
                    ConeKind::DeSitter => (-20.0f64, 0.0f64),
                    ConeKind::AntiDeSitter => (-20.0, 20.0),
                };
                let n = 4000;
                let xs: Vec<f64> = (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect();
                let xs: Vec<f64> = xs.into_iter().filter(|x| kind == ConeKind::AntiDeSitter || *x < 1.0).collect();
                for w in xs.windows(2) {
                    let (fa, fb) = (f(w[0]), f(w[1]));
                    if fa == 0.0 {
                        roots.push(w[0]);
                    } else if (fa < 0.0) != (fb < 0.0) {
                        roots.push(bisect(&f, w[0], w[1]));
                    }
                }
                if roots.is_empty() {
                    let min = xs.iter().map(|x| f(*x).abs()).fold(f64::INFINITY, f64::min);
                    notes.push(format!("product:{k}: norm constraint has no root (min |residual| {min:.3e})"));
                }
            }
        }
        for x in roots {
            let kappa = curv(x);
            let tr: f64 = kappa.iter().map(|(v, kk)| v * *kk as f64).sum();
            let sign = if tr < 0.0 { -1.0 } else { 1.0 };
            let kappa: Spectrum = kappa.iter().map(|(v, kk)| (sign * v, *kk)).collect();
            let lambda = sign * tr / mf;
            let shape = match kind {
                ConeKind::DeSitter => r / (1.0 - x * x).sqrt(),
                ConeKind::AntiDeSitter => r / (1.0 + x * x).sqrt(),
            };
            found.push(solution(kind, m, big_k, r, lambda, kappa, InnerKind::Product { k, shape }));
        }
    }
    if matches!(spec, InnerSpec::Auto | InnerSpec::Umbilic) {
        let c = ((mf - 1.0) / (big_k as f64 * (mf - big_k as f64))).sqrt();
        let lambda = big_k as f64 * c / mf;
        let kappa = vec![(c, big_k)];
        let sol = solution(kind, m, big_k, r, lambda, kappa, InnerKind::Umbilic { c });
        match target {
            Some(t) if (t.abs() - lambda).abs() > 1e-10 => {
                notes.push(format!("umbilic: forces |lambda| = {lambda:.12}, requested {t}"))
            }
            _ => found.push(sol),
        }
    }
    (found, notes)
}

fn solution(kind: ConeKind, m: usize, big_k: usize, r: f64, lambda: f64, curvatures: Spectrum, ik: InnerKind) -> InnerSolution {
    let (trace_residual, norm_residual, scalar_residual, mean_residual) =
        constraint_residuals(m, big_k, r, lambda, &curvatures, kind);
    InnerSolution { kind: ik, lambda, curvatures, trace_residual, norm_residual, scalar_residual, mean_residual }
}

fn solve_inner(kind: ConeKind, m: usize, big_k: usize, r: f64, spec: InnerSpec, target: Option<f64>) -> Result<(InnerSolution, bool)> {
    let (found, notes) = inner_candidates(kind, m, big_k, r, spec, target);
    let pick = found.into_iter().find(|s| {
        s.trace_residual.max(s.norm_residual).max(s.mean_residual) <= 1e-10
            && s.scalar_residual <= 1e-10 * (1.0 + (big_k * big_k) as f64 / (r * r))
    });
    match pick {
        Some(sol) => {
            // flip orientation when the requested lambda is negative
            let flip = matches!(target, Some(t) if t < 0.0);
            if flip {
                let mut s = sol;
                s.lambda = -s.lambda;
                s.curvatures = spectrum(&s.curvatures.iter().map(|(v, k)| (-v, *k)).collect::<Vec<_>>());
                let (a, b, c, d) = constraint_residuals(m, big_k, r, s.lambda, &s.curvatures, kind);
                s.trace_residual = a;
                s.norm_residual = b;
                s.scalar_residual = c;
                s.mean_residual = d;
                Ok((s, true))
            } else {
                Ok((sol, false))
            }
        }
        None => Err(GeomError::NoAdmissibleInner(format!(
            "m = {m}, K = {big_k}, r = {r}, inner = {spec}, lambda = {}: {}",
            target.map_or("free".to_string(), |t| t.to_string()),
            if notes.is_empty() { "no candidate".to_string() } else { notes.join("; ") }
        ))),
    }
}

type PointFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

/// Inner hypersurface chart plus its unit normal (values only) realizing
/// the solved curvatures.
struct InnerSurface<T> {
    dim: usize,
    domain_axes: Vec<Interval>,
    map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync>,
    normal: PointFn<T>,
}

fn values<T: Real>(v: &[Jet<T>]) -> Vec<T> {
    v.iter().map(|j| j.value()).collect()
}

fn eval_values<T: Real>(map: &(dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync), p: &[T]) -> Result<Vec<T>> {
    Ok(values(&map(&Jet::variables(p, 0))?))
}

fn de_sitter_inner<T: Real>(big_k: usize, r: f64, sol: &InnerSolution, flip: bool) -> InnerSurface<T> {
    let sgn = if flip { -1.0 } else { 1.0 };
    match sol.kind {
        InnerKind::Product { k, shape: b } => {
            let s = (b * b - r * r).sqrt();
            let ns = big_k - k;
            let mut axes = sym_box(k, 0.8 * s / (k as f64).sqrt());
            axes.extend(sym_box(ns, 0.6 * b / (ns as f64).sqrt()));
            let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                let z = hyperboloid_graph(&u[..k], s, 1.0, &u[0])?;
                let y = sphere_graph(&u[k..], b, &u[0])?;
                Ok(z.into_iter().chain(y).collect())
            });
            let m2 = map.clone();
            let (cz, cy) = (b / (s * r), s / (b * r));
            let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                let y = eval_values(&*m2, p)?;
                Ok(y.iter()
                    .enumerate()
                    .map(|(i, v)| *v * T::c(sgn * if i <= k { cz } else { cy }))
                    .collect())
            });
            InnerSurface { dim: big_k, domain_axes: axes, map, normal }
        }
        InnerKind::Umbilic { c } => {
            let cr = c * r;
            if (cr - 1.0).abs() <= 1e-12 {
                // null slice y_last - y_0 = r: flat, curvature 1/r
                let axes = sym_box(big_k, 0.5 * r);
                let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                    let mut w2 = u[0].constant_like(T::zero());
                    for c in u {
                        w2 += &c.square();
                    }
                    let rr = T::c(r);
                    let y0 = (w2.constant_like(rr * rr) - &w2) / rr * T::c(0.5) - rr * T::c(0.5);
                    let ylast = &y0 + rr;
                    let mut out = vec![y0];
                    out.extend_from_slice(u);
                    out.push(ylast);
                    Ok(out)
                });
                let m2 = map.clone();
                let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                    let y = eval_values(&*m2, p)?;
                    let n = y.len();
                    Ok(y.iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let null = if i == 0 || i == n - 1 { T::one() } else { T::zero() };
                            (*v / T::c(r) - null) * T::c(sgn)
                        })
                        .collect())
                });
                InnerSurface { dim: big_k, domain_axes: axes, map, normal }
            } else if cr < 1.0 {
                // space-like slice y_0 = c0: round sphere of radius b
                let c0 = c * r * r / (1.0 - cr * cr).sqrt();
                let b = (r * r + c0 * c0).sqrt();
                let axes = sym_box(big_k, 0.6 * b / (big_k as f64).sqrt());
                let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                    let v = sphere_graph(u, b, &u[0])?;
                    let mut out = vec![u[0].constant_like(T::c(c0))];
                    out.extend(v);
                    Ok(out)
                });
                let m2 = map.clone();
                let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                    let y = eval_values(&*m2, p)?;
                    Ok(y.iter()
                        .enumerate()
                        .map(|(i, v)| T::c(sgn) * if i == 0 { T::c(b / r) } else { *v * T::c(c0 / (b * r)) })
                        .collect())
                });
                InnerSurface { dim: big_k, domain_axes: axes, map, normal }
            } else {
                // time-like slice y_last = cl: hyperboloid
                let cl = c * r * r / (cr * cr - 1.0).sqrt();
                let s = (cl * cl - r * r).sqrt();
                let axes = sym_box(big_k, 0.8 * s / (big_k as f64).sqrt());
                let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                    let mut z = hyperboloid_graph(u, s, 1.0, &u[0])?;
                    z.push(u[0].constant_like(T::c(cl)));
                    Ok(z)
                });
                let m2 = map.clone();
                let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                    let y = eval_values(&*m2, p)?;
                    let n = y.len();
                    Ok(y.iter()
                        .enumerate()
                        .map(|(i, v)| T::c(sgn) * if i == n - 1 { T::c(s / r) } else { *v * T::c(cl / (s * r)) })
                        .collect())
                });
                InnerSurface { dim: big_k, domain_axes: axes, map, normal }
            }
        }
    }
}

fn anti_de_sitter_inner<T: Real>(big_k: usize, r: f64, sol: &InnerSolution, flip: bool, eps: f64) -> InnerSurface<T> {
    let sgn = if flip { -1.0 } else { 1.0 };
    match sol.kind {
        InnerKind::Product { k, shape: s } => {
            let t = (r * r - s * s).sqrt();
            let mut axes = sym_box(k, 0.8 * s / (k as f64).sqrt());
            axes.extend(sym_box(big_k - k, 0.8 * t / ((big_k - k) as f64).sqrt()));
            let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                let z = hyperboloid_graph(&u[..k], s, eps, &u[0])?;
                let w = hyperboloid_graph(&u[k..], t, 1.0, &u[0])?;
                let mut y = vec![z[0].clone(), w[0].clone()];
                y.extend_from_slice(&z[1..]);
                y.extend_from_slice(&w[1..]);
                Ok(y)
            });
            let m2 = map.clone();
            let (nz, nw) = (t / (s * r), -s / (t * r));
            let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                let y = eval_values(&*m2, p)?;
                Ok(y.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let z_slot = i == 0 || (2..2 + k).contains(&i);
                        *v * T::c(sgn * if z_slot { nz } else { nw })
                    })
                    .collect())
            });
            InnerSurface { dim: big_k, domain_axes: axes, map, normal }
        }
        InnerKind::Umbilic { c } => {
            // y_1 = c1 slice: hyperboloid H^K(s) in the remaining slots
            let c1 = c * r * r / (1.0 + c * c * r * r).sqrt();
            let s = (r * r - c1 * c1).sqrt();
            let axes = sym_box(big_k, 0.8 * s / (big_k as f64).sqrt());
            let map: Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync> = Arc::new(move |u: &[Jet<T>]| {
                let z = hyperboloid_graph(u, s, eps, &u[0])?;
                let mut y = vec![z[0].clone(), u[0].constant_like(T::c(c1))];
                y.extend_from_slice(&z[1..]);
                Ok(y)
            });
            let m2 = map.clone();
            let normal: PointFn<T> = Arc::new(move |p: &[T]| {
                let y = eval_values(&*m2, p)?;
                Ok(y.iter()
                    .enumerate()
                    .map(|(i, v)| T::c(sgn) * if i == 1 { T::c(-s / r) } else { *v * T::c(c1 / (s * r)) })
                    .collect())
            });
            InnerSurface { dim: big_k, domain_axes: axes, map, normal }
        }
    }
}

fn cone_guards(m: usize, big_k: usize, r: f64) -> Result<()> {
    guard(m >= 3, || format!("cone construction needs m >= 3, got {m}"))?;
    guard(big_k >= 2 && big_k < m, || format!("cone construction needs 2 <= K <= m-1, got K = {big_k}"))?;
    guard(r > 0.0, || format!("cone construction needs r > 0, got r = {r}"))
}

fn cone_expectations(kind: ConeKind, m: usize, big_k: usize, r: f64, sol: &InnerSolution) -> ExpectedInvariants {
    let lam = sol.lambda;
    let mut b: Vec<(f64, usize)> = sol.curvatures.iter().map(|(v, k)| (v - lam, *k)).collect();
    b.push((-lam, m - big_k));
    let hi = 1.0 / (2.0 * r * r) - lam * lam / 2.0;
    let lo = -(1.0 / (2.0 * r * r) + lam * lam / 2.0);
    let d = match kind {
        ConeKind::DeSitter => vec![(hi, big_k), (lo, m - big_k)],
        ConeKind::AntiDeSitter => vec![(lo, big_k), (hi, m - big_k)],
    };
    let bs = spectrum(&b);
    ExpectedInvariants {
        b_distinct: Some(bs.len()),
        b_eigenvalues: Some(bs),
        d_eigenvalues: Some((lam, spectrum(&d))),
        phi_zero: true,
        d_parallel: true,
        d_parallel_lambda: Some(lam),
        t: Some(2),
        ..Default::default()
    }
}

/// Sets the normal orientation of `chart` to agree with `reference` at the
/// domain center; fails when `reference` is not the unit normal there.
fn orient_to<T: Real>(chart: ImmersionChart<T>, reference: &[T]) -> Result<ImmersionChart<T>> {
    let center: Vec<T> = chart.domain().center().iter().map(|v| T::c(*v)).collect();
    let jets = hypersurface_jets(&chart, &center, 2)?;
    let n: Vec<T> = jets.normal.iter().map(|j| j.value()).collect();
    let metric = chart.metric();
    let c = metric.dot(&n, reference).to_f64_lossy();
    if (c.abs() - 1.0).abs() > 1e-8 {
        return Err(GeomError::NoTimelikeNormal(format!(
            "constructed normal disagrees with the computed one: <n, n_ref> = {c}"
        )));
    }
    let flip = chart.flip_normal();
    Ok(chart.with_flipped_normal(if c > 0.0 { !flip } else { flip }))
}

/// Cone over a hypersurface of `S^{K+1}_1(r)` with constant scalar and mean
/// curvature: `x = (y1, y2) / y0` with `(y0, y2)` in `H^{m-K}(-1/r^2)`.
pub fn make_example_32<T: Real>(m: usize, big_k: usize, r: f64, inner: InnerSpec, lambda: Option<f64>) -> Result<CatalogEntry<T>> {
    cone_guards(m, big_k, r)?;
    let (sol, flip) = solve_inner(ConeKind::DeSitter, m, big_k, r, inner, lambda)?;
    let surf = de_sitter_inner::<T>(big_k, r, &sol, flip);
    let kk = surf.dim;
    let mut axes = surf.domain_axes.clone();
    axes.extend(sym_box(m - big_k, 0.5 * r));
    let inner_map = surf.map.clone();
    let chart = ImmersionChart::new(m, Ambient::DeSitter(1.0), Domain::new(axes), format!("cone-dS(K={big_k},r={r})"), move |u| {
        let y1 = inner_map(&u[..kk])?;
        let mut y0sq = u[0].constant_like(T::c(r * r));
        for c in &u[kk..] {
            y0sq += &c.square();
        }
        let inv = y0sq.powf(T::c(-0.5))?;
        let mut x: Vec<Jet<T>> = y1.iter().map(|c| c * &inv).collect();
        x.extend(u[kk..].iter().map(|c| c * &inv));
        Ok(x)
    })?;
    let center: Vec<T> = chart.domain().center().iter().map(|v| T::c(*v)).collect();
    let mut n_ref = (surf.normal)(&center[..kk])?;
    n_ref.extend(std::iter::repeat(T::zero()).take(m - big_k));
    let chart = orient_to(chart, &n_ref)?;
    let expected = ExpectedInvariants {
        rho_field: Some(Arc::new(move |p: &[f64]| (r * r + p[kk..].iter().map(|v| v * v).sum::<f64>()).sqrt())),
        ..cone_expectations(ConeKind::DeSitter, m, big_k, r, &sol)
    };
    Ok(CatalogEntry {
        family: Family::Example32,
        params: EntryParams { m, big_k, r, lambda, inner, ..Default::default() },
        chart,
        alternate_chart: None,
        expected,
        inner: Some(sol),
        grid_points: default_grid_points(m),
    })
}

/// Cone over a hypersurface of `H^{K+1}_1(-1/r^2)` with constant scalar and
/// mean curvature: `x = eps (y1, y2) / y0` with `y2` in `S^{m-K}(r)`.
pub fn make_example_33<T: Real>(
    m: usize,
    big_k: usize,
    r: f64,
    inner: InnerSpec,
    lambda: Option<f64>,
    epsilon: i8,
) -> Result<CatalogEntry<T>> {
    cone_guards(m, big_k, r)?;
    guard(epsilon == 1 || epsilon == -1, || format!("epsilon must be +1 or -1, got {epsilon}"))?;
    let eps = epsilon as f64;
    let (sol, flip) = solve_inner(ConeKind::AntiDeSitter, m, big_k, r, inner, lambda)?;
    let surf = anti_de_sitter_inner::<T>(big_k, r, &sol, flip, eps);
    let kk = surf.dim;
    let ns = m - big_k;
    let mut axes = surf.domain_axes.clone();
    axes.extend(sym_box(ns, 0.6 * r / (ns as f64).sqrt()));
    let inner_map = surf.map.clone();
    let chart = ImmersionChart::new(
        m,
        Ambient::DeSitter(1.0),
        Domain::new(axes),
        format!("cone-AdS(K={big_k},r={r},eps={epsilon})"),
        move |u| {
            let y = inner_map(&u[..kk])?;
            let y2 = sphere_graph(&u[kk..], r, &u[0])?;
            let inv = y[0].recip()? * T::c(eps);
            let mut x: Vec<Jet<T>> = y[1..].iter().map(|c| c * &inv).collect();
            x.extend(y2.iter().map(|c| c * &inv));
            Ok(x)
        },
    )?;
    let center: Vec<T> = chart.domain().center().iter().map(|v| T::c(*v)).collect();
    let n_inner = (surf.normal)(&center[..kk])?;
    let x_center = chart.point(&center)?;
    // n = (n1, 0) - eps n0 x
    let mut n_ref: Vec<T> = n_inner[1..].to_vec();
    n_ref.extend(std::iter::repeat(T::zero()).take(ns + 1));
    for (ni, xi) in n_ref.iter_mut().zip(&x_center) {
        *ni -= T::c(eps) * n_inner[0] * *xi;
    }
    let chart = orient_to(chart, &n_ref)?;
    // |y0| = sqrt(s^2 + |z'|^2) over the leading hyperboloid coordinates
    let (s0, nz) = match sol.kind {
        InnerKind::Product { k, shape } => (shape, k),
        InnerKind::Umbilic { c } => {
            let c1 = c * r * r / (1.0 + c * c * r * r).sqrt();
            ((r * r - c1 * c1).sqrt(), big_k)
        }
    };
    let expected = ExpectedInvariants {
        rho_field: Some(Arc::new(move |p: &[f64]| (s0 * s0 + p[..nz].iter().map(|v| v * v).sum::<f64>()).sqrt())),
        ..cone_expectations(ConeKind::AntiDeSitter, m, big_k, r, &sol)
    };
    Ok(CatalogEntry {
        family: Family::Example33,
        params: EntryParams { m, big_k, r, lambda, inner, epsilon, ..Default::default() },
        chart,
        alternate_chart: None,
        expected,
        inner: Some(sol),
        grid_points: default_grid_points(m),
    })
}
