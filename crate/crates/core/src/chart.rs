//! Immersion charts: parameter boxes mapped into an ambient pseudo-Euclidean
//! quadric, evaluable in jet arithmetic.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jets::Jet;
use crate::pseudo_linalg::SignatureMetric;
use crate::scalar::Real;

/// Ambient space of an immersion of an `m`-dimensional chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ambient {
    /// `S^{m+1}_1(r)`: `<x,x>_1 = r^2` in `R^{m+2}_1`.
    DeSitter(f64),
    /// `H^{m+1}_1(-1/r^2)`: `<x,x>_2 = -r^2` in `R^{m+2}_2`.
    AntiDeSitter(f64),
    /// `R^{m+1}_1`.
    Minkowski,
    /// Null cone of `R^{m+3}_2`.
    LightCone,
}

impl Ambient {
    pub fn metric(&self, m: usize) -> SignatureMetric {
        match self {
            Ambient::DeSitter(_) => SignatureMetric::lorentz(m + 2),
            Ambient::AntiDeSitter(_) => SignatureMetric::new(m + 2, 2).expect("valid signature"),
            Ambient::Minkowski => SignatureMetric::lorentz(m + 1),
            Ambient::LightCone => SignatureMetric::new(m + 3, 2).expect("valid signature"),
        }
    }

    /// Required value of `<x,x>`, if the ambient is a quadric.
    pub fn quadric_value(&self) -> Option<f64> {
        match self {
            Ambient::DeSitter(r) => Some(r * r),
            Ambient::AntiDeSitter(r) => Some(-r * r),
            Ambient::Minkowski => None,
            Ambient::LightCone => Some(0.0),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Ambient::DeSitter(r) => format!("de Sitter (radius {r})"),
            Ambient::AntiDeSitter(r) => format!("anti-de Sitter (radius {r})"),
            Ambient::Minkowski => "Minkowski".to_string(),
            Ambient::LightCone => "light cone".to_string(),
        }
    }
}

/// One axis of a parameter box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_open { v > self.lo } else { v >= self.lo };
        let below = if self.hi_open { v < self.hi } else { v <= self.hi };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned parameter box.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub axes: Vec<Interval>,
}

/// Fraction of each axis excluded at both ends when sampling grids.
pub const GRID_MARGIN: f64 = 0.1;

impl Domain {
    pub fn new(axes: Vec<Interval>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.axes.len() && self.axes.iter().zip(p).all(|(a, v)| a.contains(*v))
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|a| 0.5 * (a.lo + a.hi)).collect()
    }

    /// Axis coordinates of a uniform grid with `n` points per axis on the
    /// interior box (margins of [`GRID_MARGIN`]).
    pub fn axis_samples(&self, n: usize) -> Vec<Vec<f64>> {
        self.axes
            .iter()
            .map(|a| {
                let lo = a.lo + GRID_MARGIN * a.width();
                let hi = a.hi - GRID_MARGIN * a.width();
                if n == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
                }
            })
            .collect()
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn grid(&self, n: usize) -> Vec<Vec<f64>> {
        let samples = self.axis_samples(n);
        let m = self.dim();
        let total = n.pow(m as u32);
        (0..total)
            .map(|flat| {
                let mut rem = flat;
                let mut p = vec![0.0; m];
                for ax in (0..m).rev() {
                    p[ax] = samples[ax][rem % n];
                    rem /= n;
                }
                p
            })
            .collect()
    }

    /// Corners of the box, for excluded-set scans.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..1usize << m)
            .map(|bits| {
                (0..m)
                    .map(|ax| if bits >> ax & 1 == 1 { self.axes[ax].hi } else { self.axes[ax].lo })
                    .collect()
            })
            .collect()
    }

    /// Box shrunk toward its center by `factor` (0 < factor <= 1).
    pub fn shrunk(&self, factor: f64) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|a| {
                    let c = 0.5 * (a.lo + a.hi);
                    let h = 0.5 * a.width() * factor;
                    Interval { lo: c - h, hi: c + h, ..*a }
                })
                .collect(),
        }
    }
}

/// Jet-evaluable map from chart parameters to ambient coordinates.
pub type ChartMap<T> = Arc<dyn Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync>;

/// A parametrized hypersurface patch.
#[derive(Clone)]
pub struct ImmersionChart<T> {
    m: usize,
    ambient: Ambient,
    domain: Domain,
    map: ChartMap<T>,
    label: String,
    flip_normal: bool,
}

impl<T: Real> fmt::Debug for ImmersionChart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("label", &self.label)
            .field("m", &self.m)
            .field("ambient", &self.ambient)
            .field("domain", &self.domain)
            .field("flip_normal", &self.flip_normal)
            .finish()
    }
}

/// Tolerance on `|<x,x> - c|` at evaluated points.
pub const QUADRIC_TOL: f64 = 1e-10;

impl<T: Real> ImmersionChart<T> {
    pub fn new(
        m: usize,
        ambient: Ambient,
        domain: Domain,
        label: impl Into<String>,
        map: impl Fn(&[Jet<T>]) -> Result<Vec<Jet<T>>> + Send + Sync + 'static,
    ) -> Result<Self> {
        if m < 2 {
            return Err(GeomError::Parameter(format!("chart dimension must be >= 2, got {m}")));
        }
        if domain.dim() != m {
            return Err(GeomError::DimensionMismatch { expected: m, got: domain.dim() });
        }
        Ok(Self { m, ambient, domain, map: Arc::new(map), label: label.into(), flip_normal: false })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn metric(&self) -> SignatureMetric {
        self.ambient.metric(self.m)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn map(&self) -> &ChartMap<T> {
        &self.map
    }

    /// Whether the default (future-pointing) unit normal is reversed.
    pub fn flip_normal(&self) -> bool {
        self.flip_normal
    }

    pub fn with_flipped_normal(mut self, flip: bool) -> Self {
        self.flip_normal = flip;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        assert_eq!(domain.dim(), self.m);
        self.domain = domain;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Ambient coordinate jets at `p`, with domain and quadric checks.
    pub fn evaluate(&self, p: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        let pf: Vec<f64> = p.iter().map(|v| v.to_f64_lossy()).collect();
        if !self.domain.contains(&pf) {
            return Err(GeomError::OutsideDomain(format!("{pf:?} not in domain of '{}'", self.label)));
        }
        self.evaluate_unchecked(p, order)
    }

    /// As [`evaluate`](Self::evaluate) without the domain test; used for
    /// probing points a composed chart might reach.
    pub fn evaluate_unchecked(&self, p: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        let vars = Jet::variables(p, order);
        let x = (self.map)(&vars)?;
        let metric = self.metric();
        if x.len() != metric.dim() {
            return Err(GeomError::DimensionMismatch { expected: metric.dim(), got: x.len() });
        }
        if let Some(c) = self.ambient.quadric_value() {
            let vals: Vec<T> = x.iter().map(|j| j.value()).collect();
            let res = (metric.dot(&vals, &vals) - T::c(c)).abs().to_f64_lossy();
            let scale = vals.iter().fold(1.0f64, |acc, v| acc.max(v.abs().to_f64_lossy()));
            if !(res <= QUADRIC_TOL * scale * scale) {
                return Err(GeomError::Quadric(res));
            }
        }
        Ok(x)
    }

    /// Ambient point (values only).
    pub fn point(&self, p: &[T]) -> Result<Vec<T>> {
        Ok(self.evaluate(p, 0)?.iter().map(|j| j.value()).collect())
    }

    /// Largest `|<x,x> - c|` over the default grid.
    pub fn quadric_residual_on_grid(&self, n: usize) -> Result<f64> {
        let Some(c) = self.ambient.quadric_value() else { return Ok(0.0) };
        let metric = self.metric();
        let mut worst = 0.0f64;
        for p in self.domain.grid(n) {
            let pt: Vec<T> = p.iter().map(|v| T::c(*v)).collect();
            let vars = Jet::variables(&pt, 0);
            let x: Vec<T> = (self.map)(&vars)?.iter().map(|j| j.value()).collect();
            worst = worst.max((metric.dot(&x, &x) - T::c(c)).abs().to_f64_lossy());
        }
        Ok(worst)
    }
}

/// Recommended grid density for an `m`-dimensional chart.
pub fn default_grid_points(m: usize) -> usize {
    if m <= 3 {
        9
    } else {
        5
    }
}
