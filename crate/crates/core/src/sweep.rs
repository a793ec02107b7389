//! Grid evaluation of the invariant pipeline on a chart: pointwise samples,
//! finite-difference residuals with a refinement pass, chart comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{default_grid_points, ImmersionChart};
use crate::checker::ClassifierInput;
use crate::conformal::{
    align_orientation, frame_residuals, identity_residuals, point_invariants, pointwise_frame_residuals,
    pointwise_identity_residuals, FrameResiduals, IdentityResiduals, Perturbation, PointInvariants, Stencil,
};
use crate::error::{GeomError, Result};
use crate::linalg::{sym_eigenvalues, Mat};
use crate::pseudo_linalg::{random_pseudo_orthogonal, SignatureMetric};
use crate::spaceforms::act_and_reproject;

/// Default offset of the finite-difference stencil.
pub const DEFAULT_FD_STEP: f64 = 5e-3;

/// Below this, a residual is at round-off and refinement cannot shrink it.
pub const REFINEMENT_FLOOR: f64 = 1e-10;

/// Stencil grid density: every point of a stencil costs `4m + 1` jet
/// evaluations, so higher dimensions use a coarser subgrid.
pub fn default_fd_grid_points(m: usize) -> usize {
    if m <= 3 {
        5
    } else {
        3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub grid_points: Option<usize>,
    pub fd_grid_points: Option<usize>,
    /// 3 or 4; order 3 skips everything built on the Blaschke tensor.
    pub jet_order: usize,
    pub fd_step: f64,
    pub lambdas: Vec<f64>,
    /// Re-run the stencil residuals at half the step.
    pub refine: bool,
    pub perturbation: Perturbation,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            grid_points: None,
            fd_grid_points: None,
            jet_order: 4,
            fd_step: DEFAULT_FD_STEP,
            lambdas: vec![0.0],
            refine: true,
            perturbation: Perturbation::default(),
        }
    }
}

/// Invariants at one grid point, in `f64`.
#[derive(Clone, Debug)]
pub struct PointSample {
    pub point: Vec<f64>,
    pub rho: f64,
    /// Conformal metric in chart coordinates.
    pub g: Mat<f64>,
    pub b: Mat<f64>,
    pub a: Option<Mat<f64>>,
    pub phi: Vec<f64>,
}

impl PointSample {
    fn from_invariants(p: &[f64], inv: &PointInvariants<f64>) -> Self {
        Self {
            point: p.to_vec(),
            rho: inv.rho,
            g: inv.conformal_metric.clone(),
            b: inv.b.clone(),
            a: inv.a.clone(),
            phi: inv.phi.clone(),
        }
    }
}

/// Maximum of one named residual over its sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct Stat {
    pub name: String,
    pub max: f64,
    /// Computed from finite differences (subject to refinement).
    pub fd_based: bool,
    /// Same residual at half the step.
    pub refined: Option<f64>,
    pub points: usize,
}

impl Stat {
    /// Fourth-order scheme: halving the step must cut the error by at least
    /// four, unless both values are at round-off.
    pub fn refinement_ok(&self) -> Option<bool> {
        self.refined.map(|fine| fine <= (self.max / 4.0).max(REFINEMENT_FLOOR))
    }
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub grid_points: usize,
    pub fd_grid_points: usize,
    pub fd_step: f64,
    pub jet_order: usize,
    pub lambdas: Vec<f64>,
    pub samples: Vec<PointSample>,
    pub stats: Vec<Stat>,
    pub phi_max: f64,
    pub grad_b_max: f64,
    /// Per entry of `lambdas`.
    pub grad_d_max: Vec<f64>,
}

impl Sweep {
    pub fn stat(&self, name: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.name == name)
    }

    pub fn b_field(&self) -> Vec<Mat<f64>> {
        self.samples.iter().map(|s| s.b.clone()).collect()
    }

    pub fn a_field(&self) -> Option<Vec<Mat<f64>>> {
        self.samples.iter().map(|s| s.a.clone()).collect()
    }

    /// `D^lambda = A + lambda B` over the grid.
    pub fn d_field(&self, lambda: f64) -> Option<Vec<Mat<f64>>> {
        self.samples
            .iter()
            .map(|s| s.a.as_ref().map(|a| a + &s.b.scale(lambda)))
            .collect()
    }

    pub fn classifier_input(&self, lambda: f64) -> Result<ClassifierInput> {
        let idx = self
            .lambdas
            .iter()
            .position(|l| *l == lambda)
            .ok_or_else(|| GeomError::Parameter(format!("lambda {lambda} was not swept")))?;
        let a = self
            .a_field()
            .ok_or_else(|| GeomError::Unsupported("classification needs the Blaschke tensor (jet order 4)".into()))?;
        Ok(ClassifierInput {
            lambda,
            b: self.b_field(),
            a,
            phi_max: self.phi_max,
            grad_b_max: self.grad_b_max,
            grad_d_max: self.grad_d_max[idx],
        })
    }
}

fn pointwise_rows(id: &IdentityResiduals, fr: Option<&FrameResiduals>, with_a: bool) -> Vec<(&'static str, f64)> {
    let mut rows = vec![("trace_b", id.trace_b), ("norm_b", id.norm_b), ("b_symmetry", id.b_symmetry)];
    if with_a {
        rows.extend([
            ("trace_a", id.trace_a),
            ("a_symmetry", id.a_symmetry),
            ("blaschke_routes", id.blaschke_routes),
            ("bianchi", id.bianchi),
            ("gauss", id.gauss),
        ]);
    }
    if let Some(fr) = fr {
        rows.extend([
            ("lap_y", fr.lap_y),
            ("y_null", fr.y_null),
            ("n_null", fr.n_null),
            ("y_n", fr.y_n),
            ("xi_norm", fr.xi_norm),
            ("frame_orthogonality", fr.orthogonality),
            ("a_from_frame", fr.a_from_frame),
            ("b_from_frame", fr.b_from_frame),
        ]);
    }
    rows
}

/// Stencil-based values at one point, named.
fn stencil_rows(st: &Stencil<f64>, lambdas: &[f64], with_a: bool) -> Result<Vec<(String, f64)>> {
    let m = st.m();
    let mut rows = Vec::new();
    if with_a {
        let id = identity_residuals(st, lambdas)?;
        let fr = frame_residuals(st)?;
        rows.push(("phi_curl".to_string(), id.phi_curl));
        rows.push(("codazzi_a".to_string(), id.codazzi_a));
        rows.push(("codazzi_b".to_string(), id.codazzi_b));
        rows.push(("grad_b".to_string(), id.grad_b));
        for (i, l) in lambdas.iter().enumerate() {
            rows.push((format!("codazzi_d(lambda={l})"), id.codazzi_d[i]));
            rows.push((format!("grad_d(lambda={l})"), id.grad_d[i]));
        }
        rows.extend([
            ("row_dy".to_string(), fr.row_dy),
            ("row_dn".to_string(), fr.row_dn),
            ("row_dyi".to_string(), fr.row_dyi),
            ("row_dxi".to_string(), fr.row_dxi),
        ]);
    } else {
        let phi = &st.center.phi;
        let db = st.covariant_derivative_2(|inv| Ok(inv.b.clone()))?;
        let mut cod = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let dij = if i == j { 1.0 } else { 0.0 };
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let lhs = db.get(i, j, k) - db.get(i, k, j);
                    cod = cod.max((lhs - (dij * phi[k] - dik * phi[j])).abs());
                }
            }
        }
        rows.push(("codazzi_b".to_string(), cod));
        rows.push(("grad_b".to_string(), db.max_abs()));
    }
    Ok(rows)
}

fn merge(acc: &mut Vec<(String, f64)>, rows: Vec<(String, f64)>) {
    if acc.is_empty() {
        *acc = rows;
        return;
    }
    for ((_, a), (_, v)) in acc.iter_mut().zip(rows) {
        *a = a.max(v);
    }
}

/// Runs the pipeline over the chart's grid.
pub fn sweep_chart(chart: &ImmersionChart<f64>, opts: &SweepOptions) -> Result<Sweep> {
    if !(3..=4).contains(&opts.jet_order) {
        return Err(GeomError::Parameter(format!("jet order must be 3 or 4, got {}", opts.jet_order)));
    }
    if !(opts.fd_step > 0.0) {
        return Err(GeomError::Parameter(format!("fd step must be positive, got {}", opts.fd_step)));
    }
    let m = chart.m();
    let n = opts.grid_points.unwrap_or_else(|| default_grid_points(m));
    let nfd = opts.fd_grid_points.unwrap_or_else(|| default_fd_grid_points(m));
    if n < 2 || nfd < 1 {
        return Err(GeomError::GridTooCoarse(format!("grid {n} / stencil grid {nfd} points per axis")));
    }
    let with_a = opts.jet_order == 4;
    let domain = chart.domain();

    let mut samples = Vec::new();
    let mut point_acc: Vec<(String, f64)> = Vec::new();
    for p in domain.grid(n) {
        let inv = point_invariants(chart, &p, opts.jet_order, opts.perturbation)?;
        let id = pointwise_identity_residuals(&inv)?;
        let fr = if with_a { Some(pointwise_frame_residuals(&inv)?) } else { None };
        let rows = pointwise_rows(&id, fr.as_ref(), with_a).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        merge(&mut point_acc, rows);
        samples.push(PointSample::from_invariants(&p, &inv));
    }
    let phi_grid = samples
        .iter()
        .flat_map(|s| s.phi.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);

    let fd_points = domain.grid(nfd);
    let run = |step: f64| -> Result<Vec<(String, f64)>> {
        let mut acc = Vec::new();
        for p in &fd_points {
            let st = Stencil::new(chart, p, step, opts.jet_order, opts.perturbation)?;
            merge(&mut acc, stencil_rows(&st, &opts.lambdas, with_a)?);
        }
        Ok(acc)
    };
    let coarse = run(opts.fd_step)?;
    let fine = if opts.refine { Some(run(opts.fd_step / 2.0)?) } else { None };

    let mut stats: Vec<Stat> = point_acc
        .into_iter()
        .map(|(name, max)| Stat { name, max, fd_based: false, refined: None, points: samples.len() })
        .collect();
    for (i, (name, max)) in coarse.iter().enumerate() {
        stats.push(Stat {
            name: name.clone(),
            max: *max,
            fd_based: true,
            refined: fine.as_ref().map(|f| f[i].1),
            points: fd_points.len(),
        });
    }
    let phi_max = phi_grid.max(stats.iter().find(|s| s.name == "phi").map_or(0.0, |s| s.max));
    let grad_b_max = stats.iter().find(|s| s.name == "grad_b").map_or(f64::NAN, |s| s.max);
    let grad_d_max = opts
        .lambdas
        .iter()
        .map(|l| {
            stats
                .iter()
                .find(|s| s.name == format!("grad_d(lambda={l})"))
                .map_or(f64::NAN, |s| s.max)
        })
        .collect();
    Ok(Sweep {
        grid_points: n,
        fd_grid_points: nfd,
        fd_step: opts.fd_step,
        jet_order: opts.jet_order,
        lambdas: opts.lambdas.clone(),
        samples,
        stats,
        phi_max,
        grad_b_max,
        grad_d_max,
    })
}

/// Largest disagreement of the invariant fields of two charts of the same
/// hypersurface at shared parameter points: conformal metric, `B` and `A`
/// eigenvalues, and `Phi` in the shared frame.
pub fn compare_invariants(c1: &ImmersionChart<f64>, c2: &ImmersionChart<f64>, points: &[Vec<f64>], order: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let i1 = point_invariants(c1, p, order, Perturbation::default())?;
        let i2 = point_invariants(c2, p, order, Perturbation::default())?;
        worst = worst.max((&i1.conformal_metric - &i2.conformal_metric).max_abs());
        let eig_diff = |x: &Mat<f64>, y: &Mat<f64>| -> Result<f64> {
            let ex = sym_eigenvalues(x)?;
            let ey = sym_eigenvalues(y)?;
            Ok(ex.iter().zip(&ey).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        };
        worst = worst.max(eig_diff(&i1.b, &i2.b)?);
        if let (Some(a1), Some(a2)) = (&i1.a, &i2.a) {
            worst = worst.max(eig_diff(a1, a2)?);
        }
        for (x, y) in i1.phi.iter().zip(&i2.phi) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// Outcome of applying random conformal transformations to a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceOutcome {
    pub trials: usize,
    pub max_deviation: f64,
    pub per_trial: Vec<f64>,
    /// Trials that found no admissible projective chart, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Applies `n` seeded random maps of `O(m+3, 2)`, re-projects, and compares
/// invariant fields on a grid of `grid_points` per axis.
pub fn equivalence_suite(chart: &ImmersionChart<f64>, n: usize, seed: u64, grid_points: usize, order: usize) -> Result<EquivalenceOutcome> {
    let m = chart.m();
    let metric = SignatureMetric::new(m + 3, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_trial = Vec::new();
    let mut skipped = Vec::new();
    for trial in 0..n {
        let map = random_pseudo_orthogonal::<f64>(&metric, rng.gen())?;
        let moved = match act_and_reproject(&map, chart) {
            Ok(c) => c,
            Err(e @ GeomError::NoAdmissibleChart(_)) => {
                skipped.push((trial, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let center = moved.domain().center();
        let moved = align_orientation(chart, moved, &center)?;
        let points = moved.domain().grid(grid_points);
        per_trial.push(compare_invariants(chart, &moved, &points, order)?);
    }
    Ok(EquivalenceOutcome {
        trials: n,
        max_deviation: per_trial.iter().cloned().fold(0.0, f64::max),
        per_trial,
        skipped,
    })
}
