//! Conformal invariants of a regular space-like hypersurface of `S^{m+1}_1`:
//! conformal metric `g = rho^2 gbar`, conformal second fundamental form `B`,
//! conformal form `Phi`, Blaschke tensor `A` (direct and via Ricci),
//! para-Blaschke tensor `D^lambda = A + lambda B`, the light-cone moving
//! frame, and finite-difference covariant derivatives of invariant fields.
//!
//! Index conventions, all in the `g`-orthonormal frame `E_i = rho^{-1} e_i`:
//! `R_ijkl = g(R(E_i, E_j) E_k, E_l)`, `R_ij = sum_k R_ikkj`,
//! `T_ijk = (nabla_{E_k} T)(E_i, E_j)`, `Phi_ij = (nabla_{E_j} Phi)(E_i)`.

use crate::chart::{Ambient, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::hypersurface::{
    christoffel_jets, coord_covariant_hessian, frame_from_tangents, hypersurface_jets, riemann_from_metric,
    HypersurfaceJets,
};
use crate::jets::Jet;
use crate::linalg::Mat;
use crate::pseudo_linalg::SignatureMetric;
use crate::scalar::Real;

/// Fewest grid points per axis accepted by the finite-difference checks.
pub const MIN_GRID_POINTS: usize = 5;

/// Additive test perturbations `eps * sin(u^1)` injected into the pointwise
/// fields, used as negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Perturbation {
    pub b11: f64,
    pub phi1: f64,
}

impl Perturbation {
    pub fn is_zero(&self) -> bool {
        self.b11 == 0.0 && self.phi1 == 0.0
    }
}

/// Curvature of the conformal metric in the frame `{E_i}`.
#[derive(Clone, Debug)]
pub struct Curvature<T> {
    m: usize,
    /// Flattened `R_ijkl`.
    pub riemann: Vec<T>,
    pub ricci: Mat<T>,
    /// `scal / (m (m - 1))`.
    pub kappa: T,
}

impl<T: Real> Curvature<T> {
    #[inline]
    pub fn r(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let m = self.m;
        self.riemann[((i * m + j) * m + k) * m + l]
    }

    /// `R(E_i, E_j, E_j, E_i)`.
    pub fn sectional(&self, i: usize, j: usize) -> T {
        self.r(i, j, j, i)
    }

    /// Largest `|R_ijkl + R_iklj + R_iljk|`.
    pub fn bianchi_defect(&self) -> T {
        let m = self.m;
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let s = self.r(i, j, k, l) + self.r(i, k, l, j) + self.r(i, l, j, k);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// All pointwise invariants at one chart point.
#[derive(Clone, Debug)]
pub struct PointInvariants<T> {
    pub point: Vec<T>,
    pub x: Vec<T>,
    pub normal: Vec<T>,
    pub rho: T,
    pub mean_curvature: T,
    /// Second fundamental form in the frame `{e_i}`.
    pub h: Mat<T>,
    /// `F` with `E_i = sum_a F_ia d_a`.
    pub frame: Mat<T>,
    /// `F^{-1}`, so `d_a = sum_i (F^{-1})_ai E_i`.
    pub frame_inv: Mat<T>,
    /// `g_ab = rho^2 gbar_ab`.
    pub conformal_metric: Mat<T>,
    /// Christoffel symbols of `g`, indexed `[c][(a, b)]`.
    pub gamma: Vec<Mat<T>>,
    pub b: Mat<T>,
    pub phi: Vec<T>,
    /// Direct Blaschke tensor; needs order-4 jets.
    pub a: Option<Mat<T>>,
    /// Curvature of `g`; needs order-4 jets.
    pub curvature: Option<Curvature<T>>,
    /// Light-cone frame; needs order-4 jets.
    pub moving_frame: Option<MovingFrame<T>>,
}

impl<T: Real> PointInvariants<T> {
    pub fn m(&self) -> usize {
        self.point.len()
    }

    pub fn blaschke(&self) -> Result<&Mat<T>> {
        self.a
            .as_ref()
            .ok_or_else(|| GeomError::Unsupported("Blaschke tensor needs order-4 jets".into()))
    }

    pub fn curvature(&self) -> Result<&Curvature<T>> {
        self.curvature
            .as_ref()
            .ok_or_else(|| GeomError::Unsupported("conformal curvature needs order-4 jets".into()))
    }

    pub fn frame_data(&self) -> Result<&MovingFrame<T>> {
        self.moving_frame
            .as_ref()
            .ok_or_else(|| GeomError::Unsupported("moving frame needs order-4 jets".into()))
    }

    pub fn para_blaschke(&self, lambda: T) -> Result<Mat<T>> {
        Ok(para_blaschke(self.blaschke()?, &self.b, lambda))
    }

    /// Blaschke tensor recovered from the Ricci curvature of `g`.
    pub fn blaschke_from_ricci(&self) -> Result<Mat<T>> {
        let c = self.curvature()?;
        blaschke_from_ricci(&c.ricci, &self.b, c.kappa)
    }
}

/// Light-cone lift and its frame at a point, in `R^{m+3}_2`.
#[derive(Clone, Debug)]
pub struct MovingFrame<T> {
    /// `Y = rho (1, x)`.
    pub y: Vec<T>,
    /// Coordinate derivatives `d_a Y`.
    pub dy: Vec<Vec<T>>,
    /// `Y_i = E_i(Y)`.
    pub y_i: Vec<Vec<T>>,
    /// `Delta Y` for the conformal metric.
    pub lap_y: Vec<T>,
    pub n: Vec<T>,
    /// `xi = (-H, -H x + n)`.
    pub xi: Vec<T>,
    /// Covariant Hessian `Y_ij` in the frame, `[i][j]` -> vector.
    pub y_ij: Vec<Vec<Vec<T>>>,
}

pub fn light_cone_metric(m: usize) -> SignatureMetric {
    SignatureMetric::new(m + 3, 2).expect("valid signature")
}

/// `D^lambda = A + lambda B`.
pub fn para_blaschke<T: Real>(a: &Mat<T>, b: &Mat<T>, lambda: T) -> Mat<T> {
    a + &b.scale(lambda)
}

/// `A = [Ric - B^2 - tr(A) I] / (m - 2)` with `tr A = (m^2 kappa - 1) / (2m)`.
pub fn blaschke_from_ricci<T: Real>(ricci: &Mat<T>, b: &Mat<T>, kappa: T) -> Result<Mat<T>> {
    let m = ricci.rows();
    if m == 2 {
        return Err(GeomError::RicciRouteUnderdetermined);
    }
    let mf = T::from_usize_lossy(m);
    let tr_a = (mf * mf * kappa - T::one()) / (T::c(2.0) * mf);
    let b2 = b * b;
    let inv = T::one() / T::from_usize_lossy(m - 2);
    Ok(Mat::from_fn(m, m, |i, j| {
        let d = if i == j { tr_a } else { T::zero() };
        (ricci[(i, j)] - b2[(i, j)] - d) * inv
    }))
}

/// `B_ij = rho^{-1} (h_ij - H delta_ij)`.
pub fn conformal_b<T: Real>(h: &Mat<T>, mean_curvature: T, rho: T) -> Mat<T> {
    let m = h.rows();
    Mat::from_fn(m, m, |i, j| {
        let d = if i == j { mean_curvature } else { T::zero() };
        (h[(i, j)] - d) / rho
    })
}

/// `Phi_i = -rho^{-2} [sum_j (h_ij - H delta_ij) e_j(log rho) + e_i(H)]`.
pub fn conformal_phi<T: Real>(h: &Mat<T>, mean_curvature: T, rho: T, e_log_rho: &[T], e_h: &[T]) -> Vec<T> {
    let m = h.rows();
    (0..m)
        .map(|i| {
            let mut s = e_h[i];
            for j in 0..m {
                let d = if i == j { mean_curvature } else { T::zero() };
                s += (h[(i, j)] - d) * e_log_rho[j];
            }
            -s / (rho * rho)
        })
        .collect()
}

/// `A_ij = -rho^{-2}[(log rho)_{,ij} - e_i(log rho) e_j(log rho) + h_ij H]
///         - 1/2 rho^{-2} (|grad log rho|^2 - H^2 - 1) delta_ij`.
pub fn blaschke_direct<T: Real>(hess_log_rho: &Mat<T>, e_log_rho: &[T], h: &Mat<T>, mean_curvature: T, rho: T) -> Mat<T> {
    let m = h.rows();
    let r2 = rho * rho;
    let grad_sq: T = e_log_rho.iter().map(|v| *v * *v).sum();
    let trace_term = T::c(0.5) * (grad_sq - mean_curvature * mean_curvature - T::one()) / r2;
    Mat::from_fn(m, m, |i, j| {
        let v = -(hess_log_rho[(i, j)] - e_log_rho[i] * e_log_rho[j] + h[(i, j)] * mean_curvature) / r2;
        if i == j {
            v - trace_term
        } else {
            v
        }
    })
}

fn frame_derivative<T: Real>(p: &Mat<T>, grad: &[T]) -> Vec<T> {
    p.mul_vec(grad)
}

/// Pointwise invariants of `chart` at `p` from jets of the given order
/// (3 or 4).
pub fn point_invariants<T: Real>(
    chart: &ImmersionChart<T>,
    p: &[T],
    order: usize,
    perturbation: Perturbation,
) -> Result<PointInvariants<T>> {
    if !matches!(chart.ambient(), Ambient::DeSitter(r) if r == 1.0) {
        return Err(GeomError::Unsupported(format!(
            "conformal invariants are defined for charts into S^(m+1)_1(1); '{}' maps into {}",
            chart.label(),
            chart.ambient().name()
        )));
    }
    if !(3..=4).contains(&order) {
        return Err(GeomError::Parameter(format!("jet order must be 3 or 4, got {order}")));
    }
    let jets = hypersurface_jets(chart, p, order)?;
    invariants_from_jets(&jets, perturbation)
}

/// Returns `other` with its normal orientation chosen so that its `B`
/// agrees in sign with that of `reference` at `p`. Conformal maps may
/// reverse time orientation, which negates `B` and leaves `g`, `A`, `Phi`
/// unchanged up to the same sign on `Phi`.
pub fn align_orientation<T: Real>(
    reference: &ImmersionChart<T>,
    other: ImmersionChart<T>,
    p: &[T],
) -> Result<ImmersionChart<T>> {
    let b_ref = point_invariants(reference, p, 3, Perturbation::default())?.b;
    let b_other = point_invariants(&other, p, 3, Perturbation::default())?.b;
    let m = b_ref.rows();
    let mut overlap = T::zero();
    for i in 0..m {
        for j in 0..m {
            overlap += b_ref[(i, j)] * b_other[(i, j)];
        }
    }
    if overlap < T::zero() {
        let flip = other.flip_normal();
        Ok(other.with_flipped_normal(!flip))
    } else {
        Ok(other)
    }
}

fn invariants_from_jets<T: Real>(jets: &HypersurfaceJets<T>, perturbation: Perturbation) -> Result<PointInvariants<T>> {
    let m = jets.m();
    let order = jets.order();
    let pe = frame_from_tangents(&jets.metric, &jets.tangents)?;
    let rho_j = jets.conformal_factor()?;
    let rho = rho_j.value();
    let log_rho = rho_j.ln()?;
    let hm = jets.mean_curvature.value();
    let h_coord = Mat::from_fn(m, m, |a, b| jets.h[a][b].value());
    let h = pe.congruence(&h_coord);
    let e_log_rho = frame_derivative(&pe, &log_rho.gradient());
    let e_h = frame_derivative(&pe, &jets.mean_curvature.gradient());

    let mut b = conformal_b(&h, hm, rho);
    let mut phi = conformal_phi(&h, hm, rho, &e_log_rho, &e_h);
    let bump = jets.point[0].sin();
    b[(0, 0)] += T::c(perturbation.b11) * bump;
    phi[0] += T::c(perturbation.phi1) * bump;

    let frame = pe.scale(T::one() / rho);
    let frame_inv = frame.inverse()?;

    // g = rho^2 gbar as jets of order N - 2
    let gorder = order - 2;
    let rho_sq = rho_j.square();
    let g: Vec<Vec<Jet<T>>> = (0..m)
        .map(|a| (0..m).map(|c| &rho_sq * &jets.gbar[a][c].truncate(gorder)).collect())
        .collect();
    let conformal_metric = Mat::from_fn(m, m, |a, c| g[a][c].value());
    let gam_j = christoffel_jets(&g)?;
    let gamma: Vec<Mat<T>> = (0..m).map(|c| Mat::from_fn(m, m, |a, d| gam_j[c][a][d].value())).collect();

    let (a, curvature, moving_frame) = if order >= 4 {
        let gbar_gamma: Vec<Mat<T>> = {
            let gj = christoffel_jets(&jets.gbar)?;
            (0..m).map(|c| Mat::from_fn(m, m, |a, d| gj[c][a][d].value())).collect()
        };
        let hess = pe.congruence(&coord_covariant_hessian(&log_rho, &gbar_gamma));
        let a = blaschke_direct(&hess, &e_log_rho, &h, hm, rho);

        let riem = riemann_from_metric(&g)?;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * m + j) * m + k) * m + l;
        // transform one index at a time
        let mut tmp = riem;
        for slot in 0..4 {
            let mut next = vec![T::zero(); m * m * m * m];
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        for l in 0..m {
                            let mut acc = T::zero();
                            for s in 0..m {
                                let (src, f) = match slot {
                                    0 => (idx(s, j, k, l), frame[(i, s)]),
                                    1 => (idx(i, s, k, l), frame[(j, s)]),
                                    2 => (idx(i, j, s, l), frame[(k, s)]),
                                    _ => (idx(i, j, k, s), frame[(l, s)]),
                                };
                                acc += f * tmp[src];
                            }
                            next[idx(i, j, k, l)] = acc;
                        }
                    }
                }
            }
            tmp = next;
        }
        let r = tmp;
        let ricci = Mat::from_fn(m, m, |i, j| (0..m).map(|k| r[idx(i, k, k, j)]).sum());
        let kappa = ricci.trace() / T::from_usize_lossy(m * (m - 1));
        let curv = Curvature { m, riemann: r, ricci, kappa };

        let mf = moving_frame(jets, &rho_j, &g, &gamma, &frame)?;
        (Some(a), Some(curv), Some(mf))
    } else {
        (None, None, None)
    };

    Ok(PointInvariants {
        point: jets.point.clone(),
        x: jets.x.iter().map(|j| j.value()).collect(),
        normal: jets.normal.iter().map(|j| j.value()).collect(),
        rho,
        mean_curvature: hm,
        h,
        frame,
        frame_inv,
        conformal_metric,
        gamma,
        b,
        phi,
        a,
        curvature,
        moving_frame,
    })
}

fn moving_frame<T: Real>(
    jets: &HypersurfaceJets<T>,
    rho: &Jet<T>,
    g: &[Vec<Jet<T>>],
    gamma: &[Mat<T>],
    frame: &Mat<T>,
) -> Result<MovingFrame<T>> {
    let m = jets.m();
    let lc = light_cone_metric(m);
    let mut yj: Vec<Jet<T>> = Vec::with_capacity(m + 3);
    yj.push(rho.clone());
    for c in &jets.x {
        yj.push(rho * &c.truncate(rho.order()));
    }
    let y: Vec<T> = yj.iter().map(|j| j.value()).collect();
    let dy: Vec<Vec<T>> = (0..m).map(|a| yj.iter().map(|j| j.coeffs()[1 + a]).collect()).collect();
    let d2y = |a: usize, b: usize| -> Vec<T> {
        let mut multi = vec![0u8; m];
        multi[a] += 1;
        multi[b] += 1;
        yj.iter().map(|j| j.partial(&multi)).collect()
    };
    let cov = |a: usize, b: usize| -> Vec<T> {
        let mut v = d2y(a, b);
        for c in 0..m {
            for (vi, di) in v.iter_mut().zip(&dy[c]) {
                *vi -= gamma[c][(a, b)] * *di;
            }
        }
        v
    };
    let g0 = Mat::from_fn(m, m, |a, b| g[a][b].value());
    let ginv = g0.inverse()?;
    let dim = m + 3;
    let covs: Vec<Vec<Vec<T>>> = (0..m).map(|a| (0..m).map(|b| cov(a, b)).collect()).collect();
    let mut lap = vec![T::zero(); dim];
    for a in 0..m {
        for b in 0..m {
            for s in 0..dim {
                lap[s] += ginv[(a, b)] * covs[a][b][s];
            }
        }
    }
    let mf = T::from_usize_lossy(m);
    let ll = lc.dot(&lap, &lap);
    let n: Vec<T> = (0..dim).map(|s| -lap[s] / mf - ll * y[s] / (T::c(2.0) * mf * mf)).collect();
    let hm = jets.mean_curvature.value();
    let mut xi = Vec::with_capacity(dim);
    xi.push(-hm);
    for (xs, ns) in jets.x.iter().zip(&jets.normal) {
        xi.push(-hm * xs.value() + ns.value());
    }
    let y_i: Vec<Vec<T>> = (0..m)
        .map(|i| (0..dim).map(|s| (0..m).map(|a| frame[(i, a)] * dy[a][s]).sum()).collect())
        .collect();
    let y_ij: Vec<Vec<Vec<T>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..dim)
                        .map(|s| {
                            let mut acc = T::zero();
                            for a in 0..m {
                                for b in 0..m {
                                    acc += frame[(i, a)] * frame[(j, b)] * covs[a][b][s];
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(MovingFrame { y, dy, y_i, lap_y: lap, n, xi, y_ij })
}

/// Invariants at a point and at the four axis offsets `+-h, +-2h` per
/// coordinate axis, for fourth-order central differences.
#[derive(Clone, Debug)]
pub struct Stencil<T> {
    pub center: PointInvariants<T>,
    /// `[axis] -> [-2h, -h, +h, +2h]`.
    pub neighbors: Vec<[PointInvariants<T>; 4]>,
    pub step: T,
}

impl<T: Real> Stencil<T> {
    pub fn new(chart: &ImmersionChart<T>, p: &[T], step: T, order: usize, perturbation: Perturbation) -> Result<Self> {
        let m = chart.m();
        let center = point_invariants(chart, p, order, perturbation)?;
        let mut neighbors = Vec::with_capacity(m);
        for ax in 0..m {
            let at = |k: T| -> Result<PointInvariants<T>> {
                let mut q = p.to_vec();
                q[ax] += k * step;
                point_invariants(chart, &q, order, perturbation).map_err(|e| match e {
                    GeomError::OutsideDomain(s) => {
                        GeomError::OutsideDomain(format!("{s} (finite-difference stencil leaves the chart)"))
                    }
                    other => other,
                })
            };
            neighbors.push([at(T::c(-2.0))?, at(-T::one())?, at(T::one())?, at(T::c(2.0))?]);
        }
        Ok(Self { center, neighbors, step })
    }

    pub fn m(&self) -> usize {
        self.center.m()
    }

    /// `d_axis f` at the center, Richardson-extrapolated central differences.
    pub fn partial(&self, axis: usize, mut f: impl FnMut(&PointInvariants<T>) -> Vec<T>) -> Vec<T> {
        let [m2, m1, p1, p2] = &self.neighbors[axis];
        let (fm2, fm1, fp1, fp2) = (f(m2), f(m1), f(p1), f(p2));
        let denom = T::c(12.0) * self.step;
        (0..fm1.len())
            .map(|s| (T::c(8.0) * (fp1[s] - fm1[s]) - (fp2[s] - fm2[s])) / denom)
            .collect()
    }

    /// `T_ijk` for a symmetric 2-tensor field given by its frame components.
    pub fn covariant_derivative_2(&self, field: impl Fn(&PointInvariants<T>) -> Result<Mat<T>>) -> Result<Tensor3<T>> {
        let m = self.m();
        let coord = |inv: &PointInvariants<T>| -> Result<Vec<T>> {
            let t = field(inv)?;
            Ok(inv.frame_inv.congruence(&t).as_slice().to_vec())
        };
        let mut errors: Option<GeomError> = None;
        let mut safe = |inv: &PointInvariants<T>| -> Vec<T> {
            match coord(inv) {
                Ok(v) => v,
                Err(e) => {
                    errors.get_or_insert(e);
                    vec![T::zero(); m * m]
                }
            }
        };
        let center = safe(&self.center);
        let derivs: Vec<Vec<T>> = (0..m).map(|ax| self.partial(ax, &mut safe)).collect();
        if let Some(e) = errors {
            return Err(e);
        }
        let gam = &self.center.gamma;
        // nabla_c T_ab = d_c T_ab - Gamma^d_ca T_db - Gamma^d_cb T_ad
        let mut cov = vec![T::zero(); m * m * m];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut v = derivs[c][a * m + b];
                    for d in 0..m {
                        v -= gam[d][(c, a)] * center[d * m + b] + gam[d][(c, b)] * center[a * m + d];
                    }
                    cov[(a * m + b) * m + c] = v;
                }
            }
        }
        Ok(Tensor3::from_coords(&cov, &self.center.frame, m))
    }

    /// `Phi_ij` for a 1-form field given by its frame components.
    pub fn covariant_derivative_1(&self, field: impl Fn(&PointInvariants<T>) -> Vec<T>) -> Mat<T> {
        let m = self.m();
        let coord = |inv: &PointInvariants<T>| -> Vec<T> { inv.frame_inv.mul_vec(&field(inv)) };
        let center = coord(&self.center);
        let derivs: Vec<Vec<T>> = (0..m).map(|ax| self.partial(ax, coord)).collect();
        let gam = &self.center.gamma;
        let cov = Mat::from_fn(m, m, |a, b| {
            // nabla_b Phi_a
            let mut v = derivs[b][a];
            for d in 0..m {
                v -= gam[d][(b, a)] * center[d];
            }
            v
        });
        // Phi_ij = F_ia F_jb nabla_b Phi_a
        self.center.frame.congruence(&cov)
    }
}

/// Frame components `T_ijk` of a 3-tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    m: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    fn from_coords(cov: &[T], frame: &Mat<T>, m: usize) -> Self {
        let mut data = vec![T::zero(); m * m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut acc = T::zero();
                    for a in 0..m {
                        for b in 0..m {
                            let fab = frame[(i, a)] * frame[(j, b)];
                            for c in 0..m {
                                acc += fab * frame[(k, c)] * cov[(a * m + b) * m + c];
                            }
                        }
                    }
                    data[(i * m + j) * m + k] = acc;
                }
            }
        }
        Self { m, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.m + j) * self.m + k]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Pointwise values of the named identities at one stencil.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    pub trace_b: f64,
    pub norm_b: f64,
    pub trace_a: f64,
    pub blaschke_routes: f64,
    pub b_symmetry: f64,
    pub a_symmetry: f64,
    pub bianchi: f64,
    /// `Phi_ij - Phi_ji = (BA - AB)_ij`.
    pub phi_curl: f64,
    /// `A_ijk - A_ikj = B_ij Phi_k - B_ik Phi_j`.
    pub codazzi_a: f64,
    /// `B_ijk - B_ikj = delta_ij Phi_k - delta_ik Phi_j`.
    pub codazzi_b: f64,
    /// Gauss-type curvature formula in terms of `A`, `B`.
    pub gauss: f64,
    /// `D_ijk - D_ikj = (B_ij + lambda delta_ij) Phi_k - (B_ik + lambda delta_ik) Phi_j`, per lambda.
    pub codazzi_d: Vec<f64>,
    pub grad_b: f64,
    pub grad_d: Vec<f64>,
    pub phi: f64,
    pub commutator: f64,
}

fn delta<T: Real>(i: usize, j: usize) -> T {
    if i == j {
        T::one()
    } else {
        T::zero()
    }
}

fn codazzi_defect<T: Real>(t: &Tensor3<T>, rhs: impl Fn(usize, usize, usize) -> T, m: usize) -> T {
    let mut worst = T::zero();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let lhs = t.get(i, j, k) - t.get(i, k, j);
                worst = worst.max((lhs - rhs(i, j, k)).abs());
            }
        }
    }
    worst
}

/// The identities that need no neighbors. Fields depending on `A` stay zero
/// when the invariants were computed at jet order 3.
pub fn pointwise_identity_residuals<T: Real>(c: &PointInvariants<T>) -> Result<IdentityResiduals> {
    let m = c.m();
    let f = |v: T| v.to_f64_lossy();
    let b = &c.b;
    let mf = T::from_usize_lossy(m);
    let mut r = IdentityResiduals {
        trace_b: f(b.trace().abs()),
        norm_b: f((b.norm_sq() - (mf - T::one()) / mf).abs()),
        b_symmetry: f(b.asymmetry()),
        phi: f(c.phi.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))),
        ..Default::default()
    };
    let (Some(a), Some(curv)) = (c.a.as_ref(), c.curvature.as_ref()) else { return Ok(r) };
    r.trace_a = f((a.trace() - (mf * mf * curv.kappa - T::one()) / (T::c(2.0) * mf)).abs());
    r.a_symmetry = f(a.asymmetry());
    r.bianchi = f(curv.bianchi_defect());
    if m >= 3 {
        r.blaschke_routes = f((&c.blaschke_from_ricci()? - a).max_abs());
    }
    r.commutator = f((&(b * a) - &(a * b)).max_abs());
    let mut gauss = T::zero();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let pred = b[(i, k)] * b[(j, l)] - b[(i, l)] * b[(j, k)] + a[(i, l)] * delta::<T>(j, k)
                        - a[(i, k)] * delta::<T>(j, l)
                        + a[(j, k)] * delta::<T>(i, l)
                        - a[(j, l)] * delta::<T>(i, k);
                    gauss = gauss.max((curv.r(i, j, k, l) - pred).abs());
                }
            }
        }
    }
    r.gauss = f(gauss);
    Ok(r)
}

/// Residuals of the pointwise and integrability identities at a stencil.
pub fn identity_residuals<T: Real>(st: &Stencil<T>, lambdas: &[f64]) -> Result<IdentityResiduals> {
    let c = &st.center;
    let m = c.m();
    let f = |v: T| v.to_f64_lossy();
    let a = c.blaschke()?;
    let b = &c.b;
    let phi = &c.phi;
    let mut r = pointwise_identity_residuals(c)?;
    let comm = &(b * a) - &(a * b);

    let dphi = st.covariant_derivative_1(|inv| inv.phi.clone());
    let mut curl = T::zero();
    for i in 0..m {
        for j in 0..m {
            curl = curl.max((dphi[(i, j)] - dphi[(j, i)] - comm[(i, j)]).abs());
        }
    }
    r.phi_curl = f(curl);

    let db = st.covariant_derivative_2(|inv| Ok(inv.b.clone()))?;
    r.grad_b = f(db.max_abs());
    r.codazzi_b = f(codazzi_defect(&db, |i, j, k| delta::<T>(i, j) * phi[k] - delta::<T>(i, k) * phi[j], m));

    let da = st.covariant_derivative_2(|inv| inv.blaschke().cloned())?;
    r.codazzi_a = f(codazzi_defect(&da, |i, j, k| b[(i, j)] * phi[k] - b[(i, k)] * phi[j], m));

    for &lam in lambdas {
        let l = T::c(lam);
        // nabla D = nabla A + lambda nabla B, computed from the D field itself
        let dd = st.covariant_derivative_2(|inv| inv.para_blaschke(l))?;
        r.grad_d.push(f(dd.max_abs()));
        r.codazzi_d.push(f(codazzi_defect(
            &dd,
            |i, j, k| (b[(i, j)] + l * delta::<T>(i, j)) * phi[k] - (b[(i, k)] + l * delta::<T>(i, k)) * phi[j],
            m,
        )));
    }
    Ok(r)
}

/// Residuals of the light-cone frame identities at a stencil.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameResiduals {
    /// `<Delta Y, Y> + m`.
    pub lap_y: f64,
    pub y_null: f64,
    pub n_null: f64,
    pub y_n: f64,
    pub xi_norm: f64,
    /// Orthogonality of `xi` and `Y_i` to `Y`, `N` and each other.
    pub orthogonality: f64,
    /// `A_ij = -<Y_ij, N>`.
    pub a_from_frame: f64,
    /// `B_ij = -<Y_ij, xi>`.
    pub b_from_frame: f64,
    /// `dY(E_k) = Y_k`.
    pub row_dy: f64,
    /// `dN(E_k) = sum_i A_ik Y_i + Phi_k xi`.
    pub row_dn: f64,
    /// `nabla_k Y_i = -A_ik Y - delta_ik N + B_ik xi`.
    pub row_dyi: f64,
    /// `dxi(E_k) = Phi_k Y + sum_i B_ik Y_i`.
    pub row_dxi: f64,
}

/// The frame identities that need no neighbors (all but the four rows).
pub fn pointwise_frame_residuals<T: Real>(c: &PointInvariants<T>) -> Result<FrameResiduals> {
    let m = c.m();
    let lc = light_cone_metric(m);
    let mf = c.frame_data()?;
    let a = c.blaschke()?;
    let b = &c.b;
    let f = |v: T| v.to_f64_lossy();
    let dot = |u: &[T], v: &[T]| lc.dot(u, v);

    let mut r = FrameResiduals {
        lap_y: f((dot(&mf.lap_y, &mf.y) + T::from_usize_lossy(m)).abs()),
        y_null: f(dot(&mf.y, &mf.y).abs()),
        n_null: f(dot(&mf.n, &mf.n).abs()),
        y_n: f((dot(&mf.y, &mf.n) - T::one()).abs()),
        xi_norm: f((dot(&mf.xi, &mf.xi) + T::one()).abs()),
        ..Default::default()
    };
    let mut orth = T::zero();
    for v in [&mf.y, &mf.n] {
        orth = orth.max(dot(&mf.xi, v).abs());
        for yi in &mf.y_i {
            orth = orth.max(dot(yi, v).abs());
        }
    }
    for i in 0..m {
        orth = orth.max(dot(&mf.xi, &mf.y_i[i]).abs());
        for j in 0..m {
            orth = orth.max((dot(&mf.y_i[i], &mf.y_i[j]) - delta::<T>(i, j)).abs());
        }
    }
    r.orthogonality = f(orth);

    let mut af = T::zero();
    let mut bf = T::zero();
    for i in 0..m {
        for j in 0..m {
            af = af.max((a[(i, j)] + dot(&mf.y_ij[i][j], &mf.n)).abs());
            bf = bf.max((b[(i, j)] + dot(&mf.y_ij[i][j], &mf.xi)).abs());
        }
    }
    r.a_from_frame = f(af);
    r.b_from_frame = f(bf);
    Ok(r)
}

pub fn frame_residuals<T: Real>(st: &Stencil<T>) -> Result<FrameResiduals> {
    let c = &st.center;
    let m = c.m();
    let mf = c.frame_data()?;
    let a = c.blaschke()?;
    let b = &c.b;
    let phi = &c.phi;
    let f = |v: T| v.to_f64_lossy();
    let dim = m + 3;
    let mut r = pointwise_frame_residuals(c)?;

    let frame_dir = |k: usize, d: &[Vec<T>]| -> Vec<T> {
        (0..dim).map(|s| (0..m).map(|ax| c.frame[(k, ax)] * d[ax][s]).sum()).collect()
    };
    let grab = |sel: fn(&MovingFrame<T>) -> &Vec<T>| {
        move |inv: &PointInvariants<T>| -> Vec<T> {
            inv.moving_frame.as_ref().map(|mf| sel(mf).clone()).unwrap_or_default()
        }
    };
    let d_y: Vec<Vec<T>> = (0..m).map(|ax| st.partial(ax, grab(|mf| &mf.y))).collect();
    let d_n: Vec<Vec<T>> = (0..m).map(|ax| st.partial(ax, grab(|mf| &mf.n))).collect();
    let d_xi: Vec<Vec<T>> = (0..m).map(|ax| st.partial(ax, grab(|mf| &mf.xi))).collect();
    let max_diff = |u: &[T], v: &[T]| u.iter().zip(v).fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs()));

    let (mut ry, mut rn, mut rxi) = (T::zero(), T::zero(), T::zero());
    for k in 0..m {
        ry = ry.max(max_diff(&frame_dir(k, &d_y), &mf.y_i[k]));
        let pred_n: Vec<T> = (0..dim)
            .map(|s| (0..m).map(|i| a[(i, k)] * mf.y_i[i][s]).sum::<T>() + phi[k] * mf.xi[s])
            .collect();
        rn = rn.max(max_diff(&frame_dir(k, &d_n), &pred_n));
        let pred_xi: Vec<T> = (0..dim)
            .map(|s| phi[k] * mf.y[s] + (0..m).map(|i| b[(i, k)] * mf.y_i[i][s]).sum::<T>())
            .collect();
        rxi = rxi.max(max_diff(&frame_dir(k, &d_xi), &pred_xi));
    }
    r.row_dy = f(ry);
    r.row_dn = f(rn);
    r.row_dxi = f(rxi);

    // nabla_b (d_a Y) = d_b (d_a Y) - Gamma^c_ba d_c Y, by differences of d_a Y
    let d_dy: Vec<Vec<Vec<T>>> = (0..m)
        .map(|bx| {
            (0..m)
                .map(|ax| {
                    st.partial(bx, |inv: &PointInvariants<T>| {
                        inv.moving_frame.as_ref().map(|mf| mf.dy[ax].clone()).unwrap_or_default()
                    })
                })
                .collect()
        })
        .collect();
    let mut rdyi = T::zero();
    for i in 0..m {
        for k in 0..m {
            let mut lhs = vec![T::zero(); dim];
            for ax in 0..m {
                for bx in 0..m {
                    let w = c.frame[(i, ax)] * c.frame[(k, bx)];
                    for s in 0..dim {
                        let mut v = d_dy[bx][ax][s];
                        for cx in 0..m {
                            v -= c.gamma[cx][(bx, ax)] * mf.dy[cx][s];
                        }
                        lhs[s] += w * v;
                    }
                }
            }
            let pred: Vec<T> = (0..dim)
                .map(|s| -a[(i, k)] * mf.y[s] - delta::<T>(i, k) * mf.n[s] + b[(i, k)] * mf.xi[s])
                .collect();
            rdyi = rdyi.max(max_diff(&lhs, &pred));
        }
    }
    r.row_dyi = f(rdyi);
    Ok(r)
}
