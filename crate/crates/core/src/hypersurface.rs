//! Classical first- and second-order data of a space-like hypersurface:
//! induced metric, time-like normal, second fundamental form, mean
//! curvature, conformal factor, frames and Christoffel symbols.
//!
//! Sign of the second fundamental form: `h = <dn, dx>`, computed as
//! `h_ab = -<n, d_a d_b x>`.

use crate::chart::{Ambient, ImmersionChart};
use crate::error::{GeomError, Result};
use crate::jets::{jet_inverse, jet_solve, Jet};
use crate::linalg::Mat;
use crate::pseudo_linalg::{orthonormalize_with_coeffs, timelike_normal, LorentzVector, SignatureMetric};
use crate::scalar::Real;

/// Relative threshold on `|h|^2 - m H^2` below which a point is umbilic.
pub const TOL_UMBILIC: f64 = 1e-9;

/// `<a, b>` for jet-valued vectors.
pub fn jet_dot<T: Real>(metric: &SignatureMetric, a: &[Jet<T>], b: &[Jet<T>]) -> Jet<T> {
    let mut acc = &a[0] * &b[0] * metric.sign::<T>(0);
    for i in 1..a.len() {
        let t = &a[i] * &b[i];
        if metric.sign::<T>(i) < T::zero() {
            acc -= &t;
        } else {
            acc += &t;
        }
    }
    acc
}

fn values<T: Real>(v: &[Jet<T>]) -> Vec<T> {
    v.iter().map(|j| j.value()).collect()
}

/// `Gamma^c_ab` from metric jets of order >= 1, as order-`(k-1)` jets.
/// Indexed `[c][a][b]`.
pub fn christoffel_jets<T: Real>(g: &[Vec<Jet<T>>]) -> Result<Vec<Vec<Vec<Jet<T>>>>> {
    let m = g.len();
    let order = g[0][0].order();
    if order == 0 {
        return Err(GeomError::Unsupported("Christoffel symbols need first derivatives of the metric".into()));
    }
    let low: Vec<Vec<Jet<T>>> = g.iter().map(|r| r.iter().map(|j| j.truncate(order - 1)).collect()).collect();
    let ginv = jet_inverse(&low).map_err(|_| GeomError::Singular("metric not invertible".into()))?;
    let dg: Vec<Vec<Vec<Jet<T>>>> = (0..m)
        .map(|c| (0..m).map(|a| (0..m).map(|b| g[a][b].derivative(c)).collect()).collect())
        .collect();
    // first kind: [ab, d] = 1/2 (d_a g_db + d_b g_da - d_d g_ab)
    let half = T::c(0.5);
    let mut out = vec![vec![Vec::with_capacity(m); m]; m];
    for c in 0..m {
        for a in 0..m {
            for b in 0..m {
                let mut acc = low[0][0].constant_like(T::zero());
                for d in 0..m {
                    let first = &(&dg[a][d][b] + &dg[b][d][a]) - &dg[d][a][b];
                    acc += &(&ginv[c][d] * &first);
                }
                out[c][a].push(acc * half);
            }
        }
    }
    Ok(out)
}

/// Riemann tensor `R_abcd = g(R(d_a, d_b) d_c, d_d)` in coordinates, from
/// metric jets of order >= 2.
pub fn riemann_from_metric<T: Real>(g: &[Vec<Jet<T>>]) -> Result<Vec<T>> {
    let m = g.len();
    if g[0][0].order() < 2 {
        return Err(GeomError::Unsupported("curvature needs second derivatives of the metric".into()));
    }
    let gam = christoffel_jets(g)?;
    let gv = |a: usize, b: usize| g[a][b].value();
    let gam0 = |c: usize, a: usize, b: usize| gam[c][a][b].value();
    let dgam = |d: usize, c: usize, a: usize, b: usize| gam[c][a][b].coeffs()[1 + d];
    // R^l_{kij} = d_i G^l_jk - d_j G^l_ik + G^l_ip G^p_jk - G^l_jp G^p_ik
    let mut out = vec![T::zero(); m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut acc = T::zero();
                    for q in 0..m {
                        let mut up = dgam(i, q, j, k) - dgam(j, q, i, k);
                        for p in 0..m {
                            up += gam0(q, i, p) * gam0(p, j, k) - gam0(q, j, p) * gam0(p, i, k);
                        }
                        acc += gv(l, q) * up;
                    }
                    out[((i * m + j) * m + k) * m + l] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Jets of all hypersurface quantities at one chart point.
#[derive(Clone, Debug)]
pub struct HypersurfaceJets<T> {
    pub point: Vec<T>,
    pub metric: SignatureMetric,
    /// Ambient position, order `N`.
    pub x: Vec<Jet<T>>,
    /// `d_a x`, order `N - 1`.
    pub tangents: Vec<Vec<Jet<T>>>,
    /// Induced metric, order `N - 1`.
    pub gbar: Vec<Vec<Jet<T>>>,
    /// Unit normal, order `N - 1`.
    pub normal: Vec<Jet<T>>,
    /// Second fundamental form in coordinates, order `N - 2`.
    pub h: Vec<Vec<Jet<T>>>,
    pub mean_curvature: Jet<T>,
    /// `|h|^2 - m H^2`, order `N - 2`.
    pub traceless_norm_sq: Jet<T>,
}

impl<T: Real> HypersurfaceJets<T> {
    pub fn m(&self) -> usize {
        self.point.len()
    }

    pub fn order(&self) -> usize {
        self.x[0].order()
    }

    /// `rho = sqrt(m/(m-1) (|h|^2 - m H^2))`, order `N - 2`.
    pub fn conformal_factor(&self) -> Result<Jet<T>> {
        let m = self.m();
        let q = self.traceless_norm_sq.value();
        let hsq = self.h_norm_sq_value();
        if !(q > T::c(TOL_UMBILIC) * hsq.max(T::one())) {
            return Err(GeomError::Umbilic(q.to_f64_lossy()));
        }
        let c = T::from_usize_lossy(m) / T::from_usize_lossy(m - 1);
        (&self.traceless_norm_sq * c).sqrt()
    }

    fn h_norm_sq_value(&self) -> T {
        let hm = self.mean_curvature.value();
        self.traceless_norm_sq.value() + T::from_usize_lossy(self.m()) * hm * hm
    }
}

/// Evaluates the chart at `p` to `order` and derives the hypersurface jets.
pub fn hypersurface_jets<T: Real>(chart: &ImmersionChart<T>, p: &[T], order: usize) -> Result<HypersurfaceJets<T>> {
    if order < 2 {
        return Err(GeomError::Unsupported("second fundamental form needs jets of order >= 2".into()));
    }
    if chart.ambient() == Ambient::LightCone {
        return Err(GeomError::Unsupported("hypersurface data of a light-cone chart".into()));
    }
    let m = chart.m();
    let metric = chart.metric();
    let x = chart.evaluate(p, order)?;
    let tangents: Vec<Vec<Jet<T>>> = (0..m).map(|a| x.iter().map(|c| c.derivative(a)).collect()).collect();

    let gbar: Vec<Vec<Jet<T>>> =
        (0..m).map(|a| (0..m).map(|b| jet_dot(&metric, &tangents[a], &tangents[b])).collect()).collect();
    let g0 = Mat::from_fn(m, m, |a, b| gbar[a][b].value());
    if g0.cholesky().is_err() {
        return Err(GeomError::NotSpacelike(format!("induced metric not positive definite at {:?}", values_f64(p))));
    }

    let normal = unit_normal_jets(chart, &metric, &x, &tangents, p)?;

    let n2: Vec<Jet<T>> = normal.iter().map(|j| j.truncate(order - 2)).collect();
    let mut h = vec![Vec::with_capacity(m); m];
    for a in 0..m {
        for b in 0..m {
            let dd: Vec<Jet<T>> = tangents[b].iter().map(|c| c.derivative(a)).collect();
            h[a].push(-jet_dot(&metric, &n2, &dd));
        }
    }
    let g2: Vec<Vec<Jet<T>>> = gbar.iter().map(|r| r.iter().map(|j| j.truncate(order - 2)).collect()).collect();
    let ginv = jet_inverse(&g2)?;
    let mut trace = h[0][0].constant_like(T::zero());
    let mut norm_sq = trace.clone();
    // mixed tensor h^a_b = g^{ac} h_cb
    let mut mixed = vec![Vec::with_capacity(m); m];
    for a in 0..m {
        for b in 0..m {
            let mut acc = trace.constant_like(T::zero());
            for c in 0..m {
                acc += &(&ginv[a][c] * &h[c][b]);
            }
            mixed[a].push(acc);
        }
    }
    for a in 0..m {
        trace += &mixed[a][a];
        for b in 0..m {
            norm_sq += &(&mixed[a][b] * &mixed[b][a]);
        }
    }
    let mf = T::from_usize_lossy(m);
    let mean_curvature = trace / mf;
    let traceless_norm_sq = &norm_sq - &(mean_curvature.square() * mf);
    Ok(HypersurfaceJets {
        point: p.to_vec(),
        metric,
        x,
        tangents,
        gbar,
        normal,
        h,
        mean_curvature,
        traceless_norm_sq,
    })
}

fn values_f64<T: Real>(p: &[T]) -> Vec<f64> {
    p.iter().map(|v| v.to_f64_lossy()).collect()
}

/// Sign convention for the unit normal: future-pointing (`n_0 > 0`) with one
/// time-like slot; for two time-like slots, `(x, n)` positively oriented in
/// the time-like coordinate plane. Charts may request the opposite sign.
fn orient<T: Real>(chart: &ImmersionChart<T>, x: &[T], n: &mut [T]) {
    let positive = match chart.metric().timelike() {
        1 => n[0] > T::zero(),
        _ => x[0] * n[1] - x[1] * n[0] > T::zero(),
    };
    if positive == chart.flip_normal() {
        n.iter_mut().for_each(|v| *v = -*v);
    }
}

fn unit_normal_jets<T: Real>(
    chart: &ImmersionChart<T>,
    metric: &SignatureMetric,
    x: &[Jet<T>],
    tangents: &[Vec<Jet<T>>],
    p: &[T],
) -> Result<Vec<Jet<T>>> {
    let order = tangents[0][0].order();
    let mut cons: Vec<Vec<Jet<T>>> = Vec::new();
    if chart.ambient().quadric_value().is_some() {
        cons.push(x.iter().map(|j| j.truncate(order)).collect());
    }
    cons.extend(tangents.iter().cloned());
    let cons0: Vec<LorentzVector<T>> =
        cons.iter().map(|c| LorentzVector::new(*metric, values(c))).collect::<Result<_>>()?;
    let mut v0 = timelike_normal(metric, &cons0)
        .map_err(|e| match e {
            GeomError::NoTimelikeNormal(s) => GeomError::NoTimelikeNormal(format!("{s} at {:?}", values_f64(p))),
            other => other,
        })?
        .coords;
    orient(chart, &values(x), &mut v0);

    // n_raw = v0 - sum_a y_a c_a with <n_raw, c_b> = 0 as jets
    let k = cons.len();
    let zero = x[0].truncate(order).constant_like(T::zero());
    let v0j: Vec<Jet<T>> = v0.iter().map(|v| zero.constant_like(*v)).collect();
    let gram: Vec<Vec<Jet<T>>> =
        (0..k).map(|a| (0..k).map(|b| jet_dot(metric, &cons[a], &cons[b])).collect()).collect();
    let rhs: Vec<Jet<T>> = (0..k).map(|a| jet_dot(metric, &v0j, &cons[a])).collect();
    let y = jet_solve(&gram, &rhs).map_err(|_| GeomError::NoTimelikeNormal("tangent span degenerate".into()))?;
    let mut n = v0j;
    for (ya, c) in y.iter().zip(&cons) {
        for (ni, ci) in n.iter_mut().zip(c) {
            *ni -= &(ya * ci);
        }
    }
    let nn = jet_dot(metric, &n, &n);
    if !(nn.value() < T::zero()) {
        return Err(GeomError::NoTimelikeNormal(format!("normal not time-like at {:?}", values_f64(p))));
    }
    let scale = (-nn).powf(T::c(-0.5))?;
    Ok(n.iter().map(|c| c * &scale).collect())
}

/// Pointwise classical data.
#[derive(Clone, Debug)]
pub struct FirstOrderData<T> {
    pub point: Vec<T>,
    pub induced_metric: Mat<T>,
    pub normal: LorentzVector<T>,
    /// Second fundamental form in coordinates.
    pub h_coord: Mat<T>,
    /// Second fundamental form in the frame `{e_i}`.
    pub second_fundamental: Mat<T>,
    pub mean_curvature: T,
    pub conformal_factor: T,
    /// `P` with `e_i = sum_a P_ia d_a`.
    pub coord_to_frame: Mat<T>,
    /// `christoffels[c][(a, b)] = Gamma^c_ab` of the induced metric.
    pub christoffels: Vec<Mat<T>>,
}

/// Orthonormal frame of the induced metric from Gram-Schmidt on the
/// coordinate tangents (lower triangular `P`).
pub fn frame_from_tangents<T: Real>(metric: &SignatureMetric, tangents: &[Vec<Jet<T>>]) -> Result<Mat<T>> {
    let vecs: Vec<LorentzVector<T>> =
        tangents.iter().map(|t| LorentzVector::new(*metric, values(t))).collect::<Result<_>>()?;
    let (_, p) = orthonormalize_with_coeffs(metric, &vecs)?;
    Ok(p)
}

fn christoffels_numeric<T: Real>(gbar: &[Vec<Jet<T>>]) -> Result<Vec<Mat<T>>> {
    let m = gbar.len();
    let gam = christoffel_jets(gbar)?;
    Ok((0..m).map(|c| Mat::from_fn(m, m, |a, b| gam[c][a][b].value())).collect())
}

impl<T: Real> HypersurfaceJets<T> {
    pub fn first_order_data(&self) -> Result<FirstOrderData<T>> {
        let m = self.m();
        let p = frame_from_tangents(&self.metric, &self.tangents)?;
        let h_coord = Mat::from_fn(m, m, |a, b| self.h[a][b].value());
        let rho = self.conformal_factor()?.value();
        Ok(FirstOrderData {
            point: self.point.clone(),
            induced_metric: Mat::from_fn(m, m, |a, b| self.gbar[a][b].value()),
            normal: LorentzVector::new(self.metric, values(&self.normal))?,
            second_fundamental: p.congruence(&h_coord),
            h_coord,
            mean_curvature: self.mean_curvature.value(),
            conformal_factor: rho,
            coord_to_frame: p,
            christoffels: christoffels_numeric(&self.gbar)?,
        })
    }
}

/// `gbar_ab = <d_a x, d_b x>`.
pub fn first_fundamental<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<Mat<T>> {
    let m = chart.m();
    let metric = chart.metric();
    let x = chart.evaluate(p, 1)?;
    let t: Vec<Vec<T>> = (0..m).map(|a| x.iter().map(|c| c.coeffs()[1 + a]).collect()).collect();
    let g = Mat::from_fn(m, m, |a, b| metric.dot(&t[a], &t[b]));
    if g.cholesky().is_err() {
        return Err(GeomError::NotSpacelike(format!("induced metric not positive definite at {:?}", values_f64(p))));
    }
    Ok(g)
}

/// `(h in the frame {e_i}, H)`.
pub fn second_fundamental<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<(Mat<T>, T)> {
    let jets = hypersurface_jets(chart, p, 2)?;
    let m = chart.m();
    let frame = frame_from_tangents(&jets.metric, &jets.tangents)?;
    let h = Mat::from_fn(m, m, |a, b| jets.h[a][b].value());
    Ok((frame.congruence(&h), jets.mean_curvature.value()))
}

pub fn conformal_factor<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<T> {
    Ok(hypersurface_jets(chart, p, 2)?.conformal_factor()?.value())
}

/// `Gamma^c_ab` of the induced metric, indexed `[c][(a, b)]`.
pub fn christoffels<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<Vec<Mat<T>>> {
    let jets = hypersurface_jets(chart, p, 3)?;
    christoffels_numeric(&jets.gbar)
}

/// `(log rho)_{,ij}` in the frame `{e_i}`.
pub fn covariant_hessian_logrho<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<Mat<T>> {
    let jets = hypersurface_jets(chart, p, 4)?;
    let m = chart.m();
    let log_rho = jets.conformal_factor()?.ln()?;
    let gam = christoffels_numeric(&jets.gbar)?;
    let hess = coord_covariant_hessian(&log_rho, &gam);
    let frame = frame_from_tangents(&jets.metric, &jets.tangents)?;
    debug_assert_eq!(hess.rows(), m);
    Ok(frame.congruence(&hess))
}

/// `d_a d_b f - Gamma^c_ab d_c f` from a jet of order >= 2.
pub fn coord_covariant_hessian<T: Real>(f: &Jet<T>, gam: &[Mat<T>]) -> Mat<T> {
    let m = f.num_vars();
    let grad = f.gradient();
    let hess = f.hessian();
    Mat::from_fn(m, m, |a, b| {
        let mut v = hess[a][b];
        for c in 0..m {
            v -= gam[c][(a, b)] * grad[c];
        }
        v
    })
}

/// Intrinsic sectional curvatures `K(e_i, e_j)` of the induced metric in the
/// frame `{e_i}`, compared with the Gauss-equation prediction
/// `c - (h_ii h_jj - h_ij^2)` for a de Sitter ambient of curvature `c`.
/// Returns the largest discrepancy.
pub fn gauss_equation_defect<T: Real>(chart: &ImmersionChart<T>, p: &[T]) -> Result<T> {
    let Ambient::DeSitter(r) = chart.ambient() else {
        return Err(GeomError::Unsupported("Gauss check implemented for de Sitter ambients".into()));
    };
    let curv = T::c(1.0 / (r * r));
    let jets = hypersurface_jets(chart, p, 4)?;
    let m = chart.m();
    let g2: Vec<Vec<Jet<T>>> = jets.gbar.iter().map(|r| r.iter().map(|j| j.truncate(2)).collect()).collect();
    let riem = riemann_from_metric(&g2)?;
    let frame = frame_from_tangents(&jets.metric, &jets.tangents)?;
    let h = frame.congruence(&Mat::from_fn(m, m, |a, b| jets.h[a][b].value()));
    let mut worst = T::zero();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            // K(e_i, e_j) = R(e_i, e_j, e_j, e_i)
            let mut k = T::zero();
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            k += frame[(i, a)]
                                * frame[(j, b)]
                                * frame[(j, c)]
                                * frame[(i, d)]
                                * riem[((a * m + b) * m + c) * m + d];
                        }
                    }
                }
            }
            let predicted = curv - (h[(i, i)] * h[(j, j)] - h[(i, j)] * h[(i, j)]);
            worst = worst.max((k - predicted).abs());
        }
    }
    Ok(worst)
}
