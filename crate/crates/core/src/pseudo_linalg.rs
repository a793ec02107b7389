//! Indefinite-signature linear algebra on `R^dim_s`, with the `s` time-like
//! coordinates always in the leading slots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::linalg::{expm, Mat};
use crate::scalar::Real;

/// `<v, w>_s = -sum_{i<s} v_i w_i + sum_{i>=s} v_i w_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignatureMetric {
    dim: usize,
    s: usize,
}

impl SignatureMetric {
    pub fn new(dim: usize, s: usize) -> Result<Self> {
        if dim == 0 || s > dim {
            return Err(GeomError::Parameter(format!("invalid signature: dim {dim}, s {s}")));
        }
        Ok(Self { dim, s })
    }

    /// `R^{m+1}_1`-style metric with one time-like slot.
    pub fn lorentz(dim: usize) -> Self {
        Self { dim, s: 1 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timelike(&self) -> usize {
        self.s
    }

    /// Diagonal entry `G_ii`.
    #[inline]
    pub fn sign<T: Real>(&self, i: usize) -> T {
        if i < self.s {
            -T::one()
        } else {
            T::one()
        }
    }

    pub fn gram<T: Real>(&self) -> Mat<T> {
        Mat::from_fn(self.dim, self.dim, |i, j| if i == j { self.sign(i) } else { T::zero() })
    }

    /// Inner product on raw coordinate slices; panics on length mismatch.
    #[inline]
    pub fn dot<T: Real>(&self, v: &[T], w: &[T]) -> T {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(w.len(), self.dim);
        let mut acc = T::zero();
        for i in 0..self.s {
            acc -= v[i] * w[i];
        }
        for i in self.s..self.dim {
            acc += v[i] * w[i];
        }
        acc
    }
}

/// A point or direction of `R^dim_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzVector<T> {
    pub coords: Vec<T>,
    pub metric: SignatureMetric,
}

impl<T: Real> LorentzVector<T> {
    pub fn new(metric: SignatureMetric, coords: Vec<T>) -> Result<Self> {
        if coords.len() != metric.dim() {
            return Err(GeomError::DimensionMismatch { expected: metric.dim(), got: coords.len() });
        }
        Ok(Self { coords, metric })
    }

    pub fn zeros(metric: SignatureMetric) -> Self {
        Self { coords: vec![T::zero(); metric.dim()], metric }
    }

    pub fn axis(metric: SignatureMetric, i: usize) -> Self {
        let mut v = Self::zeros(metric);
        v.coords[i] = T::one();
        v
    }

    pub fn norm_sq(&self) -> T {
        self.metric.dot(&self.coords, &self.coords)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { coords: self.coords.iter().map(|c| *c * s).collect(), metric: self.metric }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        Self {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| *a + s * *b).collect(),
            metric: self.metric,
        }
    }

    pub fn max_abs(&self) -> T {
        self.coords.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

/// `<v, w>` in the signature metric.
pub fn inner<T: Real>(metric: &SignatureMetric, v: &LorentzVector<T>, w: &LorentzVector<T>) -> Result<T> {
    for x in [v, w] {
        if x.coords.len() != metric.dim() {
            return Err(GeomError::DimensionMismatch { expected: metric.dim(), got: x.coords.len() });
        }
    }
    Ok(metric.dot(&v.coords, &w.coords))
}

/// Gram-Schmidt with respect to `<.,.>_s`, for bases whose successive
/// projections are all space-like.
pub fn orthonormalize_spacelike<T: Real>(
    metric: &SignatureMetric,
    basis: &[LorentzVector<T>],
) -> Result<Vec<LorentzVector<T>>> {
    orthonormalize_with_coeffs(metric, basis).map(|(v, _)| v)
}

/// As [`orthonormalize_spacelike`], also returning the lower-triangular
/// `C` with `out_i = sum_j C_ij basis_j`.
pub fn orthonormalize_with_coeffs<T: Real>(
    metric: &SignatureMetric,
    basis: &[LorentzVector<T>],
) -> Result<(Vec<LorentzVector<T>>, Mat<T>)> {
    let k = basis.len();
    let mut out: Vec<LorentzVector<T>> = Vec::with_capacity(k);
    let mut coeffs = Mat::zeros(k, k);
    for (i, b) in basis.iter().enumerate() {
        if b.coords.len() != metric.dim() {
            return Err(GeomError::DimensionMismatch { expected: metric.dim(), got: b.coords.len() });
        }
        let scale = b.max_abs().max(T::min_positive_value());
        let mut v = b.clone();
        let mut row = vec![T::zero(); k];
        row[i] = T::one();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (j, e) in out.iter().enumerate() {
                let p = metric.dot(&v.coords, &e.coords);
                v = v.axpy(-p, e);
                for c in 0..k {
                    row[c] -= p * coeffs[(j, c)];
                }
            }
        }
        let nsq = v.norm_sq();
        if !(nsq > T::c(1e-24) * scale * scale) {
            return Err(GeomError::FrameDegeneracy(format!(
                "vector {i} has non-space-like projection (<v,v> = {nsq:e})"
            )));
        }
        let inv = T::one() / nsq.sqrt();
        for c in 0..k {
            coeffs[(i, c)] = row[c] * inv;
        }
        out.push(v.scaled(inv));
    }
    Ok((out, coeffs))
}

/// Unit time-like vector orthogonal to `dim - 1` constraint vectors.
///
/// The sign makes the component of largest magnitude positive.
pub fn timelike_normal<T: Real>(
    metric: &SignatureMetric,
    constraints: &[LorentzVector<T>],
) -> Result<LorentzVector<T>> {
    let n = metric.dim();
    if constraints.len() + 1 != n {
        return Err(GeomError::DimensionMismatch { expected: n - 1, got: constraints.len() });
    }
    let raw = complement_vector(metric, constraints)?;
    let nsq = raw.norm_sq();
    let scale = raw.max_abs();
    if !(nsq < -T::c(1e-20) * scale * scale) {
        return Err(GeomError::NoTimelikeNormal(format!("orthogonal complement has <n,n> = {nsq:e}")));
    }
    let mut unit = raw.scaled(T::one() / (-nsq).sqrt());
    let lead = unit
        .coords
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if unit.coords[lead] < T::zero() {
        unit = unit.scaled(-T::one());
    }
    Ok(unit)
}

/// Unnormalized generator of the orthogonal complement line of `constraints`.
pub(crate) fn complement_vector<T: Real>(
    metric: &SignatureMetric,
    constraints: &[LorentzVector<T>],
) -> Result<LorentzVector<T>> {
    let k = constraints.len();
    let gram = Mat::from_fn(k, k, |a, b| metric.dot(&constraints[a].coords, &constraints[b].coords));
    let mut best: Option<(T, LorentzVector<T>)> = None;
    for axis in 0..metric.dim() {
        let v = LorentzVector::axis(*metric, axis);
        let rhs: Vec<T> = constraints.iter().map(|c| metric.dot(&v.coords, &c.coords)).collect();
        let y = gram
            .solve(&rhs)
            .map_err(|_| GeomError::NoTimelikeNormal("constraint span is degenerate".into()))?;
        let mut w = v;
        for (ya, c) in y.iter().zip(constraints) {
            w = w.axpy(-*ya, c);
        }
        let size = w.max_abs();
        if best.as_ref().map_or(true, |(s, _)| size > *s) {
            best = Some((size, w));
        }
    }
    let (size, w) = best.expect("dim >= 1");
    if size <= T::c(1e-14) {
        return Err(GeomError::NoTimelikeNormal("constraints span the whole space".into()));
    }
    Ok(w)
}

/// An element of `O(p, q)` acting on `R^dim_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoOrthogonalMap<T> {
    matrix: Mat<T>,
    metric: SignatureMetric,
}

impl<T: Real> PseudoOrthogonalMap<T> {
    /// Checks `M^T G M = G` to `1e-12` relative to `max(1, |M|_max^2)`.
    pub fn new(matrix: Mat<T>, metric: SignatureMetric) -> Result<Self> {
        if matrix.rows() != metric.dim() || !matrix.is_square() {
            return Err(GeomError::DimensionMismatch { expected: metric.dim(), got: matrix.rows() });
        }
        let defect = Self::defect_of(&matrix, &metric);
        let size = matrix.max_abs().max(T::one());
        if !(defect <= T::c(1e-12) * size * size) {
            return Err(GeomError::NotPseudoOrthogonal(defect.to_f64_lossy()));
        }
        Ok(Self { matrix, metric })
    }

    pub fn identity(metric: SignatureMetric) -> Self {
        Self { matrix: Mat::identity(metric.dim()), metric }
    }

    /// Exchange of the first two coordinates; an isometry whenever both are
    /// time-like or both space-like.
    pub fn block_swap(metric: SignatureMetric) -> Result<Self> {
        let mut m = Mat::identity(metric.dim());
        m[(0, 0)] = T::zero();
        m[(1, 1)] = T::zero();
        m[(0, 1)] = T::one();
        m[(1, 0)] = T::one();
        Self::new(m, metric)
    }

    /// `exp(generator)` for `generator^T G + G generator = 0`.
    pub fn exp_of_generator(generator: &Mat<T>, metric: SignatureMetric) -> Result<Self> {
        Self::new(expm(generator, T::c(1e-13)), metric)
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn metric(&self) -> SignatureMetric {
        self.metric
    }

    /// `max |M^T G M - G|`.
    pub fn defect(&self) -> T {
        Self::defect_of(&self.matrix, &self.metric)
    }

    fn defect_of(m: &Mat<T>, metric: &SignatureMetric) -> T {
        let g = metric.gram();
        (&(&(&m.transpose() * &g) * m) - &g).max_abs()
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        self.matrix.mul_vec(v)
    }

    pub fn apply_vector(&self, v: &LorentzVector<T>) -> LorentzVector<T> {
        LorentzVector { coords: self.apply(&v.coords), metric: self.metric }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { matrix: &self.matrix * &other.matrix, metric: self.metric }
    }

    /// `G M^T G`.
    pub fn inverse(&self) -> Self {
        let g = self.metric.gram();
        Self { matrix: &(&g * &self.matrix.transpose()) * &g, metric: self.metric }
    }
}

/// Random generator `M = G K` with `K` antisymmetric, entries uniform in
/// `[-bound, bound]`, so that `M^T G + G M = 0`.
pub fn random_generator<T: Real>(metric: &SignatureMetric, seed: u64, bound: f64) -> Mat<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = metric.dim();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = T::c(rng.gen_range(-bound..=bound));
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    &metric.gram() * &k
}

/// `exp(M)` for a seeded random generator with entries bounded by 1.
pub fn random_pseudo_orthogonal<T: Real>(metric: &SignatureMetric, seed: u64) -> Result<PseudoOrthogonalMap<T>> {
    PseudoOrthogonalMap::exp_of_generator(&random_generator(metric, seed, 1.0), *metric)
}
