//! Small dense linear algebra: the handful of routines the invariant pipeline
//! needs on matrices of size at most `m + 3`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{GeomError, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| *v * s).collect() }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Sum of squared entries.
    pub fn norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }

    pub fn symmetric_part(&self) -> Self {
        let half = T::c(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum()).collect()
    }

    /// `self * other * self^T` for a square `other`.
    pub fn congruence(&self, other: &Mat<T>) -> Mat<T> {
        &(self * other) * &self.transpose()
    }

    /// Solves `self * x = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.rows;
        assert!(self.is_square() && rhs.len() == n);
        let mut a = self.clone();
        let mut b = rhs.to_vec();
        let scale = a.max_abs().max(T::min_positive_value());
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(piv, k)].abs() <= T::epsilon() * scale {
                return Err(GeomError::Singular(format!("pivot {k} vanishes")));
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                b.swap(k, piv);
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                if f == T::zero() {
                    continue;
                }
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
                let bk = b[k];
                b[i] -= f * bk;
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let s: T = (i + 1..n).map(|j| a[(i, j)] * x[j]).sum();
            x[i] = (b[i] - s) / a[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat<T>> {
        let n = self.rows;
        let mut inv = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Lower-triangular `L` with `self = L L^T`.
    pub fn cholesky(&self) -> Result<Mat<T>> {
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(GeomError::Singular(format!("not positive definite at column {j}")));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(l)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    /// Sorted descending.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Mat<T>,
}

/// Householder tridiagonalization followed by implicit QL iterations.
///
/// Only the lower triangle of `a` is read.
pub fn sym_eigen<T: Real>(a: &Mat<T>) -> Result<SymEigen<T>> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let mut z = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| z[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigenvalues<T: Real>(a: &Mat<T>) -> Result<Vec<T>> {
    sym_eigen(a).map(|e| e.values)
}

// Householder reduction (tred2). On exit `z` holds the accumulated orthogonal
// transform, `d` the diagonal, `e[1..]` the sub-diagonal.
fn tridiagonalize<T: Real>(z: &mut Mat<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| z[(i, k)].abs()).sum();
            if scale == T::zero() {
                e[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let f = z[(i, l)];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                let mut f = T::zero();
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = f * e[k] + g * z[(i, k)];
                        z[(j, k)] -= v;
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    let v = g * z[(k, i)];
                    z[(k, j)] -= v;
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = T::one();
        for j in 0..i {
            z[(j, i)] = T::zero();
            z[(i, j)] = T::zero();
        }
    }
}

// Implicit QL with Wilkinson shifts (tql2).
fn ql_implicit<T: Real>(d: &mut [T], e: &mut [T], z: &mut Mat<T>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(GeomError::Singular("QL iteration did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (T::c(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::c(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The Taylor series is summed on `A / 2^s` with `||A / 2^s||_1 <= 1/2` until
/// the next term drops below `tol` relative to the partial sum.
pub fn expm<T: Real>(a: &Mat<T>, tol: T) -> Mat<T> {
    assert!(a.is_square());
    let norm = one_norm(a);
    let mut s = 0u32;
    let half = T::c(0.5);
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm = scaled_norm * half;
        s += 1;
    }
    let scaled = a.scale(T::c(0.5).powi(s as i32));
    let mut result = expm_series(&scaled, tol, 64);
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Plain truncated Taylor summation of `exp(a)`.
pub fn expm_series<T: Real>(a: &Mat<T>, tol: T, max_terms: usize) -> Mat<T> {
    let n = a.rows();
    let mut sum = Mat::identity(n);
    let mut term = Mat::identity(n);
    for k in 1..=max_terms {
        term = (&term * a).scale(T::one() / T::from_usize_lossy(k));
        sum = &sum + &term;
        if term.max_abs() <= tol * sum.max_abs().max(T::one()) {
            break;
        }
    }
    sum
}

fn one_norm<T: Real>(a: &Mat<T>) -> T {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_sym(n: usize, seed: u64) -> Mat<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (5, 4), (7, 5)] {
            let a = sample_sym(n, seed);
            let eig = sym_eigen(&a).unwrap();
            let v = &eig.vectors;
            let recon = &(v * &Mat::diag(&eig.values)) * &v.transpose();
            assert!((&recon - &a).max_abs() < 1e-12, "n={n}");
            let ortho = &v.transpose() * v;
            assert!((&ortho - &Mat::identity(n)).max_abs() < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigen_handles_repeated_values() {
        let a = Mat::diag(&[2.0, -1.0, 2.0, 0.5]);
        let vals = sym_eigenvalues(&a).unwrap();
        assert_eq!(vals, vec![2.0, 2.0, 0.5, -1.0]);
    }

    #[test]
    fn solve_and_inverse() {
        let a = Mat::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, -1.0, 0.0], vec![3.0, 0.0, 4.0]]);
        let x = a.solve(&[1.0, 2.0, 3.0]).unwrap();
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0f64, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-14);
        }
        let inv = a.inverse().unwrap();
        assert!((&(&a * &inv) - &Mat::identity(3)).max_abs() < 1e-14);
        let singular = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(singular.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn cholesky_factor() {
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let l = a.cholesky().unwrap();
        assert!((&(&l * &l.transpose()) - &a).max_abs() < 1e-15);
        assert!(Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).cholesky().is_err());
    }

    #[test]
    fn expm_matches_series_and_zero() {
        let z = Mat::<f64>::zeros(4, 4);
        assert_eq!(expm(&z, 1e-13), Mat::identity(4));
        let a = sample_sym(4, 9).scale(1.5);
        let fast = expm(&a, 1e-13);
        let slow = expm_series(&a, 1e-17, 200);
        assert!((&fast - &slow).max_abs() < 1e-10 * slow.max_abs());
        // exp(A) exp(-A) = I
        let inv = expm(&a.scale(-1.0), 1e-13);
        assert!((&(&fast * &inv) - &Mat::identity(4)).max_abs() < 1e-11);
    }
}
