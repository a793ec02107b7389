//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `d^a f / a!` of a scalar function
//! of `m` variables at one base point, for every multi-index `|a| <= order`.
//! Coefficients live densely in graded-lexicographic order, so the layout of
//! a lower-order jet is a prefix of the higher-order one.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{GeomError, Result};
use crate::scalar::Real;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;
/// Highest supported number of variables.
pub const MAX_VARS: usize = 8;

/// Multi-index tables shared by all jets in `num_vars` variables.
#[derive(Debug)]
pub struct JetLayout {
    num_vars: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `count[k]` = number of multi-indices of degree `<= k`.
    count: Vec<usize>,
    /// Products `(i, j, i+j)` sorted by total degree; `mul_upto[k]` is the
    /// number of entries with degree `<= k`.
    mul: Vec<(u16, u16, u16)>,
    mul_upto: Vec<usize>,
    /// For each variable: `(target, source, factor)` with target degree
    /// `<= MAX_ORDER - 1`, sorted by target degree.
    deriv: Vec<Vec<(u16, u16, u8)>>,
}

impl JetLayout {
    fn build(num_vars: usize) -> Self {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut count = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut level = Vec::new();
            let mut cur = vec![0u8; num_vars];
            gen_degree(num_vars, deg, 0, &mut cur, &mut level);
            // graded lexicographic: larger leading exponent first
            level.sort_by(|a, b| b.cmp(a));
            exps.extend(level);
            count.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> = exps.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let degree = |e: &Vec<u8>| e.iter().map(|&v| v as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if degree(a) + degree(b) <= MAX_ORDER {
                    let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    mul.push((i as u16, j as u16, index[&sum] as u16));
                }
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree(&exps[k as usize]));
        let mul_upto = (0..=MAX_ORDER)
            .map(|k| mul.iter().filter(|&&(_, _, t)| degree(&exps[t as usize]) <= k).count())
            .collect();

        let mut deriv = Vec::with_capacity(num_vars);
        for v in 0..num_vars {
            let mut table = Vec::new();
            for (t, e) in exps.iter().enumerate() {
                if degree(e) >= MAX_ORDER {
                    continue;
                }
                let mut src = e.clone();
                src[v] += 1;
                table.push((t as u16, index[&src] as u16, src[v]));
            }
            deriv.push(table);
        }
        Self { num_vars, exps, index, count, mul, mul_upto, deriv }
    }

    /// Shared layout for `num_vars` variables.
    pub fn get(num_vars: usize) -> Arc<JetLayout> {
        assert!((1..=MAX_VARS).contains(&num_vars), "jets support 1..={MAX_VARS} variables");
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<JetLayout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet layout cache poisoned");
        guard.entry(num_vars).or_insert_with(|| Arc::new(JetLayout::build(num_vars))).clone()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Coefficient count for a jet of the given order: `C(m + order, order)`.
    pub fn len(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn multi_index(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn index_of(&self, multi: &[u8]) -> Option<usize> {
        self.index.get(multi).copied()
    }
}

fn gen_degree(n: usize, remaining: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == n {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in 0..=remaining {
        cur[pos] = k as u8;
        gen_degree(n, remaining - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet<T> {
    layout: Arc<JetLayout>,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.layout.num_vars)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<T: Real> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layout.num_vars == other.layout.num_vars && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl<T: Real> Jet<T> {
    pub fn constant(num_vars: usize, order: usize, value: T) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = JetLayout::get(num_vars);
        let mut coeffs = vec![T::zero(); layout.len(order)];
        coeffs[0] = value;
        Self { layout, order, coeffs }
    }

    /// The coordinate function `u_var` expanded at `u_var = value`.
    pub fn variable(num_vars: usize, order: usize, var: usize, value: T) -> Self {
        assert!(var < num_vars);
        let mut jet = Self::constant(num_vars, order, value);
        if order >= 1 {
            // degree-1 block is ordered e_0, e_1, ... (graded lex descending)
            jet.coeffs[1 + var] = T::one();
        }
        jet
    }

    /// All `num_vars` coordinate jets at `point`.
    pub fn variables(point: &[T], order: usize) -> Vec<Self> {
        (0..point.len()).map(|i| Self::variable(point.len(), order, i, point[i])).collect()
    }

    pub fn from_coeffs(num_vars: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        let layout = JetLayout::get(num_vars);
        if coeffs.len() != layout.len(order) {
            return Err(GeomError::DimensionMismatch { expected: layout.len(order), got: coeffs.len() });
        }
        Ok(Self { layout, order, coeffs })
    }

    pub fn constant_like(&self, value: T) -> Self {
        let mut coeffs = vec![T::zero(); self.coeffs.len()];
        coeffs[0] = value;
        Self { layout: self.layout.clone(), order: self.order, coeffs }
    }

    pub fn num_vars(&self) -> usize {
        self.layout.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Value at the base point.
    #[inline]
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// Taylor coefficient `d^a f / a!`, zero beyond the truncation order.
    pub fn coeff(&self, multi: &[u8]) -> T {
        match self.layout.index_of(multi) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => T::zero(),
        }
    }

    /// Partial derivative `d^a f` at the base point.
    pub fn partial(&self, multi: &[u8]) -> T {
        let fact: u64 = multi.iter().map(|&k| (1..=k as u64).product::<u64>()).product();
        self.coeff(multi) * T::from_u64(fact).unwrap()
    }

    /// First partials at the base point.
    pub fn gradient(&self) -> Vec<T> {
        let m = self.num_vars();
        if self.order == 0 {
            return vec![T::zero(); m];
        }
        self.coeffs[1..=m].to_vec()
    }

    /// Second partials at the base point.
    pub fn hessian(&self) -> Vec<Vec<T>> {
        let m = self.num_vars();
        let mut out = vec![vec![T::zero(); m]; m];
        for a in 0..m {
            for b in 0..m {
                let mut multi = vec![0u8; m];
                multi[a] += 1;
                multi[b] += 1;
                out[a][b] = self.partial(&multi);
            }
        }
        out
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self { layout: self.layout.clone(), order, coeffs: self.coeffs[..self.layout.len(order)].to_vec() }
    }

    /// `d f / d u_var` as a jet of one lower order.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let len = self.layout.len(order);
        let mut coeffs = vec![T::zero(); len];
        for &(t, s, f) in &self.layout.deriv[var] {
            let t = t as usize;
            if t >= len {
                break;
            }
            coeffs[t] = self.coeffs[s as usize] * T::from_u8(f).unwrap();
        }
        Self { layout: self.layout.clone(), order, coeffs }
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.layout.num_vars, other.layout.num_vars, "jets over different variable counts");
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let len = self.layout.len(order);
        let mut coeffs = vec![T::zero(); len];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &self.layout.mul[..self.layout.mul_upto[order]] {
            let (ai, bj) = (a[i as usize], b[j as usize]);
            if ai != T::zero() && bj != T::zero() {
                coeffs[k as usize] += ai * bj;
            }
        }
        Self { layout: self.layout.clone(), order, coeffs }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let len = self.layout.len(order);
        let coeffs = (0..len).map(|i| f(self.coeffs[i], other.coeffs[i])).collect();
        Self { layout: self.layout.clone(), order, coeffs }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { layout: self.layout.clone(), order: self.order, coeffs: self.coeffs.iter().map(|c| *c * s).collect() }
    }

    pub fn square(&self) -> Self {
        self.mul_ref(self)
    }

    /// `sum_k a_k (f - f(0))^k` with the univariate coefficients `a_k`.
    fn compose(&self, taylor: &[T]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = T::zero();
        let n = self.order;
        let mut acc = self.constant_like(taylor[n]);
        for k in (0..n).rev() {
            acc = acc.mul_ref(&delta);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    fn factorial(k: usize) -> T {
        T::from_usize_lossy((1..=k).product::<usize>().max(1))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let t: Vec<T> = (0..=self.order).map(|k| e / Self::factorial(k)).collect();
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Self> {
        let c = self.value();
        if !(c > T::zero()) {
            return Err(GeomError::JetSingularity(format!("log of non-positive value {c}")));
        }
        let mut t = vec![c.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { T::one() } else { -T::one() };
            t.push(sign / (T::from_usize_lossy(k) * c.powi(k as i32)));
        }
        Ok(self.compose(&t))
    }

    pub fn recip(&self) -> Result<Self> {
        let c = self.value();
        if c == T::zero() || !c.is_finite() {
            return Err(GeomError::JetSingularity(format!("division by jet with constant term {c}")));
        }
        let t: Vec<T> = (0..=self.order)
            .map(|k| {
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                sign / c.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&t))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul_ref(&other.recip()?))
    }

    /// `f^p` for real `p`; requires a positive constant term.
    pub fn powf(&self, p: T) -> Result<Self> {
        let c = self.value();
        if !(c > T::zero()) {
            return Err(GeomError::JetSingularity(format!("real power of non-positive value {c}")));
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut binom = T::one();
        for k in 0..=self.order {
            if k > 0 {
                binom = binom * (p - T::from_usize_lossy(k - 1)) / T::from_usize_lossy(k);
            }
            t.push(binom * c.powf(p - T::from_usize_lossy(k)));
        }
        Ok(self.compose(&t))
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = self.constant_like(T::one());
        for _ in 0..n {
            acc = acc.mul_ref(self);
        }
        Ok(acc)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(T::c(0.5))
    }

    fn trig(&self, phase: usize) -> Self {
        let c = self.value();
        let t: Vec<T> = (0..=self.order)
            .map(|k| {
                let v = match (k + phase) % 4 {
                    0 => c.sin(),
                    1 => c.cos(),
                    2 => -c.sin(),
                    _ => -c.cos(),
                };
                v / Self::factorial(k)
            })
            .collect();
        self.compose(&t)
    }

    pub fn sin(&self) -> Self {
        self.trig(0)
    }

    pub fn cos(&self) -> Self {
        self.trig(1)
    }

    fn hyperbolic(&self, start_with_sinh: bool) -> Self {
        let c = self.value();
        let t: Vec<T> = (0..=self.order)
            .map(|k| {
                let v = if (k % 2 == 0) == start_with_sinh { c.sinh() } else { c.cosh() };
                v / Self::factorial(k)
            })
            .collect();
        self.compose(&t)
    }

    pub fn sinh(&self) -> Self {
        self.hyperbolic(true)
    }

    pub fn cosh(&self) -> Self {
        self.hyperbolic(false)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<T: Real> $trait<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Real> $trait<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Real> $trait<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
        impl<T: Real> $trait<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
binop!(Mul, mul, |a, b| a.mul_ref(b));

impl<T: Real> Add<T> for Jet<T> {
    type Output = Jet<T>;
    fn add(mut self, rhs: T) -> Jet<T> {
        self.coeffs[0] += rhs;
        self
    }
}

impl<T: Real> Add<T> for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: T) -> Jet<T> {
        self.clone() + rhs
    }
}

impl<T: Real> Sub<T> for Jet<T> {
    type Output = Jet<T>;
    fn sub(mut self, rhs: T) -> Jet<T> {
        self.coeffs[0] -= rhs;
        self
    }
}

impl<T: Real> Sub<T> for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: T) -> Jet<T> {
        self.clone() - rhs
    }
}

impl<T: Real> Mul<T> for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: T) -> Jet<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Mul<T> for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: T) -> Jet<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Div<T> for Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: T) -> Jet<T> {
        self.scale(T::one() / rhs)
    }
}

impl<T: Real> Div<T> for &Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: T) -> Jet<T> {
        self.scale(T::one() / rhs)
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> AddAssign<&Jet<T>> for Jet<T> {
    fn add_assign(&mut self, rhs: &Jet<T>) {
        *self = &*self + rhs;
    }
}

impl<T: Real> SubAssign<&Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, rhs: &Jet<T>) {
        *self = &*self - rhs;
    }
}

/// Solves the jet-valued linear system `a x = b` by Gaussian elimination,
/// pivoting on the magnitude of the constant terms.
pub fn jet_solve<T: Real>(a: &[Vec<Jet<T>>], b: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
    let n = b.len();
    let mut a: Vec<Vec<Jet<T>>> = a.to_vec();
    let mut b: Vec<Jet<T>> = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].value().abs().partial_cmp(&a[j][k].value().abs()).unwrap())
            .unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        let inv = a[k][k]
            .recip()
            .map_err(|_| GeomError::Singular(format!("jet system singular at pivot {k}")))?;
        for i in k + 1..n {
            let f = &a[i][k] * &inv;
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] -= &t;
            }
            let t = &f * &b[k];
            b[i] -= &t;
        }
    }
    let mut x: Vec<Jet<T>> = b.clone();
    for i in (0..n).rev() {
        let mut s = b[i].clone();
        for j in i + 1..n {
            let t = &a[i][j] * &x[j];
            s -= &t;
        }
        x[i] = s.try_div(&a[i][i])?;
    }
    Ok(x)
}

/// Inverse of a jet-valued square matrix.
pub fn jet_inverse<T: Real>(a: &[Vec<Jet<T>>]) -> Result<Vec<Vec<Jet<T>>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Jet<T>> = (0..n)
            .map(|i| a[0][0].constant_like(if i == j { T::one() } else { T::zero() }))
            .collect();
        cols.push(jet_solve(a, &e)?);
    }
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}
