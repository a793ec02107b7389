//! Eigenstructure of sampled invariant fields and the branch predicates of
//! the parallel para-Blaschke classification.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::catalog::{Branch, Family};
use crate::error::{GeomError, Result};
use crate::linalg::{sym_eigen, Mat};

/// Decision thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// Relative eigenvalue gap that separates clusters.
    pub cluster: f64,
    /// Max covariant-derivative component for a "parallel" verdict.
    pub parallel: f64,
    /// Max `|Phi|` for a "vanishing" verdict.
    pub phi: f64,
    /// Tolerance on `d1 + d2 + lambda^2` and on `b + lambda`.
    pub dichotomy: f64,
    /// Below this, a block curvature counts as zero.
    pub sign: f64,
    /// Max spread of a cluster over the grid for "constant".
    pub constancy: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { cluster: 1e-3, parallel: 1e-5, phi: 1e-7, dichotomy: 1e-6, sign: 1e-6, constancy: 1e-6 }
    }
}

/// Clustered spectrum of a symmetric field sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenStructure {
    pub t: usize,
    /// Cluster values (grid means), descending.
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Largest spread of one cluster over all grid points.
    pub deviation: f64,
}

/// Eigenvalues of one symmetric matrix grouped into clusters: returns
/// `(cluster means, multiplicities, spreads)`.
fn clusters(values: &[f64], threshold: f64) -> Vec<(Vec<f64>, usize)> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let mut out: Vec<(Vec<f64>, usize)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 && (values[i - 1] - v) <= threshold * scale {
            out.last_mut().unwrap().0.push(*v);
        } else {
            out.push((vec![*v], i));
        }
    }
    out
}

fn check_symmetric(f: &Mat<f64>) -> Result<()> {
    let asym = f.asymmetry();
    if asym > 1e-8 {
        return Err(GeomError::NotSymmetric(asym));
    }
    Ok(())
}

/// Clusters the descending eigenvalues at every point and checks that the
/// multiplicity pattern is the same everywhere.
pub fn eigen_structure(field: &[Mat<f64>], threshold: f64) -> Result<EigenStructure> {
    if field.is_empty() {
        return Err(GeomError::Parameter("empty field".into()));
    }
    let mut pattern: Option<Vec<usize>> = None;
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    let mut sum: Vec<f64> = Vec::new();
    for (idx, f) in field.iter().enumerate() {
        check_symmetric(f)?;
        let ev = sym_eigen(&f.symmetric_part())?.values;
        let cl = clusters(&ev, threshold);
        let mult: Vec<usize> = cl.iter().map(|(v, _)| v.len()).collect();
        match &pattern {
            None => {
                lo = cl.iter().map(|(v, _)| v.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
                hi = cl.iter().map(|(v, _)| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
                sum = cl.iter().map(|(v, _)| v.iter().sum::<f64>() / v.len() as f64).collect();
                pattern = Some(mult);
            }
            Some(p) if *p != mult => {
                return Err(GeomError::NonConstantMultiplicity(format!(
                    "multiplicities {p:?} at the first point, {mult:?} at point {idx}"
                )))
            }
            Some(_) => {
                for (c, (v, _)) in cl.iter().enumerate() {
                    for x in v {
                        lo[c] = lo[c].min(*x);
                        hi[c] = hi[c].max(*x);
                    }
                    sum[c] += v.iter().sum::<f64>() / v.len() as f64;
                }
            }
        }
    }
    let mult = pattern.unwrap();
    let n = field.len() as f64;
    Ok(EigenStructure {
        t: mult.len(),
        values: sum.iter().map(|s| s / n).collect(),
        multiplicities: mult,
        deviation: lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max),
    })
}

/// Eigenvector blocks of `d` by cluster: one list of column vectors per cluster.
fn cluster_frames(d: &Mat<f64>, threshold: f64) -> Result<Vec<Vec<Vec<f64>>>> {
    let eig = sym_eigen(&d.symmetric_part())?;
    let cl = clusters(&eig.values, threshold);
    Ok(cl
        .iter()
        .map(|(v, start)| (*start..*start + v.len()).map(|j| eig.vectors.column(j)).collect())
        .collect())
}

fn bilinear(b: &Mat<f64>, u: &[f64], v: &[f64]) -> f64 {
    let bv = b.mul_vec(v);
    u.iter().zip(&bv).map(|(x, y)| x * y).sum()
}

/// Largest entry of `B` coupling two different eigenspaces of `D`.
pub fn simultaneous_diag_check(d_field: &[Mat<f64>], b_field: &[Mat<f64>], threshold: f64) -> Result<f64> {
    if d_field.len() != b_field.len() {
        return Err(GeomError::DimensionMismatch { expected: d_field.len(), got: b_field.len() });
    }
    let mut worst = 0.0f64;
    for (d, b) in d_field.iter().zip(b_field) {
        let frames = cluster_frames(d, threshold)?;
        for (i, fi) in frames.iter().enumerate() {
            for fj in frames.iter().skip(i + 1) {
                for u in fi {
                    for v in fj {
                        worst = worst.max(bilinear(b, u, v).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `B` restricted to each `D` cluster: eigenvalues per block at one point.
fn block_spectra(d: &Mat<f64>, b: &Mat<f64>, threshold: f64) -> Result<Vec<Vec<f64>>> {
    let frames = cluster_frames(d, threshold)?;
    frames
        .iter()
        .map(|f| {
            let k = f.len();
            let sub = Mat::from_fn(k, k, |i, j| bilinear(b, &f[i], &f[j]));
            Ok(sym_eigen(&sub.symmetric_part())?.values)
        })
        .collect()
}

/// Two-eigenvalue dichotomy for parallel `D^lambda`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub applicable: bool,
    pub reason: Option<String>,
    /// `max |d1 + d2 + lambda^2|` over the grid.
    pub sum_defect: f64,
    /// Per `D` block, `max |b + lambda|` over the block's `B` eigenvalues and the grid.
    pub block_defects: Vec<f64>,
    /// Block whose `B` eigenvalues all equal `-lambda`, if any.
    pub minus_lambda_block: Option<usize>,
    /// `2d + lambda^2` for that block.
    pub curvature_sign_value: Option<f64>,
    pub holds: bool,
}

impl DichotomyReport {
    fn skipped(reason: String) -> Self {
        Self {
            applicable: false,
            reason: Some(reason),
            sum_defect: f64::NAN,
            block_defects: vec![],
            minus_lambda_block: None,
            curvature_sign_value: None,
            holds: false,
        }
    }
}

pub fn dichotomy_check(
    d_field: &[Mat<f64>],
    b_field: &[Mat<f64>],
    lambda: f64,
    th: &Thresholds,
) -> Result<DichotomyReport> {
    let ds = match eigen_structure(d_field, th.cluster) {
        Ok(s) => s,
        Err(e) => return Ok(DichotomyReport::skipped(e.to_string())),
    };
    if ds.t != 2 {
        return Ok(DichotomyReport::skipped(format!("D^lambda has t = {}, needs t = 2", ds.t)));
    }
    let mut sum_defect = 0.0f64;
    let mut block_defects = vec![0.0f64; 2];
    for (d, b) in d_field.iter().zip(b_field) {
        let ev = sym_eigen(&d.symmetric_part())?.values;
        sum_defect = sum_defect.max((ev[0] + ev[ev.len() - 1] + lambda * lambda).abs());
        for (blk, vals) in block_spectra(d, b, th.cluster)?.iter().enumerate() {
            for v in vals {
                block_defects[blk] = block_defects[blk].max((v + lambda).abs());
            }
        }
    }
    let minus_lambda_block = (0..2)
        .filter(|&i| block_defects[i] <= th.dichotomy)
        .min_by(|&i, &j| block_defects[i].partial_cmp(&block_defects[j]).unwrap());
    let curvature_sign_value = minus_lambda_block.map(|i| 2.0 * ds.values[i] + lambda * lambda);
    let holds = sum_defect <= th.dichotomy && minus_lambda_block.is_some();
    Ok(DichotomyReport {
        applicable: true,
        reason: None,
        sum_defect,
        block_defects,
        minus_lambda_block,
        curvature_sign_value,
        holds,
    })
}

/// Everything the classifier looks at.
#[derive(Clone, Debug)]
pub struct ClassifierInput {
    pub lambda: f64,
    /// `B` per grid point.
    pub b: Vec<Mat<f64>>,
    /// Blaschke tensor per grid point.
    pub a: Vec<Mat<f64>>,
    pub phi_max: f64,
    /// `max |B_ijk|` over the grid.
    pub grad_b_max: f64,
    /// `max |D^lambda_ijk|` over the grid.
    pub grad_d_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    pub phi_zero: bool,
    pub b_parallel: bool,
    pub d_parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Predicates {
    pub simultaneous_diagonalization: f64,
    pub isoparametric_b: bool,
    pub dichotomy: DichotomyReport,
    /// `2a - b^2` per `B` cluster (sectional curvature of the factor for
    /// parallel `B`), when `B` has constant multiplicities.
    pub block_curvatures: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationVerdict {
    pub lambda: f64,
    pub flags: Flags,
    /// Distinct eigenvalues of `D^lambda`.
    pub t: Option<usize>,
    pub d_structure: Option<EigenStructure>,
    pub b_structure: Option<EigenStructure>,
    pub predicates: Predicates,
    pub branch: String,
    /// Every branch whose necessary conditions hold; `branch` is one of them.
    pub consistent_branches: Vec<String>,
    pub reason: String,
}

impl ClassificationVerdict {
    /// Whether `label` is among the consistent branches.
    pub fn is_consistent_with(&self, label: Branch) -> bool {
        self.consistent_branches.iter().any(|b| b == label.name())
    }
}

fn sign(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

/// `2a - b^2` per `B` cluster, averaged over the grid.
fn block_curvatures(b_field: &[Mat<f64>], a_field: &[Mat<f64>], bs: &EigenStructure, threshold: f64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; bs.t];
    for (b, a) in b_field.iter().zip(a_field) {
        let frames = cluster_frames(b, threshold)?;
        if frames.len() != bs.t {
            return Err(GeomError::NonConstantMultiplicity("B cluster count changed".into()));
        }
        for (s, f) in frames.iter().enumerate() {
            let k = f.len() as f64;
            let amean: f64 = f.iter().map(|v| bilinear(a, v, v)).sum::<f64>() / k;
            let bmean: f64 = f.iter().map(|v| bilinear(b, v, v)).sum::<f64>() / k;
            acc[s] += 2.0 * amean - bmean * bmean;
        }
    }
    let n = b_field.len() as f64;
    Ok(acc.into_iter().map(|v| v / n).collect())
}

/// Product branch selected by the signs of the two block curvatures.
fn product_branch(c: &[f64], tol: f64) -> Option<Family> {
    let mut s: Vec<i8> = c.iter().map(|v| sign(*v, tol)).collect();
    s.sort();
    match s.as_slice() {
        [-1, 1] => Some(Family::ProductDeSitter),
        [-1, 0] => Some(Family::ProductFlat),
        [-1, -1] => Some(Family::ProductAntiDeSitter),
        _ => None,
    }
}

/// Applies the decision tree and collects every consistent branch.
pub fn classify(input: &ClassifierInput, th: &Thresholds) -> ClassificationVerdict {
    let flags = Flags {
        phi_zero: input.phi_max <= th.phi,
        b_parallel: input.grad_b_max <= th.parallel,
        d_parallel: input.grad_d_max <= th.parallel,
    };
    let d_field: Vec<Mat<f64>> = input
        .a
        .iter()
        .zip(&input.b)
        .map(|(a, b)| a + &b.scale(input.lambda))
        .collect();
    let d_structure = eigen_structure(&d_field, th.cluster).ok();
    let b_structure = eigen_structure(&input.b, th.cluster).ok();
    let simultaneous = simultaneous_diag_check(&d_field, &input.b, th.cluster).unwrap_or(f64::NAN);
    let dichotomy = dichotomy_check(&d_field, &input.b, input.lambda, th)
        .unwrap_or_else(|e| DichotomyReport::skipped(e.to_string()));
    let curv = b_structure
        .as_ref()
        .and_then(|bs| block_curvatures(&input.b, &input.a, bs, th.cluster).ok())
        .unwrap_or_default();
    let isoparametric_b = b_structure.as_ref().is_some_and(|s| s.deviation <= th.constancy);
    let t = d_structure.as_ref().map(|s| s.t);

    let mut consistent: BTreeSet<Branch> = BTreeSet::new();
    let cone_branch = if dichotomy.holds {
        dichotomy.curvature_sign_value.and_then(|v| match sign(v, th.sign) {
            -1 => Some(Branch::Family(Family::Example32)),
            1 => Some(Branch::Family(Family::Example33)),
            _ => None,
        })
    } else {
        None
    };

    let (branch, reason) = if !flags.phi_zero {
        (Branch::Inconsistent, format!("conformal form does not vanish: max |Phi| = {:.3e}", input.phi_max))
    } else if !flags.d_parallel {
        (Branch::Inconsistent, format!("D^lambda is not parallel: max |D_ijk| = {:.3e}", input.grad_d_max))
    } else if flags.b_parallel {
        match b_structure.as_ref().map(|s| s.t) {
            Some(2) => match product_branch(&curv, th.sign) {
                Some(f) => (Branch::Family(f), format!("parallel B, two B eigenvalues, block curvatures {curv:?}")),
                None => (Branch::Inconsistent, format!("parallel B with block curvatures {curv:?} fits no product")),
            },
            Some(3) => (Branch::Family(Family::WarpedProduct), "parallel B with three B eigenvalues".to_string()),
            Some(n) => (Branch::Inconsistent, format!("parallel B with {n} distinct eigenvalues")),
            None => (Branch::Inconsistent, "parallel B with non-constant multiplicities".to_string()),
        }
    } else if t == Some(2) && cone_branch.is_some() {
        (cone_branch.unwrap(), "t = 2 with d1 + d2 = -lambda^2 and a block with b = -lambda".to_string())
    } else if t == Some(1) {
        (Branch::ConstantMeanCurvature, "D^lambda proportional to g".to_string())
    } else {
        (Branch::Inconsistent, format!("parallel D^lambda with t = {t:?} and no matching case"))
    };
    consistent.insert(branch);
    if branch != Branch::Inconsistent {
        if let Some(c) = cone_branch {
            consistent.insert(c);
        }
        if t == Some(1) {
            consistent.insert(Branch::ConstantMeanCurvature);
        }
    }
    ClassificationVerdict {
        lambda: input.lambda,
        flags,
        t,
        d_structure,
        b_structure,
        predicates: Predicates {
            simultaneous_diagonalization: simultaneous,
            isoparametric_b,
            dichotomy,
            block_curvatures: curv,
        },
        branch: branch.name().to_string(),
        consistent_branches: consistent.iter().map(|b| b.name().to_string()).collect(),
        reason,
    }
}
