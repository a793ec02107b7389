//! Difference oracle for the jet engine, shared by the unit-level jet tests
//! and the acceptance run.
#![allow(dead_code)]

use lorentz_conformal::jets::{Jet, JetLayout, MAX_ORDER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random compositions of the jet primitives, evaluated two ways: in jet
/// arithmetic and as plain floats for the difference oracle.
#[derive(Clone, Debug)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sinh(Box<Expr>),
    Cosh(Box<Expr>),
    // arguments shifted to 1 + e^2 so the primitive stays regular
    Sqrt(Box<Expr>),
    Ln(Box<Expr>),
    Recip(Box<Expr>),
    Pow(Box<Expr>, f64),
}

pub fn random_expr(rng: &mut ChaCha8Rng, vars: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.75) { Expr::Var(rng.gen_range(0..vars)) } else { Expr::Const(rng.gen_range(-1.0..1.0)) };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, vars, depth - 1));
    match rng.gen_range(0..11) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Mul(sub(rng), sub(rng)),
        2 => Expr::Sin(sub(rng)),
        3 => Expr::Cos(sub(rng)),
        4 => Expr::Exp(sub(rng)),
        5 => Expr::Sinh(sub(rng)),
        6 => Expr::Cosh(sub(rng)),
        7 => Expr::Sqrt(sub(rng)),
        8 => Expr::Ln(sub(rng)),
        9 => Expr::Recip(sub(rng)),
        _ => Expr::Pow(sub(rng), rng.gen_range(-1.5..2.5)),
    }
}

pub fn eval_f64(e: &Expr, x: &[f64]) -> f64 {
    use Expr::*;
    let pos = |a: &Expr| 1.0 + eval_f64(a, x).powi(2);
    match e {
        Var(i) => x[*i],
        Const(c) => *c,
        Add(a, b) => eval_f64(a, x) + eval_f64(b, x),
        Mul(a, b) => eval_f64(a, x) * eval_f64(b, x),
        Sin(a) => eval_f64(a, x).sin(),
        Cos(a) => eval_f64(a, x).cos(),
        Exp(a) => (0.5 * eval_f64(a, x)).exp(),
        Sinh(a) => eval_f64(a, x).sinh(),
        Cosh(a) => eval_f64(a, x).cosh(),
        Sqrt(a) => pos(a).sqrt(),
        Ln(a) => pos(a).ln(),
        Recip(a) => 1.0 / pos(a),
        Pow(a, p) => pos(a).powf(*p),
    }
}

pub fn eval_jet(e: &Expr, x: &[Jet<f64>]) -> Jet<f64> {
    use Expr::*;
    let pos = |a: &Expr| eval_jet(a, x).square() + 1.0;
    match e {
        Var(i) => x[*i].clone(),
        Const(c) => x[0].constant_like(*c),
        Add(a, b) => &eval_jet(a, x) + &eval_jet(b, x),
        Mul(a, b) => &eval_jet(a, x) * &eval_jet(b, x),
        Sin(a) => eval_jet(a, x).sin(),
        Cos(a) => eval_jet(a, x).cos(),
        Exp(a) => (eval_jet(a, x) * 0.5).exp(),
        Sinh(a) => eval_jet(a, x).sinh(),
        Cosh(a) => eval_jet(a, x).cosh(),
        Sqrt(a) => pos(a).sqrt().unwrap(),
        Ln(a) => pos(a).ln().unwrap(),
        Recip(a) => pos(a).recip().unwrap(),
        Pow(a, p) => pos(a).powf(*p).unwrap(),
    }
}

/// Central-difference weights for the `k`-th derivative, offsets `-2..=2`.
fn weights(k: u8) -> [f64; 5] {
    match k {
        0 => [0.0, 0.0, 1.0, 0.0, 0.0],
        1 => [0.0, -0.5, 0.0, 0.5, 0.0],
        2 => [0.0, 1.0, -2.0, 1.0, 0.0],
        3 => [-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => [1.0, -4.0, 6.0, -4.0, 1.0],
        _ => unreachable!(),
    }
}

/// Tensor-product central difference of `f` for the multi-index `alpha`.
fn central(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], h: f64) -> f64 {
    let n = x.len();
    let w: Vec<[f64; 5]> = alpha.iter().map(|&k| weights(k)).collect();
    let mut sum = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let c: f64 = (0..n).map(|i| w[i][idx[i]]).product();
        if c != 0.0 {
            let p: Vec<f64> = (0..n).map(|i| x[i] + (idx[i] as f64 - 2.0) * h).collect();
            sum += c * f(&p);
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < 5 {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let order: i32 = alpha.iter().map(|&k| k as i32).sum();
    sum / h.powi(order)
}

/// Two Richardson levels on the even error expansion of `central`.
fn richardson(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], h: f64) -> f64 {
    let d0 = central(f, x, alpha, h);
    let d1 = central(f, x, alpha, h / 2.0);
    let d2 = central(f, x, alpha, h / 4.0);
    let r0 = (4.0 * d1 - d0) / 3.0;
    let r1 = (4.0 * d2 - d1) / 3.0;
    (16.0 * r1 - r0) / 15.0
}

/// Worst relative deviation `|jet - fd| / max(|fd|, 1)` over every partial up
/// to order four of `cases` random compositions, or the first case that
/// exceeds `tol`.
pub fn worst_partial_deviation(seed: u64, cases: usize, tol: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let vars = 1 + case % 3;
        let expr = random_expr(&mut rng, vars, 4);
        let x: Vec<f64> = (0..vars).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let jet = eval_jet(&expr, &Jet::variables(&x, MAX_ORDER));
        let f = |p: &[f64]| eval_f64(&expr, p);
        if (jet.value() - f(&x)).abs() > 1e-12 * f(&x).abs().max(1.0) {
            return Err(format!("case {case}: value mismatch for {expr:?}"));
        }
        let layout = JetLayout::get(vars);
        for i in 1..layout.len(MAX_ORDER) {
            let alpha = layout.multi_index(i).to_vec();
            // h = 0.08 leaves truncation error near 1e-6, h = 0.02 amplifies round-off
            let fd = richardson(&f, &x, &alpha, 0.04);
            let got = jet.partial(&alpha);
            let rel = (got - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(rel);
            if rel > tol {
                return Err(format!("case {case} alpha {alpha:?}: jet {got} vs fd {fd} ({expr:?})"));
            }
        }
    }
    Ok(worst)
}
