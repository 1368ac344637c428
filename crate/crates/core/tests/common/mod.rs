//! Shared oracles for the integration suites: independent routes to the
//! expected values (transcendental bracketing, finite elements, closed
//! forms), kept free of the library's solver path.

#![allow(dead_code)]

use std::time::Instant;

use num_complex::Complex64;
use quasidiff::coeffs::{expr, Expr};
use quasidiff::CoefficientFunction;
use rand::Rng;

/// Roots of cos(mu) cosh(mu) = 1 above zero, by scan-and-bisect.
pub fn clamped_beam_mu_roots(count: usize) -> Vec<f64> {
    let g = |mu: f64| mu.cos() * mu.cosh() - 1.0;
    let mut roots = Vec::with_capacity(count);
    let mut prev = 1.0;
    let mut prev_v = g(prev);
    let mut mu = prev;
    while roots.len() < count && mu < 60.0 {
        mu += 1e-3;
        let v = g(mu);
        if prev_v * v < 0.0 {
            let (mut a, mut b) = (prev, mu);
            let mut fa = prev_v;
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                let fc = g(c);
                if fa * fc <= 0.0 {
                    b = c;
                } else {
                    a = c;
                    fa = fc;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = mu;
        prev_v = v;
    }
    roots
}

/// Number of generalized eigenvalues of (K, M) below sigma, by the
/// inertia of the tridiagonal K - sigma M (LDL^T sign count).
fn eigenvalues_below(diag_k: &[f64], off_k: &[f64], diag_m: &[f64], off_m: &[f64], sigma: f64) -> usize {
    let n = diag_k.len();
    let mut count = 0;
    let mut delta = diag_k[0] - sigma * diag_m[0];
    if delta == 0.0 {
        delta = -1e-300;
    }
    if delta < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e = off_k[i - 1] - sigma * off_m[i - 1];
        let mut next = diag_k[i] - sigma * diag_m[i] - e * e / delta;
        if next == 0.0 {
            next = -1e-300;
        }
        if next < 0.0 {
            count += 1;
        }
        delta = next;
    }
    count
}

/// First `count` eigenvalues of the piecewise-linear finite-element
/// discretization of -u'' + (strength * delta at 1/2) u = lambda u on
/// (0, 1) with Dirichlet ends, mesh width 2^-levels, isolated by inertia
/// bisection.
pub fn fem_delta_eigenvalues(levels: u32, strength: f64, count: usize) -> Vec<f64> {
    let cells = 1usize << levels;
    let n = cells - 1;
    let h = 1.0 / cells as f64;
    let mut diag_k = vec![2.0 / h; n];
    let off_k = vec![-1.0 / h; n - 1];
    let diag_m = vec![4.0 * h / 6.0; n];
    let off_m = vec![h / 6.0; n - 1];
    // the delta sits exactly on the middle node
    let mid = cells / 2 - 1;
    diag_k[mid] += strength;

    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let (mut lo, mut hi) = (0.0, 16.0 * (k as f64 + 2.0).powi(2) * 10.0);
        while eigenvalues_below(&diag_k, &off_k, &diag_m, &off_m, hi) < k {
            hi *= 2.0;
        }
        for _ in 0..220 {
            let mid_sigma = 0.5 * (lo + hi);
            if eigenvalues_below(&diag_k, &off_k, &diag_m, &off_m, mid_sigma) >= k {
                hi = mid_sigma;
            } else {
                lo = mid_sigma;
            }
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

/// Generalized eigenvalues of the 2x2 stiffness/mass system for the
/// two-atom string (hat functions at the atom locations 1/3, 2/3 with
/// unit-slope segments of length 1/3), solved by the quadratic formula.
pub fn two_atom_oracle(w: f64) -> (f64, f64) {
    // K = 3 [[2, -1], [-1, 2]], M = w I; K v = lambda M v
    let k_diag = 6.0;
    let k_off = -3.0;
    let a = (k_diag + k_off) / w;
    let b = (k_diag - k_off) / w;
    (a.min(b), a.max(b))
}

/// Random real smooth closed form with coefficients bounded by `scale`.
pub fn random_real_smooth(rng: &mut impl Rng, scale: f64) -> CoefficientFunction {
    let mut c = |s: f64| Expr::real(rng.gen_range(-1.0..1.0) * s);
    let e = expr::add(
        expr::add(
            c(scale),
            expr::mul(c(scale), Expr::X),
        ),
        expr::add(
            expr::mul(c(scale), Expr::Sin(Box::new(expr::mul(Expr::real(std::f64::consts::PI), Expr::X)))),
            expr::mul(c(0.5 * scale), Expr::Cos(Box::new(expr::mul(Expr::real(2.0 * std::f64::consts::PI), Expr::X)))),
        ),
    );
    CoefficientFunction::from_expr(e)
}

/// A random smooth function bounded away from zero (for leading
/// coefficients).
pub fn random_positive_smooth(rng: &mut impl Rng) -> CoefficientFunction {
    let a = rng.gen_range(-0.35..0.35);
    let b = rng.gen_range(-0.35..0.35);
    let e = expr::add(
        Expr::real(1.2),
        expr::add(
            expr::mul(Expr::real(a), Expr::Sin(Box::new(expr::mul(Expr::real(std::f64::consts::PI), Expr::X)))),
            expr::mul(Expr::real(b), Expr::X),
        ),
    );
    CoefficientFunction::from_expr(e)
}

pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Run a closure, assert it stays below the stated wall-clock budget, and
/// print one line for the criterion.
pub fn timed<T>(name: &str, budget_secs: f64, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed().as_secs_f64();
    println!("PASS {} ({:.2}s, budget {:.0}s)", name, elapsed, budget_secs);
    assert!(
        elapsed < budget_secs,
        "{} exceeded its runtime budget: {:.2}s > {:.0}s",
        name,
        elapsed,
        budget_secs
    );
    out
}
