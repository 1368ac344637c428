//! Closed-form scalar expressions on [0, 1].
//!
//! The grammar exposed to configuration files is: decimal/scientific
//! numbers, `x`, `pi`, `+ - * / ^`, `sin cos exp log abs step`, and
//! parentheses. A few extra node kinds (`Conj`, `Compose`,
//! `MonotoneInverse`) exist only for internally assembled coefficients;
//! the parser never produces them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Step convention: `step(t)` is 0 for t <= 0 and 1 for t > 0.
pub fn step(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Const(Complex64),
    X,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Abs(Box<Expr>),
    Step(Box<Expr>),
    /// Complex conjugate of the inner expression (internal).
    Conj(Box<Expr>),
    /// `outer(inner(x))`: the outer expression evaluated at the (real part
    /// of the) inner value (internal).
    Compose(Box<Expr>, Box<Expr>),
    /// Inverse of a strictly increasing real expression, tabulated once at
    /// construction and polished against the forward map on every
    /// evaluation (internal).
    MonotoneInverse(Arc<InverseTable>),
}

/// Seed table for evaluating the inverse of a strictly increasing map.
#[derive(Debug)]
pub struct InverseTable {
    pub forward: Expr,
    /// Domain of the forward map.
    pub lo: f64,
    pub hi: f64,
    /// `ys[k] = forward(xs[k])`, strictly increasing.
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl InverseTable {
    pub fn build(forward: Expr, lo: f64, hi: f64) -> Result<Self> {
        const N: usize = 2048;
        let mut xs = Vec::with_capacity(N + 1);
        let mut ys = Vec::with_capacity(N + 1);
        for k in 0..=N {
            let x = lo + (hi - lo) * (k as f64) / (N as f64);
            let y = forward.eval(x).re;
            if let Some(&prev) = ys.last() {
                if y <= prev {
                    return Err(Error::Domain {
                        point: x,
                        message: "map is not strictly increasing".into(),
                    });
                }
            }
            xs.push(x);
            ys.push(y);
        }
        Ok(InverseTable {
            forward,
            lo,
            hi,
            xs,
            ys,
        })
    }

    /// Solve `forward(x) = t` for x, seeded by the table and polished by
    /// bisection/Newton-free secant against the forward map.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ys.len();
        if t <= self.ys[0] {
            return self.xs[0];
        }
        if t >= self.ys[n - 1] {
            return self.xs[n - 1];
        }
        let idx = match self
            .ys
            .binary_search_by(|y| y.partial_cmp(&t).expect("non-finite forward value"))
        {
            Ok(i) => return self.xs[i],
            Err(i) => i,
        };
        let mut a = self.xs[idx - 1];
        let mut b = self.xs[idx];
        let mut fa = self.ys[idx - 1] - t;
        let mut fb = self.ys[idx] - t;
        // Regula falsi with bisection fallback; forward map is monotone so
        // the bracket never degenerates.
        for _ in 0..80 {
            if b - a <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
            let mut c = b - fb * (b - a) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let fc = self.forward.eval(c).re - t;
            if fc == 0.0 {
                return c;
            }
            if fc < 0.0 {
                a = c;
                fa = fc;
            } else {
                b = c;
                fb = fc;
            }
        }
        0.5 * (a + b)
    }
}

impl Expr {
    pub fn constant(c: impl Into<Complex64>) -> Expr {
        Expr::Const(c.into())
    }

    pub fn real(c: f64) -> Expr {
        Expr::Const(Complex64::new(c, 0.0))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X => Complex64::new(x, 0.0),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                let e = b.eval(x);
                // Real positive base with real exponent stays on the real
                // axis; otherwise take the principal branch.
                if base.im == 0.0 && e.im == 0.0 && (base.re > 0.0 || e.re.fract() == 0.0) {
                    Complex64::new(base.re.powf(e.re), 0.0)
                } else {
                    base.powc(e)
                }
            }
            Expr::Neg(a) => -a.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
            Expr::Abs(a) => Complex64::new(a.eval(x).norm(), 0.0),
            Expr::Step(a) => Complex64::new(step(a.eval(x).re), 0.0),
            Expr::Conj(a) => a.eval(x).conj(),
            Expr::Compose(outer, inner) => outer.eval(inner.eval(x).re),
            Expr::MonotoneInverse(table) => Complex64::new(table.eval(x), 0.0),
        }
    }

    /// Derivative with respect to x (almost everywhere for `abs`/`step`).
    /// Defined on the parser grammar only.
    pub fn differentiate(&self) -> Result<Expr> {
        use Expr::*;
        Ok(match self {
            Const(_) => Expr::real(0.0),
            X => Expr::real(1.0),
            Add(a, b) => add(a.differentiate()?, b.differentiate()?),
            Sub(a, b) => sub(a.differentiate()?, b.differentiate()?),
            Mul(a, b) => add(
                mul(a.differentiate()?, (**b).clone()),
                mul((**a).clone(), b.differentiate()?),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.differentiate()?, (**b).clone()),
                    mul((**a).clone(), b.differentiate()?),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Pow(a, b) => {
                if let Some(e) = b.as_const() {
                    // d/dx f^c = c f^(c-1) f'
                    mul(
                        mul(Expr::Const(e), pow((**a).clone(), Expr::Const(e - 1.0))),
                        a.differentiate()?,
                    )
                } else {
                    // f^g = exp(g ln f)
                    mul(
                        pow((**a).clone(), (**b).clone()),
                        add(
                            mul(b.differentiate()?, Log(a.clone())),
                            div(mul((**b).clone(), a.differentiate()?), (**a).clone()),
                        ),
                    )
                }
            }
            Neg(a) => neg(a.differentiate()?),
            Sin(a) => mul(Cos(a.clone()), a.differentiate()?),
            Cos(a) => neg(mul(Sin(a.clone()), a.differentiate()?)),
            Exp(a) => mul(Exp(a.clone()), a.differentiate()?),
            Log(a) => div(a.differentiate()?, (**a).clone()),
            Abs(a) => mul(
                sub(mul(Expr::real(2.0), Step(a.clone())), Expr::real(1.0)),
                a.differentiate()?,
            ),
            Step(_) => Expr::real(0.0),
            Conj(a) => Conj(Box::new(a.differentiate()?)),
            Compose(_, _) | MonotoneInverse(_) => {
                return Err(Error::Unsupported(
                    "symbolic derivative of composed/inverse expressions".into(),
                ))
            }
        })
    }

    /// Collect inner arguments of `step`/`abs` nodes, whose zero crossings
    /// are discontinuities or kinks worth splitting at.
    pub fn kink_arguments(&self, out: &mut Vec<Expr>) {
        use Expr::*;
        match self {
            Const(_) | X | MonotoneInverse(_) => {}
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.kink_arguments(out);
                b.kink_arguments(out);
            }
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Log(a) | Conj(a) => a.kink_arguments(out),
            Abs(a) | Step(a) => {
                out.push((**a).clone());
                a.kink_arguments(out);
            }
            Compose(outer, inner) => {
                // Kinks of the inner map only; outer kinks move through the
                // substitution and are handled by the piecewise composer.
                inner.kink_arguments(out);
                let _ = outer;
            }
        }
    }
}

// Smart constructors with light constant folding, so assembled systems stay
// readable when printed.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), None) if x == Complex64::ZERO => b,
        (None, Some(y)) if y == Complex64::ZERO => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (None, Some(y)) if y == Complex64::ZERO => a,
        (Some(x), None) if x == Complex64::ZERO => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) if x == Complex64::ZERO => Expr::real(0.0),
        (_, Some(y)) if y == Complex64::ZERO => Expr::real(0.0),
        (Some(x), None) if x == Complex64::ONE => b,
        (None, Some(y)) if y == Complex64::ONE => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != Complex64::ZERO => Expr::Const(x / y),
        (Some(x), _) if x == Complex64::ZERO => Expr::real(0.0),
        (None, Some(y)) if y == Complex64::ONE => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (_, Some(e)) if e == Complex64::ZERO => Expr::real(1.0),
        (_, Some(e)) if e == Complex64::ONE => a,
        (Some(base), Some(e)) if base.im == 0.0 && e.im == 0.0 && base.re > 0.0 => {
            Expr::real(base.re.powf(e.re))
        }
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub fn conj(a: Expr) -> Expr {
    match &a {
        Expr::Const(c) => Expr::Const(c.conj()),
        Expr::Abs(_) | Expr::Step(_) => a,
        _ => Expr::Conj(Box::new(a)),
    }
}

pub fn abs(a: Expr) -> Expr {
    match a.as_const() {
        Some(c) => Expr::real(c.norm()),
        None => Expr::Abs(Box::new(a)),
    }
}

/// `|a|^alpha` with the exponent-zero case split off so that `0^0` never
/// arises.
pub fn abs_pow(a: Expr, alpha: f64) -> Expr {
    if alpha == 0.0 {
        Expr::real(1.0)
    } else if alpha == 1.0 {
        abs(a)
    } else {
        pow(abs(a), Expr::real(alpha))
    }
}

fn fmt_complex(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        if c.re < 0.0 {
            write!(f, "({})", c.re)
        } else {
            write!(f, "{}", c.re)
        }
    } else if c.re == 0.0 && c.im == 1.0 {
        write!(f, "(0+1i)")
    } else {
        write!(f, "({}{}{}i)", c.re, if c.im < 0.0 { "" } else { "+" }, c.im)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Const(c) => fmt_complex(*c, f),
            X => write!(f, "x"),
            Add(a, b) => write!(f, "({} + {})", a, b),
            Sub(a, b) => write!(f, "({} - {})", a, b),
            Mul(a, b) => write!(f, "{} * {}", a, b),
            Div(a, b) => write!(f, "{} / ({})", a, b),
            Pow(a, b) => write!(f, "({})^({})", a, b),
            Neg(a) => write!(f, "-{}", a),
            Sin(a) => write!(f, "sin({})", a),
            Cos(a) => write!(f, "cos({})", a),
            Exp(a) => write!(f, "exp({})", a),
            Log(a) => write!(f, "log({})", a),
            Abs(a) => write!(f, "abs({})", a),
            Step(a) => write!(f, "step({})", a),
            Conj(a) => write!(f, "conj({})", a),
            Compose(outer, inner) => write!(f, "compose({}; {})", outer, inner),
            MonotoneInverse(t) => write!(f, "inverse({})", t.forward),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_basic() {
        let e = Expr::Mul(
            Box::new(Expr::X),
            Box::new(Expr::Sin(Box::new(Expr::X))),
        );
        let v = e.eval(0.5);
        assert!((v.re - 0.5 * 0.5f64.sin()).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn step_convention_zero_at_origin() {
        let e = Expr::Step(Box::new(Expr::X));
        assert_eq!(e.eval(0.0).re, 0.0);
        assert_eq!(e.eval(1e-12).re, 1.0);
    }

    #[test]
    fn differentiate_product() {
        let e = mul(Expr::X, Expr::Sin(Box::new(Expr::X)));
        let d = e.differentiate().unwrap();
        let x = 0.7f64;
        let expect = x.sin() + x * x.cos();
        assert!((d.eval(x).re - expect).abs() < 1e-14);
    }

    #[test]
    fn monotone_inverse_roundtrip() {
        // forward(x) = x + x^2 on [0, 1]
        let fwd = add(Expr::X, mul(Expr::X, Expr::X));
        let table = InverseTable::build(fwd.clone(), 0.0, 1.0).unwrap();
        for &t in &[0.0, 0.3, 1.1, 1.7, 2.0] {
            let x = table.eval(t);
            assert!((fwd.eval(x).re - t).abs() < 1e-12, "t = {}", t);
        }
    }

    #[test]
    fn fold_keeps_expressions_small() {
        let e = add(Expr::real(0.0), mul(Expr::real(1.0), Expr::X));
        assert!(matches!(e, Expr::X));
    }
}
