//! Scalar coefficient functions on [0, 1]: piecewise closed forms with
//! declared breakpoints, integrable endpoint singularities, and optional
//! point atoms (measure mode).
//!
//! Everything downstream (coefficient systems, assembled first-order
//! systems, weak forms) is built out of these.

pub mod expr;
pub mod parse;
pub mod quad;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use expr::Expr;
pub use quad::QuadOptions;

/// Which endpoint of a piece carries a power-law blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceEnd {
    Lower,
    Upper,
}

/// One smooth piece of a coefficient function.
#[derive(Debug, Clone)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub expr: Expr,
    /// Declared integrable endpoint exponent alpha in (-1, 0): the piece
    /// behaves like (x - lo)^alpha or (hi - x)^alpha there.
    pub sing: Option<(PieceEnd, f64)>,
}

/// A real- or complex-valued integrable function on [0, 1].
#[derive(Debug, Clone)]
pub struct CoefficientFunction {
    pieces: Vec<Piece>,
    /// Interior split points: piece boundaries plus detected zero
    /// crossings of `step`/`abs` arguments.
    breakpoints: Vec<f64>,
    /// (location, weight) point masses; empty outside measure mode.
    atoms: Vec<(f64, Complex64)>,
}

const BOUNDARY_EPS: f64 = 1e-12;

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() < BOUNDARY_EPS);
}

/// Zeros of `e` strictly inside (lo, hi), located by sign-change bisection
/// on a fine sample.
fn interior_zeros(e: &Expr, lo: f64, hi: f64) -> Vec<f64> {
    const N: usize = 2048;
    let mut out = Vec::new();
    let mut prev_x = lo;
    let mut prev_v = e.eval(lo).re;
    for k in 1..=N {
        let x = lo + (hi - lo) * (k as f64) / (N as f64);
        let v = e.eval(x).re;
        if prev_v == 0.0 && prev_x > lo {
            out.push(prev_x);
        } else if prev_v * v < 0.0 {
            let (mut a, mut b, mut fa) = (prev_x, x, prev_v);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = e.eval(m).re;
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let root = 0.5 * (a + b);
            if root > lo + BOUNDARY_EPS && root < hi - BOUNDARY_EPS {
                out.push(root);
            }
        }
        prev_x = x;
        prev_v = v;
    }
    out
}

impl CoefficientFunction {
    /// Single closed-form piece covering all of [0, 1].
    pub fn from_expr(e: Expr) -> Self {
        Self::from_pieces(vec![Piece {
            lo: 0.0,
            hi: 1.0,
            expr: e,
            sing: None,
        }])
        .expect("single full piece is always a valid tiling")
    }

    /// Parse an expression string into a single piece on [0, 1].
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::from_expr(parse::parse(src)?))
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::from_expr(Expr::Const(c.into()))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Build from explicit pieces; they must tile [0, 1] without gaps or
    /// overlaps.
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("coefficient function", vec!["no pieces".into()]));
        }
        let mut sorted = pieces;
        sorted.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let mut details = Vec::new();
        if (sorted[0].lo - 0.0).abs() > BOUNDARY_EPS {
            details.push(format!("first piece starts at {}, not 0", sorted[0].lo));
        }
        if (sorted.last().unwrap().hi - 1.0).abs() > BOUNDARY_EPS {
            details.push(format!(
                "last piece ends at {}, not 1",
                sorted.last().unwrap().hi
            ));
        }
        for w in sorted.windows(2) {
            if (w[0].hi - w[1].lo).abs() > BOUNDARY_EPS {
                details.push(format!(
                    "pieces do not tile: [{}, {}] then [{}, {}]",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                ));
            }
        }
        for p in &sorted {
            if p.hi <= p.lo {
                details.push(format!("empty piece [{}, {}]", p.lo, p.hi));
            }
            if let Some((_, alpha)) = p.sing {
                if alpha <= -1.0 || alpha >= 0.0 {
                    details.push(format!(
                        "endpoint exponent {} outside the integrable range (-1, 0)",
                        alpha
                    ));
                }
            }
        }
        if !details.is_empty() {
            return Err(Error::invalid("coefficient function", details));
        }
        let mut breakpoints: Vec<f64> = Vec::new();
        for (k, p) in sorted.iter().enumerate() {
            if k > 0 {
                breakpoints.push(p.lo);
            }
            for arg in {
                let mut args = Vec::new();
                p.expr.kink_arguments(&mut args);
                args
            } {
                breakpoints.extend(interior_zeros(&arg, p.lo, p.hi));
            }
        }
        dedup_sorted(&mut breakpoints);
        Ok(CoefficientFunction {
            pieces: sorted,
            breakpoints,
            atoms: Vec::new(),
        })
    }

    /// Attach point masses (measure mode).
    pub fn with_atoms(mut self, atoms: Vec<(f64, Complex64)>) -> Result<Self> {
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(loc, _) in &atoms {
            if !(0.0..=1.0).contains(&loc) {
                return Err(Error::invalid(
                    "atoms",
                    vec![format!("atom location {} outside [0, 1]", loc)],
                ));
            }
        }
        self.atoms = atoms;
        Ok(self)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn atoms(&self) -> &[(f64, Complex64)] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn has_singularities(&self) -> bool {
        self.pieces.iter().any(|p| p.sing.is_some())
    }

    /// Index of the piece whose half-open interval contains x (the last
    /// piece also owns x = 1).
    fn piece_index(&self, x: f64) -> usize {
        match self
            .pieces
            .binary_search_by(|p| p.lo.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.pieces.len() - 1),
            Err(0) => 0,
            Err(i) => {
                if i >= self.pieces.len() {
                    self.pieces.len() - 1
                } else if x >= self.pieces[i - 1].hi {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    /// Pointwise value without domain-policing; quadrature and samplers
    /// use this on interior nodes.
    pub fn eval_raw(&self, x: f64) -> Complex64 {
        let p = &self.pieces[self.piece_index(x)];
        p.expr.eval(x)
    }

    /// Pointwise value of the active piece at x.
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                point: x,
                message: "outside [0, 1]".into(),
            });
        }
        for &(loc, _) in &self.atoms {
            if (loc - x).abs() < BOUNDARY_EPS {
                return Err(Error::Domain {
                    point: x,
                    message: "pointwise value at an atom location is undefined".into(),
                });
            }
        }
        let p = &self.pieces[self.piece_index(x)];
        if let Some((end, _)) = p.sing {
            let sp = match end {
                PieceEnd::Lower => p.lo,
                PieceEnd::Upper => p.hi,
            };
            if (x - sp).abs() < BOUNDARY_EPS {
                return Err(Error::Domain {
                    point: x,
                    message: "declared singular endpoint".into(),
                });
            }
        }
        Ok(p.expr.eval(x))
    }

    /// Integral over [a, b] (atoms in (a, b] included), to the given
    /// absolute tolerance.
    pub fn integrate_with(&self, a: f64, b: f64, opts: QuadOptions) -> Result<Complex64> {
        if a > b || !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return Err(Error::Domain {
                point: a,
                message: format!("bad integration range [{}, {}]", a, b),
            });
        }
        let mut total = Complex64::ZERO;
        let overlaps: Vec<(usize, f64, f64)> = self
            .pieces
            .iter()
            .enumerate()
            .filter_map(|(k, p)| {
                let lo = p.lo.max(a);
                let hi = p.hi.min(b);
                (hi > lo).then_some((k, lo, hi))
            })
            .collect();
        let n_seg = overlaps.len().max(1);
        let seg_opts = QuadOptions {
            abs_tol: opts.abs_tol / n_seg as f64,
            ..opts
        };
        for (k, lo, hi) in overlaps {
            let p = &self.pieces[k];
            let f = |x: f64| p.expr.eval(x);
            let value = match p.sing {
                Some((PieceEnd::Lower, alpha)) if (lo - p.lo).abs() < BOUNDARY_EPS => {
                    quad::integrate_power_endpoint(f, lo, hi, alpha, true, seg_opts)?
                }
                Some((PieceEnd::Upper, alpha)) if (hi - p.hi).abs() < BOUNDARY_EPS => {
                    quad::integrate_power_endpoint(f, lo, hi, alpha, false, seg_opts)?
                }
                _ => quad::integrate(f, lo, hi, &self.breakpoints, seg_opts)?,
            };
            total += value;
        }
        for &(loc, w) in &self.atoms {
            if loc > a && loc <= b {
                total += w;
            }
        }
        Ok(total)
    }

    pub fn integrate(&self, a: f64, b: f64) -> Result<Complex64> {
        self.integrate_with(a, b, QuadOptions::default())
    }

    /// Antiderivative F with F(0) = 0, evaluable anywhere on [0, 1].
    pub fn antiderivative(&self) -> Result<Primitive> {
        Primitive::new(self.clone(), QuadOptions::default())
    }

    /// True iff the primitive of |f| is strictly increasing, decided by
    /// looking for a subinterval of at least `resolution` on which |f|
    /// vanishes. On failure returns a witness subinterval.
    pub fn is_strictly_monotone_primitive_with(
        &self,
        resolution: f64,
    ) -> (bool, Option<(f64, f64)>) {
        const N: usize = 4096;
        let mut samples = Vec::with_capacity(N + 1);
        let mut scale: f64 = 0.0;
        for k in 0..=N {
            let x = k as f64 / N as f64;
            // nudge off piece boundaries so one-sided values are sampled
            let xs = if k == 0 {
                1e-9
            } else if k == N {
                1.0 - 1e-9
            } else {
                x
            };
            let v = self.eval_raw(xs).norm();
            scale = scale.max(v);
            samples.push((x, v));
        }
        if scale == 0.0 {
            return (false, Some((0.0, 1.0)));
        }
        let floor = 1e-13 * scale;
        let mut run_start: Option<f64> = None;
        let mut last_zero = 0.0;
        for k in 0..=N {
            let (x, v) = samples[k];
            let is_zero = v <= floor;
            if is_zero {
                if run_start.is_none() {
                    run_start = Some(x);
                }
                last_zero = x;
            }
            if !is_zero || k == N {
                if let Some(start) = run_start.take() {
                    let end = if is_zero { x } else { last_zero };
                    if end - start >= resolution {
                        // confirm with an integral: |f| must really vanish
                        let mass = self
                            .abs()
                            .integrate_with(
                                start,
                                end,
                                QuadOptions {
                                    abs_tol: 1e-10,
                                    ..QuadOptions::default()
                                },
                            )
                            .map(|v| v.re)
                            .unwrap_or(0.0);
                        if mass <= 1e-10 * scale.max(1.0) * (end - start) {
                            return (false, Some((start, end)));
                        }
                    }
                }
            }
        }
        (true, None)
    }

    pub fn is_strictly_monotone_primitive(&self) -> (bool, Option<(f64, f64)>) {
        self.is_strictly_monotone_primitive_with(2f64.powi(-20))
    }

    // ---- algebra on the piecewise representation ----

    /// Combine two functions piecewise with the given expression-level
    /// combiner and singularity-merging rule.
    fn zip_with(
        &self,
        other: &CoefficientFunction,
        combine: impl Fn(Expr, Expr) -> Expr,
        merge_sing: impl Fn(Option<f64>, Option<f64>) -> Option<f64>,
    ) -> CoefficientFunction {
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            cuts.push(p.lo);
            cuts.push(p.hi);
        }
        dedup_sorted(&mut cuts);
        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let pa = &self.pieces[self.piece_index(mid)];
            let pb = &other.pieces[other.piece_index(mid)];
            let sing_at = |p: &Piece, end: PieceEnd| -> Option<f64> {
                match (p.sing, end) {
                    (Some((PieceEnd::Lower, alpha)), PieceEnd::Lower)
                        if (p.lo - lo).abs() < BOUNDARY_EPS =>
                    {
                        Some(alpha)
                    }
                    (Some((PieceEnd::Upper, alpha)), PieceEnd::Upper)
                        if (p.hi - hi).abs() < BOUNDARY_EPS =>
                    {
                        Some(alpha)
                    }
                    _ => None,
                }
            };
            let lower = merge_sing(sing_at(pa, PieceEnd::Lower), sing_at(pb, PieceEnd::Lower));
            let upper = merge_sing(sing_at(pa, PieceEnd::Upper), sing_at(pb, PieceEnd::Upper));
            let sing = match (lower, upper) {
                (Some(alpha), _) if alpha > -1.0 && alpha < 0.0 => Some((PieceEnd::Lower, alpha)),
                (_, Some(alpha)) if alpha > -1.0 && alpha < 0.0 => Some((PieceEnd::Upper, alpha)),
                _ => None,
            };
            pieces.push(Piece {
                lo,
                hi,
                expr: combine(pa.expr.clone(), pb.expr.clone()),
                sing,
            });
        }
        let mut out = CoefficientFunction::from_pieces(pieces)
            .expect("zip of valid tilings is a valid tiling");
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().copied());
        if !atoms.is_empty() {
            out = out.with_atoms(atoms).expect("atoms already validated");
        }
        out
    }

    fn merge_sing_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        }
    }

    fn merge_sing_sum(a: Option<f64>, b: Option<f64>) -> Option<f64> {
        match (a, b) {
            (Some(x), Some(y)) => Some(x + y),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        }
    }

    pub fn add(&self, other: &CoefficientFunction) -> CoefficientFunction {
        self.zip_with(other, expr::add, Self::merge_sing_min)
    }

    pub fn sub(&self, other: &CoefficientFunction) -> CoefficientFunction {
        self.zip_with(other, expr::sub, Self::merge_sing_min)
    }

    pub fn mul(&self, other: &CoefficientFunction) -> CoefficientFunction {
        self.zip_with(other, expr::mul, Self::merge_sing_sum)
    }

    /// Pointwise quotient. No singularity hint is propagated from the
    /// denominator; intended for denominators bounded away from zero.
    pub fn div(&self, other: &CoefficientFunction) -> CoefficientFunction {
        self.zip_with(other, expr::div, |a, _| a)
    }

    pub fn scale(&self, c: Complex64) -> CoefficientFunction {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.expr = expr::mul(Expr::Const(c), p.expr.clone());
        }
        for a in &mut out.atoms {
            a.1 *= c;
        }
        out
    }

    pub fn conj(&self) -> CoefficientFunction {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.expr = expr::conj(p.expr.clone());
        }
        for a in &mut out.atoms {
            a.1 = a.1.conj();
        }
        out
    }

    pub fn abs(&self) -> CoefficientFunction {
        self.abs_pow(1.0)
    }

    /// |f|^alpha formed per piece; declared exponents scale by alpha.
    pub fn abs_pow(&self, alpha: f64) -> CoefficientFunction {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.expr = expr::abs_pow(p.expr.clone(), alpha);
            p.sing = p.sing.and_then(|(end, a)| {
                let scaled = a * alpha;
                (scaled < 0.0 && scaled > -1.0).then_some((end, scaled))
            });
        }
        out.atoms.clear();
        out
    }

    pub fn neg(&self) -> CoefficientFunction {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Composition f(xi(t)) with a strictly increasing map. `xi` is the
    /// inverse of `tau`; piece boundaries b of f move to tau(b).
    pub fn compose_monotone(&self, xi: &Expr, tau: &Expr) -> Result<CoefficientFunction> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let lo = if p.lo == 0.0 { 0.0 } else { tau.eval(p.lo).re };
            let hi = if p.hi == 1.0 { 1.0 } else { tau.eval(p.hi).re };
            pieces.push(Piece {
                lo,
                hi,
                expr: Expr::Compose(Box::new(p.expr.clone()), Box::new(xi.clone())),
                sing: p.sing,
            });
        }
        CoefficientFunction::from_pieces(pieces)
    }

    /// Max |f| over a fixed sample grid; cheap boundedness probe.
    pub fn sample_abs_max(&self, n: usize) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..=n {
            let x = (k as f64 + 0.5) / (n as f64 + 1.0);
            m = m.max(self.eval_raw(x).norm());
        }
        m
    }

    /// Min |f| over a sample grid that clusters geometrically at piece
    /// endpoints and bisects toward interior sign changes, to sniff out
    /// vanishing values and limits.
    pub fn sample_abs_min(&self, n: usize) -> f64 {
        let mut m = f64::INFINITY;
        let mut prev: Option<(f64, Complex64)> = None;
        for k in 0..=n {
            let x = (k as f64 + 0.5) / (n as f64 + 1.0);
            let v = self.eval_raw(x);
            m = m.min(v.norm());
            // a sign change of the real part with negligible imaginary
            // part is an interior zero crossing
            if let Some((_, pv)) = prev {
                if pv.re * v.re < 0.0
                    && pv.im.abs() < 1e-12 * pv.norm().max(1e-300)
                    && v.im.abs() < 1e-12 * v.norm().max(1e-300)
                {
                    m = 0.0;
                }
            }
            prev = Some((x, v));
        }
        for p in &self.pieces {
            let span = p.hi - p.lo;
            for j in 1..=44 {
                let d = span * 2f64.powi(-j);
                m = m.min(self.eval_raw(p.lo + d).norm());
                m = m.min(self.eval_raw(p.hi - d).norm());
            }
        }
        m
    }
}

impl fmt::Display for CoefficientFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.len() == 1 {
            write!(f, "{}", self.pieces[0].expr)?;
        } else {
            for (k, p) in self.pieces.iter().enumerate() {
                if k > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "[{}, {}]: {}", p.lo, p.hi, p.expr)?;
            }
        }
        for (loc, w) in &self.atoms {
            write!(f, " + {}*delta({})", w, loc)?;
        }
        Ok(())
    }
}

/// Absolutely continuous antiderivative F(x) = ∫₀ˣ f dt (of bounded
/// variation with jumps at atoms in measure mode).
pub struct Primitive {
    f: CoefficientFunction,
    opts: QuadOptions,
    /// Cumulative integrals at piece boundaries.
    checkpoints: Vec<(f64, Complex64)>,
}

impl Primitive {
    fn new(f: CoefficientFunction, opts: QuadOptions) -> Result<Self> {
        let mut boundaries: Vec<f64> = vec![0.0];
        for p in f.pieces() {
            boundaries.push(p.hi);
        }
        dedup_sorted(&mut boundaries);
        let mut checkpoints = Vec::with_capacity(boundaries.len());
        let mut acc = Complex64::ZERO;
        checkpoints.push((0.0, acc));
        for w in boundaries.windows(2) {
            acc += f.integrate_with(w[0], w[1], opts)?;
            checkpoints.push((w[1], acc));
        }
        Ok(Primitive {
            f,
            opts,
            checkpoints,
        })
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                point: x,
                message: "outside [0, 1]".into(),
            });
        }
        let mut base = (0.0, Complex64::ZERO);
        for &(bx, bv) in &self.checkpoints {
            if bx <= x {
                base = (bx, bv);
            } else {
                break;
            }
        }
        if base.0 == x {
            return Ok(base.1);
        }
        Ok(base.1 + self.f.integrate_with(base.0, x, self.opts)?)
    }
}

/// A few constructors used all over the test suites.
impl CoefficientFunction {
    /// `step(x - at)`.
    pub fn step_at(at: f64) -> Self {
        Self::from_expr(Expr::Step(Box::new(expr::sub(Expr::X, Expr::real(at)))))
    }

    /// `sin(k pi x)`.
    pub fn sin_pi(k: f64) -> Self {
        Self::from_expr(Expr::Sin(Box::new(expr::mul(
            Expr::real(k * PI),
            Expr::X,
        ))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_constant_and_step() {
        let one = CoefficientFunction::parse("1").unwrap();
        assert_eq!(one.eval(0.3).unwrap(), c(1.0));

        let st = CoefficientFunction::parse("step(x - 0.5)").unwrap();
        assert_eq!(st.eval(0.25).unwrap(), c(0.0));
        assert_eq!(st.eval(0.75).unwrap(), c(1.0));
        // the jump is a detected breakpoint
        assert!(st.breakpoints().iter().any(|&b| (b - 0.5).abs() < 1e-9));
    }

    #[test]
    fn eval_singular_piece() {
        let f = CoefficientFunction::from_pieces(vec![Piece {
            lo: 0.0,
            hi: 1.0,
            expr: parse::parse("x^(-1/2)").unwrap(),
            sing: Some((PieceEnd::Lower, -0.5)),
        }])
        .unwrap();
        assert!((f.eval(0.25).unwrap().re - 2.0).abs() < 1e-14);
        assert!(f.eval(0.0).is_err());
    }

    #[test]
    fn integrate_inverse_sqrt() {
        let f = CoefficientFunction::from_pieces(vec![Piece {
            lo: 0.0,
            hi: 1.0,
            expr: parse::parse("x^(-1/2)").unwrap(),
            sing: Some((PieceEnd::Lower, -0.5)),
        }])
        .unwrap();
        assert!((f.integrate(0.0, 1.0).unwrap().re - 2.0).abs() < 1e-11);
        let prim = f.antiderivative().unwrap();
        assert!((prim.eval(0.25).unwrap().re - 1.0).abs() < 1e-11);
    }

    #[test]
    fn integrate_step_and_sine() {
        let st = CoefficientFunction::parse("step(x - 0.5)").unwrap();
        assert!((st.integrate(0.0, 1.0).unwrap().re - 0.5).abs() < 1e-12);

        let s = CoefficientFunction::parse("sin(pi*x)").unwrap();
        assert!((s.integrate(0.0, 1.0).unwrap().re - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_of_one_and_step() {
        let one = CoefficientFunction::one();
        let prim = one.antiderivative().unwrap();
        assert!((prim.eval(1.0).unwrap().re - 1.0).abs() < 1e-13);

        let st = CoefficientFunction::step_at(0.5);
        let prim = st.antiderivative().unwrap();
        assert!((prim.eval(0.5).unwrap().re - 0.0).abs() < 1e-13);
        assert!((prim.eval(1.0).unwrap().re - 0.5).abs() < 1e-13);
    }

    #[test]
    fn monotone_primitive_checks() {
        let (ok, _) = CoefficientFunction::one().is_strictly_monotone_primitive();
        assert!(ok);

        let (ok, witness) =
            CoefficientFunction::step_at(0.5).is_strictly_monotone_primitive();
        assert!(!ok);
        let (lo, hi) = witness.unwrap();
        assert!(lo >= -1e-9 && hi <= 0.5 + 1e-6);

        let (ok, _) = CoefficientFunction::parse("x")
            .unwrap()
            .is_strictly_monotone_primitive();
        assert!(ok, "x vanishes only at one point");
    }

    #[test]
    fn atoms_enter_integrals_on_half_open_intervals() {
        let f = CoefficientFunction::zero()
            .with_atoms(vec![(0.5, c(2.0))])
            .unwrap();
        assert_eq!(f.integrate(0.0, 0.4).unwrap(), c(0.0));
        assert_eq!(f.integrate(0.0, 0.5).unwrap(), c(2.0));
        assert_eq!(f.integrate(0.5, 1.0).unwrap(), c(0.0));
        assert!(f.eval(0.5).is_err());
    }

    #[test]
    fn algebra_merges_pieces() {
        let st = CoefficientFunction::step_at(0.5);
        let x = CoefficientFunction::parse("x").unwrap();
        let sum = st.add(&x);
        assert!((sum.eval_raw(0.25).re - 0.25).abs() < 1e-15);
        assert!((sum.eval_raw(0.75).re - 1.75).abs() < 1e-15);
        let prod = st.mul(&x);
        assert!((prod.integrate(0.0, 1.0).unwrap().re - 0.375).abs() < 1e-12);
    }
}
