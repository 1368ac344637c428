//! Constructors for the worked problem families: the fourth-order clamped
//! problem (plain and measure-coefficient variants), the third-order
//! periodic problem, a second-order Dirichlet problem with distributional
//! potential, and the Krein string with point masses.

pub mod krein;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::coeffs::{expr, CoefficientFunction, Expr};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator::{validate_spec, FunctionalData, OperatorSpec, PEntry};
use crate::quasisystem::CoefficientSystem;

pub use krein::{KreinSolver, MeasureFunction};

fn is_zero_cf(cf: &CoefficientFunction) -> bool {
    cf.atoms().is_empty()
        && cf
            .pieces()
            .iter()
            .all(|p| p.expr.as_const() == Some(Complex64::ZERO))
}

fn insert_p(table: &mut BTreeMap<(usize, usize), PEntry>, i: usize, j: usize, cf: CoefficientFunction) {
    if !is_zero_cf(&cf) {
        table.insert((i, j), PEntry::of(cf));
    }
}

/// Insert the pencil slot carrying -lambda times the given weight into
/// p_00.
fn insert_lambda_slot(table: &mut BTreeMap<(usize, usize), PEntry>, weight: CoefficientFunction) {
    let lambda_part = weight.neg();
    match table.remove(&(0, 0)) {
        Some(entry) => {
            table.insert((0, 0), PEntry::with_lambda(entry.base, lambda_part));
        }
        None => {
            table.insert(
                (0, 0),
                PEntry::with_lambda(CoefficientFunction::zero(), lambda_part),
            );
        }
    }
}

fn finish(spec: OperatorSpec) -> Result<OperatorSpec> {
    validate_spec(&spec).into_result("operator spec")?;
    Ok(spec)
}

/// Dirichlet problem for ((p y'')'' - (q' y')' + r'' y = f): n = m = 2,
/// s = 2, Sobolev tables, full-rank clamped boundary selectors.
///
/// The pencil parameter enters as a -lambda y right-hand side (slot
/// p_00).
pub fn fourth_order_dirichlet(
    p: CoefficientFunction,
    q: CoefficientFunction,
    r: CoefficientFunction,
) -> Result<OperatorSpec> {
    let mut table = BTreeMap::new();
    insert_p(&mut table, 2, 2, p);
    insert_p(&mut table, 1, 2, q.neg());
    insert_p(&mut table, 0, 2, r.clone());
    insert_p(&mut table, 2, 1, q.neg());
    insert_p(&mut table, 1, 1, r.scale(Complex64::new(2.0, 0.0)));
    insert_p(&mut table, 2, 0, r);
    insert_lambda_slot(&mut table, CoefficientFunction::one());
    finish(OperatorSpec {
        n: 2,
        m: 2,
        s: 2.0,
        a: CoefficientSystem::sobolev(2),
        b: CoefficientSystem::sobolev(2),
        u: CMat::identity(4, 4),
        v: CMat::identity(4, 4),
        q: CMat::zeros(4, 4),
        p: table,
    })
}

/// A strictly increasing change of variables, given either in closed form
/// or as a strictly increasing sample table (interpolated linearly).
#[derive(Clone)]
pub enum MonotoneMap {
    Expression(Expr),
    Samples(Vec<(f64, f64)>),
}

impl MonotoneMap {
    /// Closed-form representation; tables become hinge sums
    /// c0 + sum_k dm_k * relu(x - x_k), whose kinks the coefficient layer
    /// detects as breakpoints.
    pub fn to_expr(&self) -> Result<Expr> {
        match self {
            MonotoneMap::Expression(e) => Ok(e.clone()),
            MonotoneMap::Samples(pts) => {
                if pts.len() < 2 {
                    return Err(Error::invalid(
                        "monotone sample table",
                        vec!["need at least two samples".into()],
                    ));
                }
                let mut sorted = pts.clone();
                sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                for w in sorted.windows(2) {
                    if w[1].1 <= w[0].1 || w[1].0 <= w[0].0 {
                        return Err(Error::invalid(
                            "monotone sample table",
                            vec![format!(
                                "samples not strictly increasing near x = {}",
                                w[1].0
                            )],
                        ));
                    }
                }
                let mut e = Expr::real(sorted[0].1);
                let mut prev_slope = 0.0;
                for w in sorted.windows(2) {
                    let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    let dm = slope - prev_slope;
                    prev_slope = slope;
                    if dm != 0.0 {
                        // relu(x - a) = ((x - a) + |x - a|) / 2
                        let u = expr::sub(Expr::X, Expr::real(w[0].0));
                        let relu = expr::div(
                            expr::add(u.clone(), Expr::Abs(Box::new(u))),
                            Expr::real(2.0),
                        );
                        e = expr::add(e, expr::mul(Expr::real(dm), relu));
                    }
                }
                Ok(e)
            }
        }
    }
}

/// The substitution pair for a measure-coefficient fourth-order problem:
/// xi inverts tau(x) = (x + H(x) - H(0)) / (1 + H(1) - H(0)).
pub struct SubstitutionMaps {
    pub xi: Expr,
    pub tau: Expr,
}

impl SubstitutionMaps {
    pub fn build(h_expr: &Expr) -> Result<Self> {
        let h0 = h_expr.eval(0.0).re;
        let h1 = h_expr.eval(1.0).re;
        let denom = 1.0 + h1 - h0;
        let tau = expr::div(
            expr::add(Expr::X, expr::sub(h_expr.clone(), Expr::real(h0))),
            Expr::real(denom),
        );
        let table = expr::InverseTable::build(tau.clone(), 0.0, 1.0)?;
        let xi = Expr::MonotoneInverse(std::sync::Arc::new(table));
        Ok(SubstitutionMaps { xi, tau })
    }

    /// Transport right-hand-side data: f -> f o xi in the f_0 slot.
    pub fn transform_data(&self, f: &CoefficientFunction) -> Result<FunctionalData> {
        Ok(FunctionalData::from_f0(
            2,
            f.compose_monotone(&self.xi, &self.tau)?,
        ))
    }
}

/// Fourth-order Dirichlet problem whose leading coefficient is the
/// distributional derivative of a strictly increasing H: the substitution
/// through xi, eta turns it into a plain quasi-derivative table with
/// A_01 = xi', A_12 = eta'.
pub fn fourth_order_measure(
    h: &MonotoneMap,
    q: CoefficientFunction,
    r: CoefficientFunction,
) -> Result<OperatorSpec> {
    Ok(fourth_order_measure_with_maps(h, q, r)?.0)
}

pub fn fourth_order_measure_with_maps(
    h: &MonotoneMap,
    q: CoefficientFunction,
    r: CoefficientFunction,
) -> Result<(OperatorSpec, SubstitutionMaps)> {
    let h_expr = h.to_expr()?;
    // tau can stay monotone even when H dips, so police H itself
    let mut prev = h_expr.eval(0.0).re;
    for k in 1..=2048 {
        let x = k as f64 / 2048.0;
        let v = h_expr.eval(x).re;
        if v <= prev {
            return Err(Error::Domain {
                point: x,
                message: "H is not strictly increasing".into(),
            });
        }
        prev = v;
    }
    let maps = SubstitutionMaps::build(&h_expr)?;
    let h0 = h_expr.eval(0.0).re;
    let h1 = h_expr.eval(1.0).re;
    let denom = 1.0 + h1 - h0;
    // H' as a coefficient function (kinks of a table H become breakpoints),
    // then composed with xi so its breakpoints move to tau(x_k)
    let h_prime = CoefficientFunction::from_expr(h_expr.differentiate()?);
    let h_prime_sub = h_prime.compose_monotone(&maps.xi, &maps.tau)?;
    // xi'(t) = denom / (1 + H'(xi(t))), eta'(t) = H'(xi(t)) xi'(t)
    let xi_prime = CoefficientFunction::constant(denom)
        .div(&CoefficientFunction::one().add(&h_prime_sub));
    let eta_prime = h_prime_sub.mul(&xi_prime);

    let a = CoefficientSystem::new(
        2,
        vec![((0, 1), xi_prime.clone()), ((1, 2), eta_prime.clone())],
    );
    let sigma = q.compose_monotone(&maps.xi, &maps.tau)?;
    let rho = r.compose_monotone(&maps.xi, &maps.tau)?;
    let sqrt_eta = eta_prime.abs_pow(0.5);

    let mut table = BTreeMap::new();
    insert_p(&mut table, 2, 2, CoefficientFunction::one());
    insert_p(&mut table, 1, 2, sigma.neg().mul(&sqrt_eta));
    insert_p(&mut table, 0, 2, rho.mul(&sqrt_eta));
    insert_p(&mut table, 2, 1, sigma.neg().mul(&sqrt_eta));
    insert_p(
        &mut table,
        1,
        1,
        xi_prime.scale(Complex64::new(2.0, 0.0)).mul(&rho),
    );
    insert_p(&mut table, 2, 0, rho.mul(&sqrt_eta));
    insert_lambda_slot(&mut table, xi_prime);

    let spec = finish(OperatorSpec {
        n: 2,
        m: 2,
        s: 2.0,
        a: a.clone(),
        b: a,
        u: CMat::identity(4, 4),
        v: CMat::identity(4, 4),
        q: CMat::zeros(4, 4),
        p: table,
    })?;
    Ok((spec, maps))
}

/// Periodic problem for (-i y''' - (p y')' + q' y = f): n = 2, m = 1,
/// s = 1, periodic-difference boundary rows.
pub fn third_order_periodic(
    p: CoefficientFunction,
    q: CoefficientFunction,
) -> Result<OperatorSpec> {
    let one = Complex64::ONE;
    let mut u = CMat::zeros(4, 4);
    u[(0, 0)] = -one;
    u[(0, 2)] = one;
    u[(1, 1)] = -one;
    u[(1, 3)] = one;
    let mut v = CMat::zeros(2, 2);
    v[(0, 0)] = one;
    v[(0, 1)] = -one;

    let mut table = BTreeMap::new();
    insert_p(&mut table, 2, 1, CoefficientFunction::constant(Complex64::I));
    insert_p(&mut table, 1, 1, p);
    insert_p(&mut table, 0, 1, q.neg());
    insert_p(&mut table, 1, 0, q.neg());
    insert_lambda_slot(&mut table, CoefficientFunction::one());

    finish(OperatorSpec {
        n: 2,
        m: 1,
        s: 1.0,
        a: CoefficientSystem::sobolev(2),
        b: CoefficientSystem::sobolev(1),
        u,
        v,
        q: CMat::zeros(2, 4),
        p: table,
    })
}

/// Dirichlet problem for (-y'' + q' y = f) with integrable q (so the
/// potential q' may be a measure derivative such as a delta): n = m = 1,
/// s = 2.
pub fn second_order_dirichlet(q: CoefficientFunction) -> Result<OperatorSpec> {
    let mut table = BTreeMap::new();
    insert_p(&mut table, 1, 1, CoefficientFunction::one());
    insert_p(&mut table, 0, 1, q.neg());
    insert_p(&mut table, 1, 0, q.neg());
    insert_lambda_slot(&mut table, CoefficientFunction::one());
    finish(OperatorSpec {
        n: 1,
        m: 1,
        s: 2.0,
        a: CoefficientSystem::sobolev(1),
        b: CoefficientSystem::sobolev(1),
        u: CMat::identity(2, 2),
        v: CMat::identity(2, 2),
        q: CMat::zeros(2, 2),
        p: table,
    })
}

/// Dedicated Krein string solver; see [`krein`].
pub fn krein_feller(h: &MonotoneMap, measure: MeasureFunction) -> Result<KreinSolver> {
    KreinSolver::new(h, measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::assemble_system;

    fn entry_at(
        sys: &crate::operator::FirstOrderSystem,
        i: usize,
        j: usize,
        x: f64,
    ) -> Complex64 {
        sys.entry(i, j)
            .map(|cf| cf.eval_raw(x))
            .unwrap_or(Complex64::ZERO)
    }

    #[test]
    fn beam_general_fourth_row() {
        // (y3)' = -p^{-1} r^2 y0 + p^{-1} q r y1 + p^{-1} r y2 - f
        let p = CoefficientFunction::parse("1 + 0.5*x").unwrap();
        let q = CoefficientFunction::parse("x").unwrap();
        let r = CoefficientFunction::parse("1 - x").unwrap();
        let spec = fourth_order_dirichlet(p.clone(), q.clone(), r.clone()).unwrap();
        let data = FunctionalData::from_f0(2, CoefficientFunction::one());
        let sys = assemble_system(&spec, Complex64::ZERO, &data).unwrap();
        for &x in &[0.2, 0.5, 0.8] {
            let pv = p.eval_raw(x);
            let qv = q.eval_raw(x);
            let rv = r.eval_raw(x);
            assert!((entry_at(&sys, 3, 0, x) + rv * rv / pv).norm() < 1e-12);
            assert!((entry_at(&sys, 3, 1, x) - qv * rv / pv).norm() < 1e-12);
            assert!((entry_at(&sys, 3, 2, x) - rv / pv).norm() < 1e-12);
            assert!((sys.inhom[3].as_ref().unwrap().eval_raw(x) + Complex64::ONE).norm() < 1e-12);
            // row 2 slot (2,1) carries 2r - p^{-1} q^2
            assert!(
                (entry_at(&sys, 2, 1, x) - (2.0 * rv - qv * qv / pv)).norm() < 1e-12
            );
        }
    }

    #[test]
    fn beam_step_potential_slot() {
        let spec = fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::step_at(0.5),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let data = FunctionalData::zero(2);
        let sys = assemble_system(&spec, Complex64::ZERO, &data).unwrap();
        // (2r - p^{-1} q^2) = -step(x - 0.5)
        assert!((entry_at(&sys, 2, 1, 0.25)).norm() < 1e-14);
        assert!((entry_at(&sys, 2, 1, 0.75) + Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn periodic_assembled_rows() {
        let p = CoefficientFunction::parse("x").unwrap();
        let q = CoefficientFunction::parse("1 - x").unwrap();
        let spec = third_order_periodic(p.clone(), q.clone()).unwrap();
        let data = FunctionalData::from_f0(1, CoefficientFunction::one());
        let sys = assemble_system(&spec, Complex64::ZERO, &data).unwrap();
        let i = Complex64::I;
        for &x in &[0.2, 0.6] {
            let pv = p.eval_raw(x);
            let qv = q.eval_raw(x);
            // (y1)' = -i q y0 + i p y1 - i y2
            assert!((entry_at(&sys, 1, 0, x) + i * qv).norm() < 1e-12);
            assert!((entry_at(&sys, 1, 1, x) - i * pv).norm() < 1e-12);
            assert!((entry_at(&sys, 1, 2, x) + i).norm() < 1e-12);
            // (y2)' = -q y1 - f
            assert!((entry_at(&sys, 2, 1, x) + qv).norm() < 1e-12);
            assert!((sys.inhom[2].as_ref().unwrap().eval_raw(x) + Complex64::ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn measure_identity_reduces_to_plain_beam() {
        let q = CoefficientFunction::parse("x").unwrap();
        let r = CoefficientFunction::parse("1 - x").unwrap();
        let h = MonotoneMap::Expression(Expr::X);
        let m_spec = fourth_order_measure(&h, q.clone(), r.clone()).unwrap();
        let d_spec = fourth_order_dirichlet(CoefficientFunction::one(), q, r).unwrap();
        let data = FunctionalData::zero(2);
        let ms = assemble_system(&m_spec, Complex64::new(3.0, 0.0), &data).unwrap();
        let ds = assemble_system(&d_spec, Complex64::new(3.0, 0.0), &data).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for &x in &[0.15, 0.5, 0.85] {
                    let a = entry_at(&ms, i, j, x);
                    let b = entry_at(&ds, i, j, x);
                    assert!(
                        (a - b).norm() < 1e-9,
                        "entry ({}, {}) at {}: {} vs {}",
                        i,
                        j,
                        x,
                        a,
                        b
                    );
                }
            }
        }
    }

    #[test]
    fn monotone_map_variants() {
        // H(x) = 2x: xi = identity, eta' = 2
        let h = MonotoneMap::Expression(expr::mul(Expr::real(2.0), Expr::X));
        let maps = SubstitutionMaps::build(&h.to_expr().unwrap()).unwrap();
        for &t in &[0.0, 0.3, 0.7, 1.0] {
            assert!((maps.xi.eval(t).re - t).abs() < 1e-10);
        }

        // H(x) = x^2 + x: xi by inversion of (x + H(x))/3
        let h2 = MonotoneMap::Expression(expr::add(expr::mul(Expr::X, Expr::X), Expr::X));
        let maps2 = SubstitutionMaps::build(&h2.to_expr().unwrap()).unwrap();
        assert!((maps2.xi.eval(0.0).re).abs() < 1e-10);
        assert!((maps2.xi.eval(1.0).re - 1.0).abs() < 1e-10);
        // interior: bisection oracle on tau(x) = t
        let tau = maps2.tau.clone();
        for &t in &[0.25, 0.5, 0.75] {
            let (mut a, mut b) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if tau.eval(mid).re < t {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            assert!((maps2.xi.eval(t).re - 0.5 * (a + b)).abs() < 1e-9);
        }

        // sample table: strictly increasing required
        assert!(MonotoneMap::Samples(vec![(0.0, 0.0), (0.5, 0.4), (1.0, 0.3)])
            .to_expr()
            .is_err());
        let table = MonotoneMap::Samples(vec![(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)])
            .to_expr()
            .unwrap();
        assert!((table.eval(0.25).re - 0.1).abs() < 1e-12);
        assert!((table.eval(0.75).re - 0.6).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_h_rejected() {
        let h = MonotoneMap::Expression(expr::sub(Expr::X, expr::mul(Expr::X, Expr::X)));
        assert!(fourth_order_measure(
            &h,
            CoefficientFunction::zero(),
            CoefficientFunction::zero()
        )
        .is_err());
    }
}
