//! Krein string with point masses: the Dirichlet problem for
//! -(d/dG)(dy/dH) with G = N o H reduces, through the embedding
//! y(x) = u(H(x)), to the string problem -u'' = lambda u dN on [0, 1].
//!
//! The embedding is in general not injective (H may have flats), so this
//! family bypasses the generic pencil scanner: its spectrum comes from the
//! scalar transfer-matrix determinant u(1; lambda), with atoms of N acting
//! as derivative jumps u' -> u' - lambda w u.

use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::CoefficientFunction;
use crate::error::{Error, Result};
use crate::problems::MonotoneMap;
use crate::quasisystem::VectorTrajectory;
use crate::solver::engine::{self, EngineOptions, LinearSystem};
use crate::spectral::SectorEstimate;

/// Distribution data of a nonnegative measure N with N(0) = 0: an
/// absolutely continuous density plus point masses.
#[derive(Clone)]
pub struct MeasureFunction {
    pub density: CoefficientFunction,
    /// (location, weight), weights positive, locations strictly inside
    /// (0, 1).
    pub atoms: Vec<(f64, f64)>,
}

impl MeasureFunction {
    pub fn new(density: CoefficientFunction, mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut details = Vec::new();
        for &(loc, w) in &atoms {
            if !(loc > 0.0 && loc < 1.0) {
                details.push(format!("atom location {} not strictly inside (0, 1)", loc));
            }
            if w <= 0.0 {
                details.push(format!("atom weight {} not positive", w));
            }
        }
        for k in 0..256 {
            let x = (k as f64 + 0.5) / 256.0;
            let v = density.eval_raw(x);
            if v.im.abs() > 1e-12 || v.re < -1e-12 {
                details.push(format!("density is not nonnegative near x = {:.4}", x));
                break;
            }
        }
        if !details.is_empty() {
            return Err(Error::invalid("measure function", details));
        }
        Ok(MeasureFunction { density, atoms })
    }

    pub fn lebesgue() -> Self {
        MeasureFunction {
            density: CoefficientFunction::one(),
            atoms: Vec::new(),
        }
    }

    pub fn atoms_only(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(CoefficientFunction::zero(), atoms)
    }

    pub fn total_mass(&self) -> f64 {
        let ac = self
            .density
            .integrate(0.0, 1.0)
            .map(|v| v.re)
            .unwrap_or(0.0);
        ac + self.atoms.iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// Measure with every atom weight and the density scaled by c.
    pub fn scaled(&self, c: f64) -> MeasureFunction {
        MeasureFunction {
            density: self.density.scale(Complex64::new(c, 0.0)),
            atoms: self.atoms.iter().map(|&(l, w)| (l, c * w)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KreinScanOptions {
    pub grid: usize,
    pub root_tol: f64,
    pub dedup_rtol: f64,
    pub ivp_tol: f64,
}

impl Default for KreinScanOptions {
    fn default() -> Self {
        KreinScanOptions {
            grid: 400,
            root_tol: 1e-10,
            dedup_rtol: 1e-10,
            ivp_tol: 1e-12,
        }
    }
}

/// Dedicated spectral solver for the string problem.
pub struct KreinSolver {
    measure: MeasureFunction,
    /// The outer distribution function H; kept for transporting
    /// eigenfunctions back as u(H(x)).
    h_expr: crate::coeffs::Expr,
}

impl KreinSolver {
    pub fn new(h: &MonotoneMap, measure: MeasureFunction) -> Result<Self> {
        let h_expr = h.to_expr()?;
        let h0 = h_expr.eval(0.0).re;
        let h1 = h_expr.eval(1.0).re;
        if h0.abs() > 1e-10 || (h1 - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "krein distribution function",
                vec![format!("H(0) = {}, H(1) = {}; expected 0 and 1", h0, h1)],
            ));
        }
        let mut prev = h0;
        for k in 1..=1024 {
            let v = h_expr.eval(k as f64 / 1024.0).re;
            if v < prev - 1e-12 {
                return Err(Error::invalid(
                    "krein distribution function",
                    vec!["H is not nondecreasing".into()],
                ));
            }
            prev = v;
        }
        Ok(KreinSolver { measure, h_expr })
    }

    pub fn measure(&self) -> &MeasureFunction {
        &self.measure
    }

    pub fn h(&self) -> &crate::coeffs::Expr {
        &self.h_expr
    }

    /// The string system at lambda: u' = v, v' = -lambda rho u with atom
    /// jumps v -> v - lambda w u.
    fn system(&self, lambda: Complex64) -> Result<Arc<LinearSystem>> {
        let minus_lambda = -lambda;
        let mut drive = self.measure.density.scale(minus_lambda);
        if !self.measure.atoms.is_empty() {
            drive = drive.with_atoms(
                self.measure
                    .atoms
                    .iter()
                    .map(|&(loc, w)| (loc, minus_lambda * w))
                    .collect(),
            )?;
        }
        let coeff = vec![
            None,
            Some(CoefficientFunction::one()),
            Some(drive),
            None,
        ];
        Ok(Arc::new(LinearSystem::new(2, coeff, vec![None, None])?))
    }

    fn shoot(&self, lambda: Complex64, tol: f64) -> Result<engine::OdeSolution> {
        let sys = self.system(lambda)?;
        let opts = EngineOptions {
            tol,
            allow_atoms: true,
            ..EngineOptions::default()
        };
        engine::integrate_system(&sys, vec![Complex64::ZERO, Complex64::ONE], 0.0, 1.0, &opts)
    }

    /// Scalar boundary determinant u(1; lambda) from the Dirichlet shot
    /// u(0) = 0, u'(0) = 1.
    pub fn char_value(&self, lambda: f64) -> Result<f64> {
        self.char_value_with(lambda, 1e-12)
    }

    pub fn char_value_with(&self, lambda: f64, tol: f64) -> Result<f64> {
        let sol = self.shoot(Complex64::new(lambda, 0.0), tol)?;
        Ok(sol.last()[0].re)
    }

    /// Eigenvalues in the window, by sign-change bracketing and secant
    /// polish on u(1; lambda). Returns (lambda, |u(1)|) pairs sorted
    /// ascending.
    pub fn find_eigenvalues(&self, lo: f64, hi: f64, opts: &KreinScanOptions) -> Result<Vec<(f64, f64)>> {
        if self.measure.total_mass() <= 1e-14 {
            return Err(Error::Unsupported(
                "measure has zero total mass: the string carries no spectrum".into(),
            ));
        }
        let n = opts.grid.max(3);
        let spacing = (hi - lo) / (n as f64 - 1.0);
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let l = lo + spacing * k as f64;
            values.push((l, self.char_value_with(l, opts.ivp_tol)?));
        }
        let mut roots: Vec<(f64, f64)> = Vec::new();
        for w in values.windows(2) {
            let (l0, d0) = w[0];
            let (l1, d1) = w[1];
            if d0 == 0.0 {
                roots.push((l0, 0.0));
            } else if d0 * d1 < 0.0 {
                if let Some(root) = self.polish(l0, l1, opts) {
                    roots.push(root);
                }
            }
        }
        if let Some(&(l, d)) = values.last() {
            if d == 0.0 {
                roots.push((l, 0.0));
            }
        }
        roots.retain(|&(_, r)| r < opts.root_tol);
        roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        roots.dedup_by(|a, b| (a.0 - b.0).abs() <= opts.dedup_rtol * b.0.abs().max(1.0));
        Ok(roots)
    }

    fn polish(&self, mut l0: f64, mut l1: f64, opts: &KreinScanOptions) -> Option<(f64, f64)> {
        let mut d0 = self.char_value_with(l0, opts.ivp_tol).ok()?;
        let mut d1 = self.char_value_with(l1, opts.ivp_tol).ok()?;
        let mut best = if d0.abs() < d1.abs() { (l0, d0.abs()) } else { (l1, d1.abs()) };
        for _ in 0..100 {
            if d1 == d0 {
                break;
            }
            let l2 = l1 - d1 * (l1 - l0) / (d1 - d0);
            if !l2.is_finite() {
                break;
            }
            let d2 = self.char_value_with(l2, opts.ivp_tol).ok()?;
            l0 = l1;
            d0 = d1;
            l1 = l2;
            d1 = d2;
            if d2.abs() < best.1 {
                best = (l2, d2.abs());
            }
            if d2.abs() < 1e-15 || (l1 - l0).abs() < 1e-15 * (1.0 + l1.abs()) {
                break;
            }
        }
        Some(best)
    }

    /// Eigenfunction (u, u') at an eigenvalue, normalized like the generic
    /// path: largest-|.| sample of u equals 1.
    pub fn eigenfunction(&self, lambda: f64) -> Result<VectorTrajectory> {
        let residual = self.char_value(lambda)?.abs();
        if residual > 1e-6 {
            return Err(Error::NotAnEigenvalue {
                lambda: Complex64::new(lambda, 0.0),
            });
        }
        let sol = Arc::new(self.shoot(Complex64::new(lambda, 0.0), 1e-12)?);
        let traj = VectorTrajectory::from_solution(sol);
        let (_, best) = traj.peak(0);
        Ok(traj.scaled(best.inv()))
    }

    /// Positivity diagnostic: the quadratic form behind this family is the
    /// Dirichlet integral, so its numerical range is sampled through the
    /// second-order Dirichlet spec.
    pub fn positivity_sector(&self, trials: usize) -> Result<SectorEstimate> {
        let spec = crate::problems::second_order_dirichlet(CoefficientFunction::zero())?;
        crate::spectral::numerical_range_sector(&spec, trials)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Expr;

    fn identity_map() -> MonotoneMap {
        MonotoneMap::Expression(Expr::X)
    }

    #[test]
    fn classical_string_eigenvalues() {
        let solver = KreinSolver::new(&identity_map(), MeasureFunction::lebesgue()).unwrap();
        let roots = solver
            .find_eigenvalues(1.0, 120.0, &KreinScanOptions::default())
            .unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(roots.len(), 3);
        for (k, &(l, _)) in roots.iter().enumerate() {
            let expect = pi2 * ((k + 1) as f64).powi(2);
            assert!((l - expect).abs() < 1e-8 * expect, "{} vs {}", l, expect);
        }
    }

    #[test]
    fn single_atom_eigenvalue_is_four() {
        let measure = MeasureFunction::atoms_only(vec![(0.5, 1.0)]).unwrap();
        let solver = KreinSolver::new(&identity_map(), measure).unwrap();
        // u(1; lambda) = 1 - lambda / 4 vanishes only at 4
        let roots = solver
            .find_eigenvalues(0.5, 50.0, &KreinScanOptions::default())
            .unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].0 - 4.0).abs() < 1e-10);
    }

    #[test]
    fn zero_mass_measure_has_no_spectrum() {
        let measure = MeasureFunction::new(CoefficientFunction::zero(), vec![]).unwrap();
        let solver = KreinSolver::new(&identity_map(), measure).unwrap();
        assert!(solver
            .find_eigenvalues(0.0, 10.0, &KreinScanOptions::default())
            .is_err());
    }

    #[test]
    fn rejects_bad_distribution_function() {
        // H(1) != 1
        let h = MonotoneMap::Expression(crate::coeffs::expr::mul(Expr::real(2.0), Expr::X));
        assert!(KreinSolver::new(&h, MeasureFunction::lebesgue()).is_err());
    }
}
