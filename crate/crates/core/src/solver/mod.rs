//! Linear IVP integration with merely-integrable coefficients and linear
//! BVP solution via the fundamental matrix plus variation of constants.

pub mod engine;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{self, CMat, CVec, RANK_RTOL};
use crate::operator::{
    assemble_system, boundary_matrix, BoundaryOperator, FirstOrderSystem, FunctionalData,
    OperatorSpec,
};
use crate::quasisystem::{Component, VectorTrajectory};
use engine::{EngineOptions, LinearSystem, OdeSolution};

/// Integration options for the initial-value solver.
#[derive(Debug, Clone)]
pub struct IvpOptions {
    /// Local error tolerance per step.
    pub tol: f64,
    /// Step budget before the integrator gives up.
    pub max_steps: usize,
    /// Additional split points merged with the system's own breakpoints.
    pub breakpoints: Vec<f64>,
    /// Atoms act as jump transfer matrices when set; otherwise they are
    /// rejected.
    pub measure_mode: bool,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            tol: 1e-10,
            max_steps: 2_000_000,
            breakpoints: Vec::new(),
            measure_mode: false,
        }
    }
}

impl IvpOptions {
    pub fn engine(&self) -> EngineOptions {
        EngineOptions {
            tol: self.tol,
            max_steps: self.max_steps,
            extra_breakpoints: self.breakpoints.clone(),
            allow_atoms: self.measure_mode,
        }
    }
}

/// Integrate an assembled first-order system from x = 0 with the given
/// initial vector.
pub fn integrate_ivp(
    system: &FirstOrderSystem,
    y0: &[Complex64],
    opts: &IvpOptions,
) -> Result<VectorTrajectory> {
    let lin = system.into_linear_system()?;
    let sol = Arc::new(engine::integrate_system(
        &lin,
        y0.to_vec(),
        0.0,
        1.0,
        &opts.engine(),
    )?);
    Ok(VectorTrajectory::from_solution(sol))
}

/// Outcome of a boundary-value solve.
pub struct BvpSolution {
    /// The n+m quasi-derivative components.
    pub trajectory: VectorTrajectory,
    /// Dimension of the null space of the boundary matrix.
    pub kernel_dim: usize,
    /// Number of boundary conditions minus the rank (codimension of the
    /// attainable right-hand sides).
    pub defect_dim: usize,
    /// Norm of the boundary-system residual at the returned solution.
    pub residual: f64,
    pub solvable: bool,
    /// Set when the rank decision was tolerance-ambiguous.
    pub conditioning_note: Option<String>,
}

/// The assembled and integrated ingredients of a BVP at one pencil
/// parameter: the combined fundamental matrix / particular solution, and
/// the boundary linear system in the initial vector.
pub struct AssembledBvp {
    pub dim: usize,
    /// Combined solution: state = (Phi flattened row-major, y_p).
    pub solution: Arc<OdeSolution>,
    pub phi_at_one: CMat,
    pub particular_at_one: CVec,
    pub boundary: BoundaryOperator,
    /// Boundary matrix in the initial vector c.
    pub matrix: CMat,
    pub rhs: CVec,
}

impl AssembledBvp {
    /// Full trajectory y(x) = Phi(x) c + y_p(x) for a chosen initial
    /// vector.
    pub fn trajectory(&self, c: &CVec) -> VectorTrajectory {
        let d = self.dim;
        let grid = self.solution.grid().to_vec();
        let mut components = Vec::with_capacity(d);
        for i in 0..d {
            let c = c.clone_owned();
            components.push(Component::Map {
                solution: self.solution.clone(),
                map: Arc::new(move |_x, state: &[Complex64]| {
                    let mut acc = state[d * d + i];
                    for j in 0..d {
                        acc += state[i * d + j] * c[j];
                    }
                    acc
                }),
            });
        }
        VectorTrajectory::new(components, grid)
    }

    /// Row-norm-normalized determinant of the boundary matrix; defined
    /// only when the boundary system is square.
    pub fn normalized_determinant(&self) -> Option<Complex64> {
        if self.matrix.nrows() != self.matrix.ncols() {
            return None;
        }
        let det = linalg::determinant(&self.matrix);
        let mut scale = 1.0;
        for r in 0..self.matrix.nrows() {
            let norm = self.matrix.row(r).norm();
            if norm < 1e-280 {
                return Some(Complex64::ZERO);
            }
            scale *= norm;
        }
        Some(det / Complex64::new(scale, 0.0))
    }
}

/// Build the combined (Phi, y_p) system for an assembled first-order
/// system and integrate it across [0, 1].
pub fn assemble_bvp(
    spec: &OperatorSpec,
    lambda: Complex64,
    data: &FunctionalData,
    opts: &IvpOptions,
) -> Result<AssembledBvp> {
    let system = assemble_system(spec, lambda, data)?;
    let d = system.dim;
    let dim = d * d + d;
    let mut coeff: Vec<Option<_>> = vec![None; dim * dim];
    let mut inhom: Vec<Option<_>> = vec![None; dim];
    for i in 0..d {
        for j in 0..d {
            if let Some(cf) = system.entry(i, j) {
                // Phi'_{ic} = sum_j C_ij Phi_{jc}
                for c in 0..d {
                    coeff[(i * d + c) * dim + (j * d + c)] = Some(cf.clone());
                }
                // y_p' = C y_p + g
                coeff[(d * d + i) * dim + (d * d + j)] = Some(cf.clone());
            }
        }
        inhom[d * d + i] = system.inhom[i].clone();
    }
    let lin = Arc::new(LinearSystem::new(dim, coeff, inhom)?);
    let mut y0 = vec![Complex64::ZERO; dim];
    for i in 0..d {
        y0[i * d + i] = Complex64::ONE;
    }
    let solution = Arc::new(engine::integrate_system(&lin, y0, 0.0, 1.0, &opts.engine())?);
    let last = solution.last();
    let phi_at_one = CMat::from_fn(d, d, |i, j| last[i * d + j]);
    let particular_at_one = CVec::from_fn(d, |i, _| last[d * d + i]);
    let boundary = boundary_matrix(spec);
    let (matrix, rhs) = boundary.linear_system(&phi_at_one, &particular_at_one, &data.boundary_mu);
    Ok(AssembledBvp {
        dim: d,
        solution,
        phi_at_one,
        particular_at_one,
        boundary,
        matrix,
        rhs,
    })
}

/// Solve T Y = F at the given pencil parameter: least squares with rank
/// reveal on the boundary system, minimum-norm representative when the
/// kernel is nontrivial.
pub fn solve_bvp(
    spec: &OperatorSpec,
    lambda: Complex64,
    data: &FunctionalData,
) -> Result<BvpSolution> {
    solve_bvp_with(spec, lambda, data, &IvpOptions::default())
}

pub fn solve_bvp_with(
    spec: &OperatorSpec,
    lambda: Complex64,
    data: &FunctionalData,
    opts: &IvpOptions,
) -> Result<BvpSolution> {
    let bvp = assemble_bvp(spec, lambda, data, opts)?;
    let outcome = linalg::lstsq_min_norm(&bvp.matrix, &bvp.rhs, RANK_RTOL);
    let kernel_dim = bvp.dim - outcome.rank;
    let defect_dim = bvp.matrix.nrows() - outcome.rank;
    let scale = 1.0 + data.norm();
    let solvable = outcome.residual < 1e-8 * scale;
    let conditioning_note = outcome.gap.map(|(kept, dropped)| {
        format!(
            "rank decision ambiguous: kept singular value {:.3e}, dropped {:.3e}",
            kept, dropped
        )
    });
    Ok(BvpSolution {
        trajectory: bvp.trajectory(&outcome.solution),
        kernel_dim,
        defect_dim,
        residual: outcome.residual,
        solvable,
        conditioning_note,
    })
}

/// Summary line `solvable,kernel_dim,defect_dim,residual`.
pub fn solution_summary(sol: &BvpSolution) -> String {
    format!(
        "{},{},{},{}",
        sol.solvable, sol.kernel_dim, sol.defect_dim, sol.residual
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFunction;
    use crate::problems;

    #[test]
    fn integrate_ivp_scalar_exponential() {
        // y' = y via a hand-built one-dimensional "assembled" system
        let sys = FirstOrderSystem {
            dim: 1,
            coeff: vec![Some(CoefficientFunction::one())],
            inhom: vec![None],
            labels: vec!["y^[0]".into()],
            lambda: Complex64::ZERO,
        };
        let y = integrate_ivp(&sys, &[Complex64::ONE], &IvpOptions::default()).unwrap();
        assert!((y.eval(0, 1.0).re - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn integrate_ivp_step_inhomogeneity() {
        let sys = FirstOrderSystem {
            dim: 1,
            coeff: vec![None],
            inhom: vec![Some(CoefficientFunction::step_at(0.5))],
            labels: vec!["y^[0]".into()],
            lambda: Complex64::ZERO,
        };
        let y = integrate_ivp(&sys, &[Complex64::ZERO], &IvpOptions::default()).unwrap();
        assert!((y.eval(0, 1.0).re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn beam_trivial_system_forced() {
        // beam with p = 1, q = r = 0, f = 24: row y3' = -f integrates to -24
        let spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let data = FunctionalData::from_f0(2, CoefficientFunction::constant(24.0));
        let sys = assemble_system(&spec, Complex64::ZERO, &data).unwrap();
        let y = integrate_ivp(&sys, &[Complex64::ZERO; 4], &IvpOptions::default()).unwrap();
        assert!((y.eval(3, 1.0).re + 24.0).abs() < 1e-9);
    }

    #[test]
    fn forced_beam_solution_matches_polynomial() {
        let spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let data = FunctionalData::from_f0(2, CoefficientFunction::constant(24.0));
        let sol = solve_bvp(&spec, Complex64::ZERO, &data).unwrap();
        assert!(sol.solvable);
        assert_eq!(sol.kernel_dim, 0);
        assert_eq!(sol.defect_dim, 0);
        // y = x^2 (1-x)^2
        assert!((sol.trajectory.eval(0, 0.5).re - 0.0625).abs() < 1e-9);
        for &x in &[0.1, 0.3, 0.7] {
            let expect = x * x * (1.0 - x) * (1.0 - x);
            assert!((sol.trajectory.eval(0, x).re - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn second_order_dirichlet_forced() {
        let spec = problems::second_order_dirichlet(CoefficientFunction::zero()).unwrap();
        let data = FunctionalData::from_f0(1, CoefficientFunction::one());
        let sol = solve_bvp(&spec, Complex64::ZERO, &data).unwrap();
        assert!(sol.solvable);
        assert!((sol.trajectory.eval(0, 0.5).re - 0.125).abs() < 1e-9);
    }

    #[test]
    fn periodic_third_order_zero_mean_forcing() {
        let spec = problems::third_order_periodic(
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let data = FunctionalData::from_f0(1, CoefficientFunction::parse("cos(2*pi*x)").unwrap());
        let sol = solve_bvp(&spec, Complex64::ZERO, &data).unwrap();
        assert!(sol.solvable);
        assert_eq!(sol.kernel_dim, 1);
        assert_eq!(sol.defect_dim, 1);
    }
}
