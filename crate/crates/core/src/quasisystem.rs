//! Quasi-derivative coefficient systems, their fundamental matrices, and
//! reconstruction of vector functions from the top component.
//!
//! A system of order n is the lower-Hessenberg table A = {A_ij : j <= i+1}
//! driving Y_i' = sum_{j<=i+1} A_ij Y_j for i < n. The fundamental matrix
//! M_n solves the truncated n x n part with identity initial data, and any
//! trajectory is recovered from its top component by variation of
//! constants through M_n and its pointwise inverse.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::CoefficientFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::solver::engine::{self, EngineOptions, LinearSystem, OdeSolution};

/// Condition-number cap beyond which a sampled matrix counts as
/// numerically singular.
pub const CONDITION_CAP: f64 = 1e12;

/// The coefficient table of a quasi-derivative space.
#[derive(Clone)]
pub struct CoefficientSystem {
    n: usize,
    entries: BTreeMap<(usize, usize), CoefficientFunction>,
}

/// Report-valued validation outcome.
#[derive(Debug, Default, Clone)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// Non-fatal notes (e.g. formula-literal mode for complex tables).
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self, what: &str) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::invalid(what, self.violations))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            writeln!(f, "valid")?;
        }
        for v in &self.violations {
            writeln!(f, "violation: {}", v)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {}", n)?;
        }
        Ok(())
    }
}

impl CoefficientSystem {
    /// Build from explicit entries; shape problems are reported by
    /// [`validate_system`], not rejected here.
    pub fn new(
        n: usize,
        entries: impl IntoIterator<Item = ((usize, usize), CoefficientFunction)>,
    ) -> Self {
        CoefficientSystem {
            n,
            entries: entries.into_iter().collect(),
        }
    }

    /// The classical Sobolev table: A_{i,i+1} = 1, everything else absent.
    pub fn sobolev(n: usize) -> Self {
        Self::new(
            n,
            (0..n).map(|i| ((i, i + 1), CoefficientFunction::one())),
        )
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&CoefficientFunction> {
        self.entries.get(&(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &CoefficientFunction)> {
        self.entries.iter()
    }

    /// The weight A_{n-1,n} every norm and reduction refers to.
    pub fn top_weight(&self) -> CoefficientFunction {
        self.entry(self.n - 1, self.n)
            .cloned()
            .unwrap_or_else(CoefficientFunction::zero)
    }
}

/// Check the lower-Hessenberg shape, the strict-monotonicity hypothesis on
/// the superdiagonal primitives, and the absence of atoms.
pub fn validate_system(a: &CoefficientSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = a.order();
    if n == 0 {
        report.violations.push("order must be positive".into());
        return report;
    }
    for (&(i, j), cf) in a.entries() {
        if i >= n {
            report
                .violations
                .push(format!("entry ({}, {}) has row index >= order {}", i, j, n));
        }
        if j > i + 1 {
            report.violations.push(format!(
                "entry ({}, {}) violates the lower-Hessenberg shape (j > i+1)",
                i, j
            ));
        }
        if cf.has_atoms() {
            report
                .violations
                .push(format!("entry ({}, {}) carries atoms", i, j));
        }
        let has_im = cf
            .pieces()
            .iter()
            .any(|p| (0..8).any(|k| p.expr.eval(p.lo + (p.hi - p.lo) * (k as f64 + 0.5) / 8.0).im != 0.0));
        if has_im {
            report
                .notes
                .push(format!("entry ({}, {}) is complex-valued", i, j));
        }
    }
    for i in 0..n {
        match a.entry(i, i + 1) {
            None => report.violations.push(format!(
                "superdiagonal entry ({}, {}) is absent; its primitive cannot be strictly monotone",
                i,
                i + 1
            )),
            Some(cf) => {
                let (ok, witness) = cf.is_strictly_monotone_primitive();
                if !ok {
                    let w = witness
                        .map(|(lo, hi)| format!(" (|A| vanishes on [{:.6}, {:.6}])", lo, hi))
                        .unwrap_or_default();
                    report.violations.push(format!(
                        "primitive of |A_({}, {})| is not strictly monotone{}",
                        i,
                        i + 1,
                        w
                    ));
                }
            }
        }
    }
    report
}

/// Matrix trajectory M_n(x) with identity initial data; sampled on the
/// integrator grid and re-integrated (never polynomially interpolated)
/// between samples.
pub struct FundamentalMatrix {
    n: usize,
    backing: Backing,
    /// Largest condition number seen across grid samples.
    pub max_condition: f64,
}

enum Backing {
    Ode(Arc<OdeSolution>),
    /// Pointwise inverse of the parent on the same grid.
    Inverse(Box<FundamentalMatrix>),
}

impl FundamentalMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Vec<f64> {
        match &self.backing {
            Backing::Ode(sol) => sol.grid().to_vec(),
            Backing::Inverse(parent) => parent.grid(),
        }
    }

    pub fn eval(&self, x: f64) -> CMat {
        match &self.backing {
            Backing::Ode(sol) => state_to_matrix(self.n, &sol.eval(x)),
            Backing::Inverse(parent) => {
                let m = parent.eval(x);
                linalg::invert(&m).expect("conditioning checked at construction")
            }
        }
    }

    pub fn at_zero(&self) -> CMat {
        match &self.backing {
            Backing::Ode(sol) => state_to_matrix(self.n, sol.first()),
            Backing::Inverse(_) => self.eval(0.0),
        }
    }

    pub fn at_one(&self) -> CMat {
        match &self.backing {
            Backing::Ode(sol) => state_to_matrix(self.n, sol.last()),
            Backing::Inverse(_) => self.eval(1.0),
        }
    }
}

fn state_to_matrix(n: usize, state: &[Complex64]) -> CMat {
    CMat::from_fn(n, n, |i, j| state[i * n + j])
}

/// The truncated n x n coefficient table (couplings to Y_n dropped).
fn truncated_matrix_system(a: &CoefficientSystem) -> Result<Arc<LinearSystem>> {
    let n = a.order();
    let dim = n * n;
    let mut coeff: Vec<Option<CoefficientFunction>> = vec![None; dim * dim];
    for i in 0..n {
        for k in 0..n.min(i + 2) {
            if let Some(cf) = a.entry(i, k) {
                for j in 0..n {
                    coeff[(i * n + j) * dim + (k * n + j)] = Some(cf.clone());
                }
            }
        }
    }
    Ok(Arc::new(LinearSystem::new(dim, coeff, vec![None; dim])?))
}

/// Solve the matrix initial-value problem for M_n.
pub fn fundamental_matrix(a: &CoefficientSystem) -> Result<FundamentalMatrix> {
    fundamental_matrix_with(a, &EngineOptions::default())
}

pub fn fundamental_matrix_with(
    a: &CoefficientSystem,
    opts: &EngineOptions,
) -> Result<FundamentalMatrix> {
    validate_system(a).into_result("coefficient system")?;
    let n = a.order();
    let sys = truncated_matrix_system(a)?;
    let mut y0 = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        y0[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let sol = Arc::new(engine::integrate_system(&sys, y0, 0.0, 1.0, opts)?);
    let mut max_cond: f64 = 1.0;
    for state in sol.states() {
        let cond = linalg::condition_number(&state_to_matrix(n, state));
        max_cond = max_cond.max(cond);
        if cond > CONDITION_CAP {
            return Err(Error::Conditioning {
                message: "fundamental matrix numerically singular on the grid".into(),
                cond,
            });
        }
    }
    Ok(FundamentalMatrix {
        n,
        backing: Backing::Ode(sol),
        max_condition: max_cond,
    })
}

/// Pointwise inverse on the same grid.
pub fn invert_fundamental(m: &FundamentalMatrix) -> Result<FundamentalMatrix> {
    // conditioning was policed when the parent was built; re-police here
    // for inverses of inverses
    let cond = linalg::condition_number(&m.at_one());
    if cond > CONDITION_CAP {
        return Err(Error::Conditioning {
            message: "fundamental matrix numerically singular".into(),
            cond,
        });
    }
    Ok(FundamentalMatrix {
        n: m.n,
        backing: Backing::Inverse(Box::new(clone_fm(m))),
        max_condition: m.max_condition,
    })
}

fn clone_fm(m: &FundamentalMatrix) -> FundamentalMatrix {
    FundamentalMatrix {
        n: m.n,
        max_condition: m.max_condition,
        backing: match &m.backing {
            Backing::Ode(sol) => Backing::Ode(sol.clone()),
            Backing::Inverse(p) => Backing::Inverse(Box::new(clone_fm(p))),
        },
    }
}

/// One component of a vector trajectory.
#[derive(Clone)]
pub enum Component {
    /// A coordinate of an ODE solution state.
    Ode { solution: Arc<OdeSolution>, index: usize },
    /// A closed-form function.
    Closed(CoefficientFunction),
    /// A pointwise map of an ODE solution state (used for reconstructed
    /// and recovered components).
    Map {
        solution: Arc<OdeSolution>,
        map: Arc<dyn Fn(f64, &[Complex64]) -> Complex64 + Send + Sync>,
    },
    /// An arbitrary pointwise function of x.
    Func(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

/// Sampled vector function on [0, 1] with labelled quasi-derivative
/// components; values between grid points come from re-integration or the
/// closed form, never polynomial interpolation.
#[derive(Clone)]
pub struct VectorTrajectory {
    components: Vec<Component>,
    grid: Vec<f64>,
    labels: Vec<String>,
}

impl VectorTrajectory {
    pub fn new(components: Vec<Component>, grid: Vec<f64>) -> Self {
        let labels = (0..components.len()).map(|i| format!("y^[{}]", i)).collect();
        VectorTrajectory {
            components,
            grid,
            labels,
        }
    }

    /// All coordinates of an ODE solution, in order.
    pub fn from_solution(sol: Arc<OdeSolution>) -> Self {
        let dim = sol.dim();
        let grid = sol.grid().to_vec();
        Self::new(
            (0..dim)
                .map(|index| Component::Ode {
                    solution: sol.clone(),
                    index,
                })
                .collect(),
            grid,
        )
    }

    /// ODE coordinates followed by a closed-form top component.
    pub fn from_solution_with_top(sol: Arc<OdeSolution>, top: CoefficientFunction) -> Self {
        let dim = sol.dim();
        let grid = sol.grid().to_vec();
        let mut components: Vec<Component> = (0..dim)
            .map(|index| Component::Ode {
                solution: sol.clone(),
                index,
            })
            .collect();
        components.push(Component::Closed(top));
        Self::new(components, grid)
    }

    /// Purely closed-form trajectory on a default export grid.
    pub fn from_closed(components: Vec<CoefficientFunction>) -> Self {
        let grid: Vec<f64> = (0..=256).map(|k| k as f64 / 256.0).collect();
        Self::new(components.into_iter().map(Component::Closed).collect(), grid)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn component(&self, i: usize) -> &Component {
        &self.components[i]
    }

    pub fn eval(&self, i: usize, x: f64) -> Complex64 {
        match &self.components[i] {
            Component::Ode { solution, index } => solution.eval(x)[*index],
            Component::Closed(cf) => cf.eval_raw(x),
            Component::Map { solution, map } => map(x, &solution.eval(x)),
            Component::Func(f) => f(x),
        }
    }

    pub fn eval_all(&self, x: f64) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.eval(i, x)).collect()
    }

    /// Sup norm over the given components, measured on the stored grid.
    pub fn sup_norm(&self, components: std::ops::Range<usize>) -> f64 {
        let mut m: f64 = 0.0;
        for &x in &self.grid {
            for i in components.clone() {
                m = m.max(self.eval(i, x).norm());
            }
        }
        m
    }

    /// Weighted norm (∫ |w| |Y_i|^s dx)^(1/s) of one component.
    pub fn weighted_s_norm(
        &self,
        weight: &CoefficientFunction,
        s: f64,
        component: usize,
    ) -> Result<f64> {
        let f = |x: f64| {
            Complex64::new(
                weight.eval_raw(x).norm() * self.eval(component, x).norm().powf(s),
                0.0,
            )
        };
        let v = crate::coeffs::quad::integrate(
            f,
            0.0,
            1.0,
            weight.breakpoints(),
            crate::coeffs::QuadOptions {
                abs_tol: 1e-10,
                ..Default::default()
            },
        )?;
        Ok(v.re.max(0.0).powf(1.0 / s))
    }

    /// CSV export: header `x, re(y0), im(y0), ...` and one row per grid
    /// point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for i in 0..self.len() {
            out.push_str(&format!(", re(y{}), im(y{})", i, i));
        }
        out.push('\n');
        for &x in &self.grid {
            out.push_str(&format!("{}", x));
            for i in 0..self.len() {
                let v = self.eval(i, x);
                out.push_str(&format!(", {}, {}", v.re, v.im));
            }
            out.push('\n');
        }
        out
    }

    /// Location and value of the largest-magnitude point of a component,
    /// from a dense uniform scan refined by a parabolic fit of |y|.
    pub fn peak(&self, component: usize) -> (f64, Complex64) {
        const N: usize = 2048;
        let mut best_k = 0usize;
        let mut best = self.eval(component, 0.0);
        for k in 1..=N {
            let x = k as f64 / N as f64;
            let v = self.eval(component, x);
            if v.norm() > best.norm() {
                best_k = k;
                best = v;
            }
        }
        let h = 1.0 / N as f64;
        let x0 = best_k as f64 * h;
        if best_k == 0 || best_k == N {
            return (x0, best);
        }
        let fm = self.eval(component, x0 - h).norm();
        let fc = best.norm();
        let fp = self.eval(component, x0 + h).norm();
        let denom = fm - 2.0 * fc + fp;
        if denom.abs() < 1e-300 {
            return (x0, best);
        }
        let x_ref = (x0 + 0.5 * h * (fm - fp) / denom).clamp(0.0, 1.0);
        let v = self.eval(component, x_ref);
        if v.norm() >= fc {
            (x_ref, v)
        } else {
            (x0, best)
        }
    }

    /// Rescale every component by a constant.
    pub fn scaled(&self, c: Complex64) -> VectorTrajectory {
        let components = self
            .components
            .iter()
            .map(|comp| match comp {
                Component::Ode { solution, index } => {
                    let solution = solution.clone();
                    let index = *index;
                    Component::Map {
                        solution: solution.clone(),
                        map: Arc::new(move |_x, state| state[index] * c),
                    }
                }
                Component::Closed(cf) => Component::Closed(cf.scale(c)),
                Component::Map { solution, map } => {
                    let map = map.clone();
                    Component::Map {
                        solution: solution.clone(),
                        map: Arc::new(move |x, state| map(x, state) * c),
                    }
                }
                Component::Func(f) => {
                    let f = f.clone();
                    Component::Func(Arc::new(move |x| f(x) * c))
                }
            })
            .collect();
        VectorTrajectory {
            components,
            grid: self.grid.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Boundary-value vector (Y_0(0), ..., Y_{n-1}(0), Y_0(1), ..., Y_{n-1}(1)).
pub fn boundary_trace(y: &VectorTrajectory, n: usize) -> Vec<Complex64> {
    assert!(y.len() >= n, "trajectory has too few components");
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(y.eval(i, 0.0));
    }
    for i in 0..n {
        out.push(y.eval(i, 1.0));
    }
    out
}

/// Recover components Y_0..Y_{n-1} from the top component by variation of
/// constants through M_n and its inverse, then append the top sample.
///
/// The integral term is accumulated as an auxiliary ODE coordinate w with
/// w_j' = A_{n-1,n} (M_n^{-1})_{j,n-1} Y_n, alongside M_n and M_n^{-1}
/// themselves (the inverse satisfies N' = -N A).
pub fn reconstruct(
    a: &CoefficientSystem,
    init: &[Complex64],
    top: &CoefficientFunction,
) -> Result<VectorTrajectory> {
    reconstruct_with(a, init, top, &EngineOptions::default())
}

pub fn reconstruct_with(
    a: &CoefficientSystem,
    init: &[Complex64],
    top: &CoefficientFunction,
    opts: &EngineOptions,
) -> Result<VectorTrajectory> {
    validate_system(a).into_result("coefficient system")?;
    let n = a.order();
    assert_eq!(init.len(), n, "init vector must have length n");

    // state layout: M (n^2) | N = M^{-1} (n^2) | w (n)
    let nn = n * n;
    let dim = 2 * nn + n;
    let mut coeff: Vec<Option<CoefficientFunction>> = vec![None; dim * dim];
    // M_{ij}' = sum_k A_{ik} M_{kj}
    for i in 0..n {
        for k in 0..n.min(i + 2) {
            if let Some(cf) = a.entry(i, k) {
                for j in 0..n {
                    coeff[(i * n + j) * dim + (k * n + j)] = Some(cf.clone());
                }
            }
        }
    }
    // N_{ij}' = -sum_k N_{ik} A_{kj}
    for k in 0..n {
        for j in 0..n.min(k + 2) {
            if let Some(cf) = a.entry(k, j) {
                let neg = cf.neg();
                for i in 0..n {
                    coeff[(nn + i * n + j) * dim + (nn + i * n + k)] = Some(neg.clone());
                }
            }
        }
    }
    // w_j' = (A_{n-1,n} * Y_n) N_{j,n-1}
    let drive = a.top_weight().mul(top);
    for j in 0..n {
        coeff[(2 * nn + j) * dim + (nn + j * n + (n - 1))] = Some(drive.clone());
    }
    let sys = Arc::new(LinearSystem::new(dim, coeff, vec![None; dim])?);
    let mut y0 = vec![Complex64::ZERO; dim];
    for i in 0..n {
        y0[i * n + i] = Complex64::new(1.0, 0.0);
        y0[nn + i * n + i] = Complex64::new(1.0, 0.0);
    }
    let sol = Arc::new(engine::integrate_system(&sys, y0, 0.0, 1.0, opts)?);

    let init_owned: Vec<Complex64> = init.to_vec();
    let grid = sol.grid().to_vec();
    let mut components = Vec::with_capacity(n + 1);
    for i in 0..n {
        let init_c = init_owned.clone();
        components.push(Component::Map {
            solution: sol.clone(),
            map: Arc::new(move |_x, state: &[Complex64]| {
                let mut acc = Complex64::ZERO;
                for (j, init_j) in init_c.iter().enumerate() {
                    let m_ij = state[i * n + j];
                    let w_j = state[2 * n * n + j];
                    acc += m_ij * (init_j + w_j);
                }
                acc
            }),
        });
    }
    components.push(Component::Closed(top.clone()));
    Ok(VectorTrajectory::new(components, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFunction;

    #[test]
    fn sobolev_system_is_valid() {
        let a = CoefficientSystem::sobolev(3);
        assert!(validate_system(&a).is_valid());
    }

    #[test]
    fn shape_violation_reported() {
        let a = CoefficientSystem::new(
            2,
            vec![
                ((0, 2), CoefficientFunction::one()),
                ((0, 1), CoefficientFunction::one()),
                ((1, 2), CoefficientFunction::one()),
            ],
        );
        let report = validate_system(&a);
        assert!(!report.is_valid());
        assert!(report.violations[0].contains("lower-Hessenberg"));
    }

    #[test]
    fn monotonicity_violation_reported() {
        let a = CoefficientSystem::new(
            1,
            vec![((0, 1), CoefficientFunction::step_at(0.5))],
        );
        let report = validate_system(&a);
        assert!(!report.is_valid());
        assert!(report.violations[0].contains("strictly monotone"));
    }

    #[test]
    fn fundamental_matrix_of_trivial_system() {
        // n = 1, only A_{0,1} present: the truncated 1x1 matrix is zero
        let a = CoefficientSystem::new(1, vec![((0, 1), CoefficientFunction::one())]);
        let m = fundamental_matrix(&a).unwrap();
        let v = m.at_one();
        assert!((v[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fundamental_matrix_of_sobolev_2() {
        let a = CoefficientSystem::sobolev(2);
        let m = fundamental_matrix(&a).unwrap();
        let v = m.at_one();
        // M_2(x) = [[1, x], [0, 1]]
        assert!((v[(0, 0)].re - 1.0).abs() < 1e-10);
        assert!((v[(0, 1)].re - 1.0).abs() < 1e-10);
        assert!(v[(1, 0)].norm() < 1e-10);
        assert!((v[(1, 1)].re - 1.0).abs() < 1e-10);

        let inv = invert_fundamental(&m).unwrap();
        let w = inv.eval(1.0);
        assert!((w[(0, 1)].re + 1.0).abs() < 1e-9);
    }

    #[test]
    fn fundamental_matrix_exponential() {
        let a = CoefficientSystem::new(
            1,
            vec![
                ((0, 0), CoefficientFunction::one()),
                ((0, 1), CoefficientFunction::one()),
            ],
        );
        let m = fundamental_matrix(&a).unwrap();
        assert!((m.at_one()[(0, 0)].re - 1f64.exp()).abs() < 1e-9);
        let inv = invert_fundamental(&m).unwrap();
        assert!((inv.eval(1.0)[(0, 0)].re - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn reconstruct_simple_cases() {
        // n = 1 Sobolev, Y_0' = Y_1 = 2x, init 0 -> Y_0(x) = x^2
        let a = CoefficientSystem::new(1, vec![((0, 1), CoefficientFunction::one())]);
        let top = CoefficientFunction::parse("2*x").unwrap();
        let y = reconstruct(&a, &[Complex64::ZERO], &top).unwrap();
        assert!((y.eval(0, 1.0).re - 1.0).abs() < 1e-9);
        assert_eq!(y.len(), 2);

        // n = 2 Sobolev, top = 1 -> Y_0 = x^2/2
        let a2 = CoefficientSystem::sobolev(2);
        let y2 = reconstruct(&a2, &[Complex64::ZERO, Complex64::ZERO], &CoefficientFunction::one())
            .unwrap();
        assert!((y2.eval(0, 1.0).re - 0.5).abs() < 1e-9);

        // n = 1, A_00 = A_01 = 1, top = 1: Y_0' = Y_0 + 1 -> e - 1
        let a3 = CoefficientSystem::new(
            1,
            vec![
                ((0, 0), CoefficientFunction::one()),
                ((0, 1), CoefficientFunction::one()),
            ],
        );
        let y3 = reconstruct(&a3, &[Complex64::ZERO], &CoefficientFunction::one()).unwrap();
        assert!((y3.eval(0, 1.0).re - (1f64.exp() - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn boundary_trace_semantics() {
        // Y_0 = x, Y_1 = 1
        let y = VectorTrajectory::from_closed(vec![
            CoefficientFunction::parse("x").unwrap(),
            CoefficientFunction::one(),
        ]);
        let tr = boundary_trace(&y, 2);
        let expect = [0.0, 1.0, 1.0, 1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((tr[k].re - e).abs() < 1e-14);
        }

        // clamped polynomial: all four trace entries vanish
        let y0 = CoefficientFunction::parse("x^2*(1-x)^2").unwrap();
        let y1 = CoefficientFunction::parse("2*x*(1-x)^2 - 2*x^2*(1-x)").unwrap();
        let tr = boundary_trace(&VectorTrajectory::from_closed(vec![y0, y1]), 2);
        assert!(tr.iter().all(|v| v.norm() < 1e-14));
    }
}
