//! The operator T mapping an order-n trial space into functionals on an
//! order-m test space, its Fredholm index, its bilinear (weak) action, and
//! its reduction to an (n+m)-dimensional first-order system with boundary
//! conditions.

pub mod sample;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::{quad, CoefficientFunction, QuadOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, RANK_RTOL};
use crate::quasisystem::{
    boundary_trace, validate_system, CoefficientSystem, Component, ValidationReport,
    VectorTrajectory,
};
use crate::solver::engine::LinearSystem;

/// One coefficient slot p_ij(x, lambda) = p0_ij(x) + lambda * p1_ij(x).
#[derive(Clone)]
pub struct PEntry {
    pub base: CoefficientFunction,
    pub lambda_part: Option<CoefficientFunction>,
}

impl PEntry {
    pub fn of(base: CoefficientFunction) -> Self {
        PEntry {
            base,
            lambda_part: None,
        }
    }

    pub fn with_lambda(base: CoefficientFunction, lambda_part: CoefficientFunction) -> Self {
        PEntry {
            base,
            lambda_part: Some(lambda_part),
        }
    }

    /// Evaluate the slot at a fixed pencil parameter.
    pub fn at(&self, lambda: Complex64) -> CoefficientFunction {
        match &self.lambda_part {
            None => self.base.clone(),
            Some(lp) => self.base.add(&lp.scale(lambda)),
        }
    }
}

/// Full description of the operator: orders, exponent, the two coefficient
/// systems, boundary matrices, and the lambda-affine coefficient table.
#[derive(Clone)]
pub struct OperatorSpec {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub a: CoefficientSystem,
    pub b: CoefficientSystem,
    /// 2n x 2n, conditions U Y^ = 0 on the trial space.
    pub u: CMat,
    /// 2m x 2m, the test space is cut out by V Z^ = 0.
    pub v: CMat,
    /// 2m x 2n boundary pairing matrix.
    pub q: CMat,
    /// (i, j) -> p_ij for 0 <= i <= n, 0 <= j <= m; absent entries are zero.
    pub p: BTreeMap<(usize, usize), PEntry>,
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn p_at(&self, i: usize, j: usize, lambda: Complex64) -> Option<CoefficientFunction> {
        self.p.get(&(i, j)).map(|e| e.at(lambda))
    }

    /// |A_{n-1,n}|^(1/s).
    pub fn weight_a(&self) -> CoefficientFunction {
        self.a.top_weight().abs_pow(1.0 / self.s)
    }

    /// |B_{m-1,m}|^((s-1)/s); the constant 1 when s = 1.
    pub fn weight_b(&self) -> CoefficientFunction {
        let e = (self.s - 1.0) / self.s;
        if e == 0.0 {
            CoefficientFunction::one()
        } else {
            self.b.top_weight().abs_pow(e)
        }
    }
}

/// Functional data F = (f_0, ..., f_m) plus the optional boundary part mu.
#[derive(Clone)]
pub struct FunctionalData {
    pub components: Vec<CoefficientFunction>,
    pub boundary_mu: Vec<Complex64>,
}

impl FunctionalData {
    /// All-zero data of length m+1.
    pub fn zero(m: usize) -> Self {
        FunctionalData {
            components: vec![CoefficientFunction::zero(); m + 1],
            boundary_mu: vec![Complex64::ZERO; m],
        }
    }

    /// Data with f_0 set and the rest zero.
    pub fn from_f0(m: usize, f0: CoefficientFunction) -> Self {
        let mut data = Self::zero(m);
        data.components[0] = f0;
        data
    }

    pub fn component(&self, j: usize) -> &CoefficientFunction {
        &self.components[j]
    }

    /// Scale used in solvability and weak-form tolerances:
    /// sum of L1 norms of the data plus |mu|.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for f in &self.components {
            acc += f
                .abs()
                .integrate_with(
                    0.0,
                    1.0,
                    QuadOptions {
                        abs_tol: 1e-9,
                        ..Default::default()
                    },
                )
                .map(|v| v.re)
                .unwrap_or(f64::INFINITY);
        }
        acc + self.boundary_mu.iter().map(|c| c.norm()).sum::<f64>()
    }
}

/// The assembled (n+m)-dimensional first-order system.
pub struct FirstOrderSystem {
    pub dim: usize,
    /// Row-major dim x dim coefficient table; `None` means zero.
    pub coeff: Vec<Option<CoefficientFunction>>,
    pub inhom: Vec<Option<CoefficientFunction>>,
    pub labels: Vec<String>,
    /// The pencil parameter the table was assembled at.
    pub lambda: Complex64,
}

impl FirstOrderSystem {
    pub fn entry(&self, i: usize, j: usize) -> Option<&CoefficientFunction> {
        self.coeff[i * self.dim + j].as_ref()
    }

    pub fn into_linear_system(&self) -> Result<Arc<LinearSystem>> {
        Ok(Arc::new(LinearSystem::new(
            self.dim,
            self.coeff.clone(),
            self.inhom.clone(),
        )?))
    }

    /// Readable rendering, one row per line, entries in the expression
    /// grammar.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let mut line = format!("({})' =", self.labels[i]);
            let mut first = true;
            for j in 0..self.dim {
                if let Some(cf) = self.entry(i, j) {
                    let sep = if first { " " } else { " + " };
                    line.push_str(&format!("{}[{}] * {}", sep, cf, self.labels[j]));
                    first = false;
                }
            }
            if let Some(g) = &self.inhom[i] {
                let sep = if first { " " } else { " + " };
                line.push_str(&format!("{}[{}]", sep, g));
                first = false;
            }
            if first {
                line.push_str(" 0");
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for FirstOrderSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Boundary conditions: a maximal independent subset of the rows of U, and
/// the dual conditions N^H (Q Y^ - Y^v) = N^H mu with N a basis of ker V.
pub struct BoundaryOperator {
    pub n: usize,
    pub m: usize,
    /// rank(U) x 2n.
    pub rows_u: CMat,
    /// 2m x dim ker(V); orthonormal columns.
    pub null_v: CMat,
    pub q: CMat,
}

impl BoundaryOperator {
    pub fn condition_count(&self) -> usize {
        self.rows_u.nrows() + self.null_v.ncols()
    }

    /// Assemble the linear system M c = rhs in the initial vector c of the
    /// first-order system, given the fundamental matrix at 1 and the
    /// particular solution value at 1.
    ///
    /// Trace conventions: Y^_k = y^[k](0) for k < n, y^[k-n](1) otherwise;
    /// Y^v_k = y^[n+m-k-1](0) for k < m and -y^[n+2m-k-1](1) otherwise.
    pub fn linear_system(&self, phi1: &CMat, yp1: &CVec, mu: &[Complex64]) -> (CMat, CVec) {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        // Y^ = s0 c + t0
        let mut s0 = CMat::zeros(2 * n, d);
        let mut t0 = CVec::zeros(2 * n);
        for k in 0..n {
            s0[(k, k)] = Complex64::ONE;
        }
        for k in 0..n {
            for c in 0..d {
                s0[(n + k, c)] = phi1[(k, c)];
            }
            t0[n + k] = yp1[k];
        }
        // Y^v = s1 c + t1
        let mut s1 = CMat::zeros(2 * m, d);
        let mut t1 = CVec::zeros(2 * m);
        for k in 0..m {
            s1[(k, n + m - k - 1)] = Complex64::ONE;
        }
        for k in m..2 * m {
            let row = n + 2 * m - k - 1;
            for c in 0..d {
                s1[(k, c)] = -phi1[(row, c)];
            }
            t1[k] = -yp1[row];
        }

        let count = self.condition_count();
        let mut mat = CMat::zeros(count, d);
        let mut rhs = CVec::zeros(count);
        // rows from U: U Y^ = 0
        let us = &self.rows_u * &s0;
        let ut = &self.rows_u * &t0;
        for r in 0..self.rows_u.nrows() {
            for c in 0..d {
                mat[(r, c)] = us[(r, c)];
            }
            rhs[r] = -ut[r];
        }
        // rows from ker V: N^H (Q Y^ - Y^v) = N^H mu~
        if self.null_v.ncols() > 0 {
            let nh = self.null_v.adjoint();
            let lhs = &nh * (&self.q * &s0 - &s1);
            let mut mu_t = CVec::zeros(2 * m);
            for (k, &mk) in mu.iter().enumerate().take(m) {
                mu_t[k] = mk;
            }
            let rhs_v = &nh * (mu_t - (&self.q * &t0 - &t1));
            let base = self.rows_u.nrows();
            for r in 0..nh.nrows() {
                for c in 0..d {
                    mat[(base + r, c)] = lhs[(r, c)];
                }
                rhs[base + r] = rhs_v[r];
            }
        }
        (mat, rhs)
    }
}

/// Check the type invariants of a spec plus the sampled boundedness and
/// zero-set compatibility requirements. Report-valued.
pub fn validate_spec(spec: &OperatorSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (n, m) = (spec.n, spec.m);

    if spec.s < 1.0 {
        report
            .violations
            .push(format!("exponent s = {} below 1", spec.s));
    }
    if spec.u.nrows() != 2 * n || spec.u.ncols() != 2 * n {
        report.violations.push(format!(
            "U has shape {}x{}, expected {}x{}",
            spec.u.nrows(),
            spec.u.ncols(),
            2 * n,
            2 * n
        ));
    }
    if spec.v.nrows() != 2 * m || spec.v.ncols() != 2 * m {
        report.violations.push(format!(
            "V has shape {}x{}, expected {}x{}",
            spec.v.nrows(),
            spec.v.ncols(),
            2 * m,
            2 * m
        ));
    }
    if spec.q.nrows() != 2 * m || spec.q.ncols() != 2 * n {
        report.violations.push(format!(
            "Q has shape {}x{}, expected {}x{}",
            spec.q.nrows(),
            spec.q.ncols(),
            2 * m,
            2 * n
        ));
    }
    if spec.a.order() != n {
        report
            .violations
            .push(format!("A has order {}, expected {}", spec.a.order(), n));
    }
    if spec.b.order() != m {
        report
            .violations
            .push(format!("B has order {}, expected {}", spec.b.order(), m));
    }
    let ra = validate_system(&spec.a);
    for v in ra.violations {
        report.violations.push(format!("A: {}", v));
    }
    let rb = validate_system(&spec.b);
    for v in rb.violations {
        report.violations.push(format!("B: {}", v));
    }
    if !rb.notes.is_empty() {
        report
            .notes
            .push("B is complex-valued: formula-literal mode".into());
    }

    for &(i, j) in spec.p.keys() {
        if i > n || j > m {
            report
                .violations
                .push(format!("p entry ({}, {}) outside the table 0..{} x 0..{}", i, j, n, m));
        }
    }

    // leading coefficient: present, lambda-independent, bounded with
    // bounded reciprocal
    match spec.p.get(&(n, m)) {
        None => report
            .violations
            .push("leading coefficient p_nm is absent".into()),
        Some(entry) => {
            if entry.lambda_part.is_some() {
                report
                    .violations
                    .push("leading coefficient p_nm must not depend on lambda".into());
            }
            if entry.base.has_singularities() {
                report
                    .violations
                    .push("leading coefficient p_nm declares a singular endpoint".into());
            }
            let max = entry.base.sample_abs_max(512);
            let min = entry.base.sample_abs_min(512);
            if !max.is_finite() {
                report
                    .violations
                    .push("leading coefficient p_nm is unbounded on samples".into());
            }
            if min < 1e-9 {
                report.violations.push(format!(
                    "reciprocal of p_nm is unbounded (sampled min |p_nm| = {:.3e})",
                    min
                ));
            }
        }
    }

    // declared-representation integrability classes
    for (&(i, j), entry) in &spec.p {
        let alphas: Vec<f64> = entry
            .base
            .pieces()
            .iter()
            .filter_map(|p| p.sing.map(|(_, a)| a))
            .collect();
        if i < n && j == m {
            for &alpha in &alphas {
                if spec.s == 1.0 {
                    report.violations.push(format!(
                        "p_({}, {}) must be essentially bounded for s = 1 but declares exponent {}",
                        i, j, alpha
                    ));
                } else if alpha * spec.s / (spec.s - 1.0) <= -1.0 {
                    report.violations.push(format!(
                        "p_({}, {}) with exponent {} is not in L^(s/(s-1))",
                        i, j, alpha
                    ));
                }
            }
        }
        if i == n && j < m {
            for &alpha in &alphas {
                if alpha * spec.s <= -1.0 {
                    report.violations.push(format!(
                        "p_({}, {}) with exponent {} is not in L^s",
                        i, j, alpha
                    ));
                }
            }
        }
    }

    // zero-set compatibility of the two top weights at sampled nodes
    if n >= 1 && m >= 1 {
        let wa = spec.a.top_weight();
        let wb = spec.b.top_weight();
        let scale_a = wa.sample_abs_max(512).max(1e-300);
        let scale_b = wb.sample_abs_max(512).max(1e-300);
        for k in 0..512 {
            let x = (k as f64 + 0.5) / 512.0;
            let va = wa.eval_raw(x).norm() / scale_a;
            let vb = wb.eval_raw(x).norm() / scale_b;
            if (va < 1e-12 && vb > 1e-6) || (vb < 1e-12 && va > 1e-6) {
                report.violations.push(format!(
                    "zero sets of A_(n-1,n) and B_(m-1,m) differ near x = {:.4}",
                    x
                ));
                break;
            }
        }
    }

    report
}

/// Fredholm index n - m - rank U + rank V, ranks by singular-value
/// threshold.
pub fn fredholm_index(spec: &OperatorSpec) -> i64 {
    let ru = linalg::rank(&spec.u, RANK_RTOL) as i64;
    let rv = linalg::rank(&spec.v, RANK_RTOL) as i64;
    spec.n as i64 - spec.m as i64 - ru + rv
}

/// Union of coefficient and trajectory breakpoints, for splitting the weak
///-form quadrature.
fn breakpoint_hints(spec: &OperatorSpec, ys: &[&VectorTrajectory]) -> Vec<f64> {
    let mut cuts: Vec<f64> = Vec::new();
    for entry in spec.p.values() {
        cuts.extend_from_slice(entry.base.breakpoints());
        if let Some(lp) = &entry.lambda_part {
            cuts.extend_from_slice(lp.breakpoints());
        }
    }
    for (_, cf) in spec.a.entries() {
        cuts.extend_from_slice(cf.breakpoints());
    }
    for (_, cf) in spec.b.entries() {
        cuts.extend_from_slice(cf.breakpoints());
    }
    for y in ys {
        for i in 0..y.len() {
            match y.component(i) {
                Component::Closed(cf) => cuts.extend_from_slice(cf.breakpoints()),
                Component::Ode { solution, .. } | Component::Map { solution, .. } => {
                    cuts.extend_from_slice(solution.system().breakpoints())
                }
                Component::Func(_) => {}
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    cuts
}

/// The weak action <T Y, Z> at pencil parameter lambda: the four weighted
/// integral blocks plus the boundary pairing <Q Y^, Z^>.
pub fn apply_t(
    spec: &OperatorSpec,
    lambda: Complex64,
    y: &VectorTrajectory,
    z: &VectorTrajectory,
) -> Result<Complex64> {
    assert!(y.len() >= spec.n + 1, "trial trajectory needs n+1 components");
    assert!(z.len() >= spec.m + 1, "test trajectory needs m+1 components");
    let (n, m) = (spec.n, spec.m);
    let wa = spec.weight_a();
    let wb = spec.weight_b();
    let cuts = breakpoint_hints(spec, &[y, z]);
    let opts = QuadOptions {
        abs_tol: 1e-11,
        max_panels: 8192,
    };

    let mut total = Complex64::ZERO;
    for (&(i, j), _) in &spec.p {
        let p = spec.p_at(i, j, lambda).unwrap();
        let weight_a = i == n;
        let weight_b = j == m;
        let f = |x: f64| {
            let mut v = p.eval_raw(x) * y.eval(i, x) * z.eval(j, x).conj();
            if weight_a {
                v *= wa.eval_raw(x);
            }
            if weight_b {
                v *= wb.eval_raw(x);
            }
            v
        };
        total += quad::integrate(f, 0.0, 1.0, &cuts, opts)?;
    }

    // <Q Y^, Z^>
    let y_hat = CVec::from_vec(boundary_trace(y, n));
    let z_hat = CVec::from_vec(boundary_trace(z, m));
    let qy = &spec.q * y_hat;
    total += z_hat.dotc(&qy);
    Ok(total)
}

/// The defining pairing <F, Z> of the functional data against a test
/// trajectory (integral part with the B-side weight, plus the mu part).
pub fn functional_pairing(
    spec: &OperatorSpec,
    data: &FunctionalData,
    z: &VectorTrajectory,
) -> Result<Complex64> {
    let m = spec.m;
    let wb = spec.weight_b();
    let cuts = breakpoint_hints(spec, &[z]);
    let opts = QuadOptions {
        abs_tol: 1e-11,
        max_panels: 8192,
    };
    let mut total = Complex64::ZERO;
    for j in 0..=m {
        let fj = data.component(j);
        let weighted = j == m;
        let f = |x: f64| {
            let mut v = fj.eval_raw(x) * z.eval(j, x).conj();
            if weighted {
                v *= wb.eval_raw(x);
            }
            v
        };
        total += quad::integrate(f, 0.0, 1.0, &cuts, opts)?;
    }
    for (k, &mu) in data.boundary_mu.iter().enumerate() {
        total += mu * z.eval(k, 0.0).conj();
    }
    Ok(total)
}

fn opt_add(a: Option<CoefficientFunction>, b: Option<CoefficientFunction>) -> Option<CoefficientFunction> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.add(&y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

fn opt_sub(a: Option<CoefficientFunction>, b: Option<CoefficientFunction>) -> Option<CoefficientFunction> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.sub(&y)),
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y.neg()),
        (None, None) => None,
    }
}

fn opt_mul(a: Option<&CoefficientFunction>, b: Option<&CoefficientFunction>) -> Option<CoefficientFunction> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.mul(y)),
        _ => None,
    }
}

/// Emit the (n+m)-dimensional system equivalent to T Y = F at the given
/// pencil parameter.
///
/// Rows 0..n-2 are the quasi-derivative couplings of the trial table; row
/// n-1 trades the top component for y^[n] through the leading coefficient
/// and the two norm weights; rows n..n+m-1 carry the conjugated test-table
/// couplings and the -f_j + p_nm^{-1} p_nj f_m inhomogeneities.
pub fn assemble_system(
    spec: &OperatorSpec,
    lambda: Complex64,
    data: &FunctionalData,
) -> Result<FirstOrderSystem> {
    validate_spec(spec).into_result("operator spec")?;
    if data.components.len() != spec.m + 1 {
        return Err(Error::invalid(
            "functional data",
            vec![format!(
                "expected {} components, got {}",
                spec.m + 1,
                data.components.len()
            )],
        ));
    }
    let (n, m) = (spec.n, spec.m);
    let d = n + m;
    let wa = spec.weight_a();
    let wb = spec.weight_b();
    let a_top = spec.a.top_weight();
    let b_top = spec.b.top_weight();
    let pnm = spec
        .p_at(n, m, lambda)
        .expect("validated: leading coefficient present");
    let pnm_inv = CoefficientFunction::one().div(&pnm);
    // A_{n-1,n} / |A_{n-1,n}|^{1/s}
    let qa = a_top.div(&wa);
    // conj(B_{m-1,m}) / |B_{m-1,m}|^{(s-1)/s}
    let qb = b_top.conj().div(&wb);
    let f_m = data.component(m);

    let mut coeff: Vec<Option<CoefficientFunction>> = vec![None; d * d];
    let mut inhom: Vec<Option<CoefficientFunction>> = vec![None; d];

    // rows 0..n-2: trial couplings
    for i in 0..n.saturating_sub(1) {
        for j in 0..=(i + 1) {
            if let Some(cf) = spec.a.entry(i, j) {
                coeff[i * d + j] = Some(cf.clone());
            }
        }
    }

    // row n-1
    {
        let row = n - 1;
        for i in 0..n {
            let base = spec.a.entry(n - 1, i).cloned();
            let pim = spec.p_at(i, m, lambda);
            let sub = pim.map(|p| pnm_inv.mul(&p).mul(&qa));
            coeff[row * d + i] = opt_sub(base, sub);
        }
        coeff[row * d + n] = Some(pnm_inv.mul(&qa).mul(&qb));
        inhom[row] = Some(pnm_inv.mul(&qa).mul(f_m));
    }

    // rows n..n+m-1: for j < m the row for y^[n+m-j-1]
    for j in 0..m {
        let row = n + m - j - 1;
        let pnj = spec.p_at(n, j, lambda);
        for i in 0..n {
            let pij = spec.p_at(i, j, lambda);
            let pim = spec.p_at(i, m, lambda);
            let cross = opt_mul(pim.as_ref(), pnj.as_ref()).map(|c| pnm_inv.mul(&c));
            coeff[row * d + i] = opt_sub(pij, cross);
        }
        // y^[n] coefficient
        let bracket_pos = pnj.as_ref().map(|p| pnm_inv.mul(&qb).mul(p));
        let b_conj = spec.b.entry(m - 1, j).map(|b| b.conj());
        coeff[row * d + n] = opt_sub(bracket_pos, b_conj);
        // higher quasi-derivative couplings
        for k in j.max(1)..m {
            if let Some(b) = spec.b.entry(k - 1, j) {
                let col = n + m - k;
                coeff[row * d + col] = opt_add(
                    coeff[row * d + col].take(),
                    Some(b.conj().neg()),
                );
            }
        }
        // inhomogeneity -f_j + p_nm^{-1} p_nj f_m
        let fj = data.component(j).neg();
        let extra = pnj.map(|p| pnm_inv.mul(&p).mul(f_m));
        inhom[row] = opt_add(Some(fj), extra);
    }

    // prune entries that reduce to the zero constant
    for slot in coeff.iter_mut().chain(inhom.iter_mut()) {
        if let Some(cf) = slot {
            let is_zero = cf
                .pieces()
                .iter()
                .all(|p| p.expr.as_const().map(|c| c == Complex64::ZERO).unwrap_or(false))
                && cf.atoms().is_empty();
            if is_zero {
                *slot = None;
            }
        }
    }

    Ok(FirstOrderSystem {
        dim: d,
        coeff,
        inhom,
        labels: (0..d).map(|i| format!("y^[{}]", i)).collect(),
        lambda,
    })
}

/// Build the boundary operator: a maximal independent row set of U plus
/// dual conditions from an orthonormal basis of ker V.
pub fn boundary_matrix(spec: &OperatorSpec) -> BoundaryOperator {
    let rows = linalg::independent_rows(&spec.u, RANK_RTOL);
    let mut rows_u = CMat::zeros(rows.len(), 2 * spec.n);
    for (r, &src) in rows.iter().enumerate() {
        for c in 0..2 * spec.n {
            rows_u[(r, c)] = spec.u[(src, c)];
        }
    }
    let null_v = linalg::null_space(&spec.v, RANK_RTOL);
    BoundaryOperator {
        n: spec.n,
        m: spec.m,
        rows_u,
        null_v,
        q: spec.q.clone(),
    }
}

/// Recover the trial trajectory (Y_0, ..., Y_n) from a solved assembled
/// system: the first n components are the quasi-derivatives, and the top
/// component is expressed through y^[n], the p-row data, and f_m.
pub fn trial_from_trajectory(
    spec: &OperatorSpec,
    lambda: Complex64,
    data: &FunctionalData,
    solved: &VectorTrajectory,
) -> Result<VectorTrajectory> {
    let (n, m) = (spec.n, spec.m);
    if solved.len() < n + 1 {
        return Err(Error::invalid(
            "solved trajectory",
            vec![format!("needs at least {} components, got {}", n + 1, solved.len())],
        ));
    }
    let wa = spec.weight_a();
    let pnm = spec
        .p_at(n, m, lambda)
        .ok_or_else(|| Error::invalid("operator spec", vec!["leading coefficient absent".into()]))?;
    let qb = spec.b.top_weight().conj().div(&spec.weight_b());
    let pims: Vec<Option<CoefficientFunction>> =
        (0..n).map(|i| spec.p_at(i, m, lambda)).collect();
    let f_m = data.component(m).clone();

    let grid = solved.grid().to_vec();
    let mut components: Vec<Component> =
        (0..n).map(|i| solved.component(i).clone()).collect();
    let captured = Arc::new(solved.clone());
    components.push(Component::Func(Arc::new(move |x: f64| {
        let mut acc = qb.eval_raw(x) * captured.eval(n, x) + f_m.eval_raw(x);
        for (i, pim) in pims.iter().enumerate() {
            if let Some(p) = pim {
                acc -= p.eval_raw(x) * captured.eval(i, x);
            }
        }
        acc / (pnm.eval_raw(x) * wa.eval_raw(x))
    })));
    Ok(VectorTrajectory::new(components, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    #[test]
    fn beam_index_is_zero() {
        let spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        assert_eq!(fredholm_index(&spec), 0);
        assert_eq!(boundary_matrix(&spec).condition_count(), 4);
    }

    #[test]
    fn index_examples() {
        // (n = 2, m = 2, U = 0, V full rank) -> 4
        let mut spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        spec.u = CMat::zeros(4, 4);
        assert_eq!(fredholm_index(&spec), 4);
        let bm = boundary_matrix(&spec);
        assert_eq!(bm.condition_count(), 0);
    }

    #[test]
    fn validate_rejects_bad_leading_coefficient() {
        let mut spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        spec.p
            .insert((2, 2), PEntry::of(CoefficientFunction::parse("x").unwrap()));
        let report = validate_spec(&spec);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("reciprocal")));
    }

    #[test]
    fn validate_rejects_shape_mismatch() {
        let mut spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        spec.u = CMat::identity(3, 3);
        let report = validate_spec(&spec);
        assert!(!report.is_valid());
    }

    #[test]
    fn beam_assembled_rows_specialize() {
        // p = 1, q = r = 0, lambda = 0, data f_0 = f: rows must be
        // y0' = y1, y1' = y2, y2' = -y3, y3' = -f
        let spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let f = FunctionalData::from_f0(2, CoefficientFunction::constant(24.0));
        let sys = assemble_system(&spec, Complex64::ZERO, &f).unwrap();
        let at = |i: usize, j: usize, x: f64| {
            sys.entry(i, j)
                .map(|cf| cf.eval_raw(x))
                .unwrap_or(Complex64::ZERO)
        };
        for &x in &[0.1, 0.5, 0.9] {
            assert!((at(0, 1, x) - Complex64::ONE).norm() < 1e-14);
            assert!((at(1, 2, x) - Complex64::ONE).norm() < 1e-14);
            assert!((at(2, 3, x) + Complex64::ONE).norm() < 1e-14);
            for j in 0..4 {
                assert!(at(3, j, x).norm() < 1e-14);
            }
            let g3 = sys.inhom[3].as_ref().unwrap().eval_raw(x);
            assert!((g3 + Complex64::new(24.0, 0.0)).norm() < 1e-14);
        }
        assert!(sys.inhom[0].is_none() && sys.inhom[1].is_none() && sys.inhom[2].is_none());
    }

    #[test]
    fn boundary_operator_shapes() {
        // V = 0: im V* = {0}; all 2m dual conditions survive
        let mut spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        spec.v = CMat::zeros(4, 4);
        let bm = boundary_matrix(&spec);
        assert_eq!(bm.rows_u.nrows(), 4);
        assert_eq!(bm.null_v.ncols(), 4);
        assert_eq!(bm.condition_count(), 8);
    }
}
