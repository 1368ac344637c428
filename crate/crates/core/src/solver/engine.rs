//! Linear ODE integration engine.
//!
//! Integrates y' = C(x) y + g(x) where the entries of C and g are
//! [`CoefficientFunction`]s: piecewise closed forms, possibly with
//! integrable endpoint blow-ups and (in measure mode) point atoms.
//!
//! Scheme: Dormand–Prince 4(5) embedded pair with PI-free step control on
//! smooth subintervals. Steps never straddle a breakpoint. Subintervals
//! whose endpoint carries a declared power singularity are integrated in a
//! substituted time variable that removes the blow-up. Atoms act as jump
//! transfer matrices at their locations (left-limit convention: the stored
//! sample at an atom location is the pre-jump state).

use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::{CoefficientFunction, PieceEnd};
use crate::error::{Error, Result};

/// Offset, in transformed time, kept away from a singular endpoint. The
/// skipped sliver contributes O(eps) to the state.
const SINGULAR_EPS: f64 = 1e-13;

/// A linear first-order system with coefficient-function entries.
pub struct LinearSystem {
    dim: usize,
    /// Row-major dim x dim; `None` means identically zero.
    coeff: Vec<Option<CoefficientFunction>>,
    inhom: Vec<Option<CoefficientFunction>>,
    breakpoints: Vec<f64>,
    /// location -> state jumps (i, j, w): y_i += w * y_j.
    atom_jumps: Vec<(f64, Vec<(usize, usize, Complex64)>)>,
    /// singular point -> most negative declared exponent there.
    singular_points: Vec<(f64, f64)>,
}

impl LinearSystem {
    pub fn new(
        dim: usize,
        coeff: Vec<Option<CoefficientFunction>>,
        inhom: Vec<Option<CoefficientFunction>>,
    ) -> Result<Self> {
        assert_eq!(coeff.len(), dim * dim);
        assert_eq!(inhom.len(), dim);
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut atom_map: Vec<(f64, Vec<(usize, usize, Complex64)>)> = Vec::new();
        let mut singular: Vec<(f64, f64)> = Vec::new();

        let mut note_cf = |cf: &CoefficientFunction, entry: Option<(usize, usize)>| -> Result<()> {
            breakpoints.extend_from_slice(cf.breakpoints());
            for p in cf.pieces() {
                if let Some((end, alpha)) = p.sing {
                    let loc = match end {
                        PieceEnd::Lower => p.lo,
                        PieceEnd::Upper => p.hi,
                    };
                    breakpoints.push(loc);
                    match singular.iter_mut().find(|(l, _)| (*l - loc).abs() < 1e-12) {
                        Some((_, a)) => *a = a.min(alpha),
                        None => singular.push((loc, alpha)),
                    }
                }
            }
            for &(loc, w) in cf.atoms() {
                let (i, j) = entry.ok_or_else(|| {
                    Error::Unsupported("atoms in the inhomogeneity are not supported".into())
                })?;
                breakpoints.push(loc);
                match atom_map.iter_mut().find(|(l, _)| (*l - loc).abs() < 1e-12) {
                    Some((_, v)) => v.push((i, j, w)),
                    None => atom_map.push((loc, vec![(i, j, w)])),
                }
            }
            Ok(())
        };

        for i in 0..dim {
            for j in 0..dim {
                if let Some(cf) = &coeff[i * dim + j] {
                    note_cf(cf, Some((i, j)))?;
                }
            }
            if let Some(cf) = &inhom[i] {
                note_cf(cf, None)?;
            }
        }
        breakpoints.retain(|&b| b > 0.0 && b < 1.0);
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        atom_map.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(LinearSystem {
            dim,
            coeff,
            inhom,
            breakpoints,
            atom_jumps: atom_map,
            singular_points: singular,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn has_atoms(&self) -> bool {
        !self.atom_jumps.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&CoefficientFunction> {
        self.coeff[i * self.dim + j].as_ref()
    }

    pub fn inhom_entry(&self, i: usize) -> Option<&CoefficientFunction> {
        self.inhom[i].as_ref()
    }

    fn singular_alpha_at(&self, x: f64) -> Option<f64> {
        self.singular_points
            .iter()
            .find(|(l, _)| (*l - x).abs() < 1e-12)
            .map(|&(_, a)| a)
    }

    fn jumps_at(&self, x: f64) -> Option<&[(usize, usize, Complex64)]> {
        self.atom_jumps
            .iter()
            .find(|(l, _)| (*l - x).abs() < 1e-12)
            .map(|(_, v)| v.as_slice())
    }

    fn apply_jumps(&self, x: f64, y: &mut [Complex64]) {
        if let Some(jumps) = self.jumps_at(x) {
            let pre: Vec<Complex64> = y.to_vec();
            for &(i, j, w) in jumps {
                y[i] += w * pre[j];
            }
        }
    }

    /// Evaluate C(x) y + g(x) into `out` (raw piecewise values; callers keep
    /// x off atoms and singular points).
    pub fn eval_rhs(&self, x: f64, y: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.dim {
            let mut acc = Complex64::ZERO;
            for j in 0..self.dim {
                if let Some(cf) = &self.coeff[i * self.dim + j] {
                    acc += cf.eval_raw(x) * y[j];
                }
            }
            if let Some(cf) = &self.inhom[i] {
                acc += cf.eval_raw(x);
            }
            out[i] = acc;
        }
    }
}

/// Dormand–Prince 4(5) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integration of a generic RHS over [x0, x1], reporting accepted
/// states through `store`.
fn rk45_span<F>(
    f: &F,
    x0: f64,
    x1: f64,
    y: &mut Vec<Complex64>,
    tol: f64,
    steps_left: &mut usize,
    mut store: Option<&mut dyn FnMut(f64, &[Complex64])>,
) -> Result<()>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let dim = y.len();
    let span = x1 - x0;
    if span <= 0.0 {
        return Ok(());
    }
    let mut x = x0;
    let mut h = span * 1e-2;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::ZERO; dim]; 7];
    let mut ytmp = vec![Complex64::ZERO; dim];
    let mut k0_fresh = false;
    while x < x1 {
        if *steps_left == 0 {
            return Err(Error::Integration {
                lo: x,
                hi: x1,
                message: "step budget exhausted".into(),
            });
        }
        *steps_left -= 1;
        h = h.min(x1 - x);
        if h < 1e-15 * (1.0 + x.abs()) {
            // cannot resolve further; take what remains in one jump of the
            // state (the remaining sliver is below representable width)
            break;
        }
        if !k0_fresh {
            f(x, y, &mut k[0]);
        }
        for s in 0..6 {
            for i in 0..dim {
                let mut acc = Complex64::ZERO;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                ytmp[i] = y[i] + acc * h;
            }
            f(x + C[s] * h, &ytmp, &mut k[s + 1]);
        }
        // 5th-order solution is stage row 6 (FSAL: k[6] = f at the new point)
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = Complex64::ZERO;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let sc = tol * (1.0 + y[i].norm().max(ytmp[i].norm()));
            err = err.max((e * h).norm() / sc);
        }
        if err <= 1.0 {
            // ytmp currently holds the 5th-order update (last stage loop
            // wrote the s = 5 combination before computing k[6])
            x += h;
            y.copy_from_slice(&ytmp);
            k.swap(0, 6);
            k0_fresh = true;
            if let Some(store) = store.as_deref_mut() {
                store(x, y);
            }
        } else {
            k0_fresh = false;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(())
}

/// Grid-sampled solution of a linear system, with evaluation between grid
/// points done by re-integration from the nearest stored sample.
pub struct OdeSolution {
    system: Arc<LinearSystem>,
    grid: Vec<f64>,
    states: Vec<Vec<Complex64>>,
    tol: f64,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn states(&self) -> &[Vec<Complex64>] {
        &self.states
    }

    pub fn system(&self) -> &Arc<LinearSystem> {
        &self.system
    }

    pub fn first(&self) -> &Vec<Complex64> {
        &self.states[0]
    }

    pub fn last(&self) -> &Vec<Complex64> {
        self.states.last().unwrap()
    }

    /// State at x, re-integrated from the nearest stored sample at or
    /// before x (no polynomial interpolation).
    pub fn eval(&self, x: f64) -> Vec<Complex64> {
        let lo = self.grid[0];
        let hi = *self.grid.last().unwrap();
        let x = x.clamp(lo, hi);
        let idx = match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.states[i].clone(),
            Err(i) => i.saturating_sub(1),
        };
        let mut y = self.states[idx].clone();
        let start = self.grid[idx];
        // the stored sample at an atom location is pre-jump
        self.system.apply_jumps(start, &mut y);
        let mut budget = 100_000usize;
        if x <= start {
            return y;
        }
        if let Some(alpha) = self.system.singular_alpha_at(start) {
            // blow-up at the start point: integrate in transformed time
            let beta = 1.0 / (1.0 + alpha);
            let t_max = (x - start).powf(1.0 / beta);
            let eps = SINGULAR_EPS * t_max.max(1e-3);
            let sys = &self.system;
            let f = |s: f64, v: &[Complex64], out: &mut [Complex64]| {
                let t = start + s.powf(beta);
                sys.eval_rhs(t, v, out);
                let scale = beta * s.powf(beta - 1.0);
                for o in out.iter_mut() {
                    *o *= scale;
                }
            };
            let _ = rk45_span(&f, eps, t_max, &mut y, self.tol, &mut budget, None);
            return y;
        }
        // consecutive grid points never straddle a breakpoint; keep stage
        // evaluations strictly inside so jump values stay one-sided
        let delta = 1e-12 * (x - start);
        let f = |t: f64, v: &[Complex64], out: &mut [Complex64]| {
            self.system
                .eval_rhs(t.clamp(start + delta, x - delta), v, out);
        };
        let _ = rk45_span(&f, start, x, &mut y, self.tol, &mut budget, None);
        y
    }

    pub fn component(&self, i: usize, x: f64) -> Complex64 {
        self.eval(x)[i]
    }
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub extra_breakpoints: Vec<f64>,
    pub allow_atoms: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            tol: 1e-10,
            max_steps: 2_000_000,
            extra_breakpoints: Vec::new(),
            allow_atoms: false,
        }
    }
}

/// Integrate the system from `from` to `to` (within [0, 1]) with initial
/// state `y0` at `from`.
pub fn integrate_system(
    system: &Arc<LinearSystem>,
    y0: Vec<Complex64>,
    from: f64,
    to: f64,
    opts: &EngineOptions,
) -> Result<OdeSolution> {
    assert_eq!(y0.len(), system.dim());
    assert!(from < to, "integration span must be forward");
    if system.has_atoms() && !opts.allow_atoms {
        return Err(Error::invalid(
            "system",
            vec!["atoms present outside measure mode".into()],
        ));
    }

    let mut cuts: Vec<f64> = vec![from, to];
    for &b in system.breakpoints() {
        if b > from && b < to {
            cuts.push(b);
        }
    }
    for &b in &opts.extra_breakpoints {
        if b > from && b < to {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let mut grid = vec![from];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    let mut steps_left = opts.max_steps;

    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // jumps at the left cut (stored sample there is pre-jump)
        system.apply_jumps(lo, &mut y);

        let sing_lo = system.singular_alpha_at(lo);
        let sing_hi = system.singular_alpha_at(hi);
        let mut store = |x: f64, state: &[Complex64]| {
            grid.push(x);
            states.push(state.to_vec());
        };
        // stage evaluations stay strictly inside the subinterval so that
        // one-sided values at jumps are taken from the correct side
        let delta = 1e-12 * (hi - lo);
        match (sing_lo, sing_hi) {
            (None, None) => {
                let f = |x: f64, v: &[Complex64], out: &mut [Complex64]| {
                    system.eval_rhs(x.clamp(lo + delta, hi - delta), v, out)
                };
                rk45_span(&f, lo, hi, &mut y, opts.tol, &mut steps_left, Some(&mut store))?;
            }
            (Some(alpha), None) => {
                integrate_singular(system, &mut y, lo, hi, alpha, true, opts, &mut steps_left, &mut store)?;
            }
            (None, Some(alpha)) => {
                integrate_singular(system, &mut y, lo, hi, alpha, false, opts, &mut steps_left, &mut store)?;
            }
            (Some(a_lo), Some(a_hi)) => {
                let mid = 0.5 * (lo + hi);
                integrate_singular(system, &mut y, lo, mid, a_lo, true, opts, &mut steps_left, &mut store)?;
                integrate_singular(system, &mut y, mid, hi, a_hi, false, opts, &mut steps_left, &mut store)?;
            }
        }
        if *grid.last().unwrap() < hi {
            grid.push(hi);
            states.push(y.clone());
        }
    }

    Ok(OdeSolution {
        system: system.clone(),
        grid,
        states,
        tol: opts.tol,
    })
}

/// Integrate over [lo, hi] where the coefficient blows up like a power at
/// one endpoint: substitute x = point ± s^beta so the transformed RHS is
/// bounded, skipping a sliver of transformed width `SINGULAR_EPS`.
#[allow(clippy::too_many_arguments)]
fn integrate_singular(
    system: &Arc<LinearSystem>,
    y: &mut Vec<Complex64>,
    lo: f64,
    hi: f64,
    alpha: f64,
    at_lower: bool,
    opts: &EngineOptions,
    steps_left: &mut usize,
    store: &mut dyn FnMut(f64, &[Complex64]),
) -> Result<()> {
    if alpha <= -1.0 {
        return Err(Error::Integration {
            lo,
            hi,
            message: format!("non-integrable exponent {}", alpha),
        });
    }
    let beta = 1.0 / (1.0 + alpha);
    let span = hi - lo;
    let t_max = span.powf(1.0 / beta);
    let eps = SINGULAR_EPS * t_max;
    let delta = 1e-12 * span;
    if at_lower {
        // x(s) = lo + s^beta, s in [eps, t_max]; the eps offset keeps x off
        // the singular endpoint, the clamp keeps the far end one-sided
        let f = |s: f64, v: &[Complex64], out: &mut [Complex64]| {
            let x = (lo + s.powf(beta)).min(hi - delta);
            system.eval_rhs(x, v, out);
            let scale = beta * s.powf(beta - 1.0);
            for o in out.iter_mut() {
                *o *= scale;
            }
        };
        let mut store_x = |s: f64, state: &[Complex64]| {
            store(lo + s.powf(beta), state);
        };
        rk45_span(&f, eps, t_max, y, opts.tol, steps_left, Some(&mut store_x))
    } else {
        // x(s) = hi - (t_max - s)^beta, s in [0, t_max - eps]
        let f = |s: f64, v: &[Complex64], out: &mut [Complex64]| {
            let x = (hi - (t_max - s).powf(beta)).max(lo + delta);
            system.eval_rhs(x, v, out);
            let scale = beta * (t_max - s).powf(beta - 1.0);
            for o in out.iter_mut() {
                *o *= scale;
            }
        };
        let mut store_x = |s: f64, state: &[Complex64]| {
            store(hi - (t_max - s).powf(beta), state);
        };
        rk45_span(
            &f,
            0.0,
            t_max - eps,
            y,
            opts.tol,
            steps_left,
            Some(&mut store_x),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFunction;

    fn simple_system(
        dim: usize,
        entries: Vec<(usize, usize, CoefficientFunction)>,
        inhom: Vec<(usize, CoefficientFunction)>,
    ) -> Arc<LinearSystem> {
        let mut coeff = vec![None; dim * dim];
        for (i, j, cf) in entries {
            coeff[i * dim + j] = Some(cf);
        }
        let mut g = vec![None; dim];
        for (i, cf) in inhom {
            g[i] = Some(cf);
        }
        Arc::new(LinearSystem::new(dim, coeff, g).unwrap())
    }

    #[test]
    fn exponential_growth() {
        let sys = simple_system(1, vec![(0, 0, CoefficientFunction::one())], vec![]);
        let sol = integrate_system(
            &sys,
            vec![Complex64::new(1.0, 0.0)],
            0.0,
            1.0,
            &EngineOptions::default(),
        )
        .unwrap();
        assert!((sol.last()[0].re - 1f64.exp()).abs() < 1e-9);
        // re-integration eval agrees mid-span
        let mid = sol.eval(0.5)[0];
        assert!((mid.re - 0.5f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn step_inhomogeneity() {
        let sys = simple_system(1, vec![], vec![(0, CoefficientFunction::step_at(0.5))]);
        let sol = integrate_system(
            &sys,
            vec![Complex64::ZERO],
            0.0,
            1.0,
            &EngineOptions::default(),
        )
        .unwrap();
        assert!((sol.last()[0].re - 0.5).abs() < 1e-11);
    }

    #[test]
    fn singular_coefficient_inverse_sqrt() {
        // y' = x^(-1/2) y, y(0) = 1 -> y(1) = e^2
        use crate::coeffs::{parse, Piece, PieceEnd};
        let cf = CoefficientFunction::from_pieces(vec![Piece {
            lo: 0.0,
            hi: 1.0,
            expr: parse::parse("x^(-1/2)").unwrap(),
            sing: Some((PieceEnd::Lower, -0.5)),
        }])
        .unwrap();
        let sys = simple_system(1, vec![(0, 0, cf)], vec![]);
        let sol = integrate_system(
            &sys,
            vec![Complex64::new(1.0, 0.0)],
            0.0,
            1.0,
            &EngineOptions::default(),
        )
        .unwrap();
        assert!((sol.last()[0].re - 2f64.exp()).abs() < 2e-8);
    }

    #[test]
    fn atom_jump_left_limit_convention() {
        // y' = 0 with a jump y0 += w*y0 at 0.5
        let cf = CoefficientFunction::zero()
            .with_atoms(vec![(0.5, Complex64::new(1.0, 0.0))])
            .unwrap();
        let sys = simple_system(1, vec![(0, 0, cf)], vec![]);
        let opts = EngineOptions {
            allow_atoms: true,
            ..EngineOptions::default()
        };
        let sol = integrate_system(&sys, vec![Complex64::new(1.0, 0.0)], 0.0, 1.0, &opts).unwrap();
        assert!((sol.last()[0].re - 2.0).abs() < 1e-12);
        // sample stored at 0.5 is pre-jump; eval past it sees the jump
        let pre_idx = sol
            .grid()
            .iter()
            .position(|&g| (g - 0.5).abs() < 1e-12)
            .unwrap();
        assert!((sol.states()[pre_idx][0].re - 1.0).abs() < 1e-12);
        assert!((sol.eval(0.75)[0].re - 2.0).abs() < 1e-12);

        // refused outside measure mode
        assert!(integrate_system(
            &sys,
            vec![Complex64::ONE],
            0.0,
            1.0,
            &EngineOptions::default()
        )
        .is_err());
    }
}
