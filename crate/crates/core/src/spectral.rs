//! Eigenvalue computation for the pencil lambda -> T - lambda JI via the
//! characteristic boundary determinant, plus the numerical symmetry and
//! numerical-range diagnostics.
//!
//! Root localization on real windows uses sign-change bracketing when the
//! determinant is real along the window and |det| minima otherwise, both
//! polished by secant iteration. Complex rectangles use Newton from grid
//! minima with a finite-difference derivative; no winding-number counting
//! is attempted.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_RTOL};
use crate::operator::{self, sample, FunctionalData, OperatorSpec};
use crate::quasisystem::VectorTrajectory;
use crate::solver::{assemble_bvp, IvpOptions};

/// Scan region for eigenvalue searches.
#[derive(Debug, Clone, Copy)]
pub enum SpectralWindow {
    Real { lo: f64, hi: f64 },
    Rect { re: (f64, f64), im: (f64, f64) },
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Grid points along the real axis (and per axis in rectangle mode).
    pub grid: usize,
    pub grid_im: usize,
    /// |det| threshold for accepting a polished root.
    pub root_tol: f64,
    /// Relative deduplication tolerance.
    pub dedup_rtol: f64,
    pub max_polish: usize,
    pub compute_eigenfunctions: bool,
    /// Integration tolerance for the underlying shooting passes.
    pub ivp_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            grid: 400,
            grid_im: 24,
            root_tol: 1e-10,
            dedup_rtol: 1e-8,
            max_polish: 80,
            compute_eigenfunctions: false,
            ivp_tol: 1e-10,
        }
    }
}

#[derive(Clone)]
pub struct Eigenvalue {
    pub lambda: Complex64,
    /// Geometric multiplicity: kernel dimension of the boundary matrix.
    pub multiplicity: usize,
    /// |det| at the polished root.
    pub residual: f64,
    pub eigenfunction: Option<VectorTrajectory>,
}

pub struct SpectralResult {
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: SpectralWindow,
    pub grid: usize,
    pub root_tol: f64,
}

impl SpectralResult {
    /// CSV rows `re(lambda), im(lambda), multiplicity, residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re(lambda), im(lambda), multiplicity, residual\n");
        for ev in &self.eigenvalues {
            out.push_str(&format!(
                "{}, {}, {}, {}\n",
                ev.lambda.re, ev.lambda.im, ev.multiplicity, ev.residual
            ));
        }
        out
    }
}

fn ivp_opts(tol: f64) -> IvpOptions {
    IvpOptions {
        tol,
        ..IvpOptions::default()
    }
}

/// Row-normalized boundary determinant at lambda with F = 0; vanishes
/// exactly at pencil spectrum points. Requires a square boundary system.
pub fn char_det(spec: &OperatorSpec, lambda: Complex64) -> Result<Complex64> {
    char_det_with(spec, lambda, 1e-10)
}

pub fn char_det_with(spec: &OperatorSpec, lambda: Complex64, ivp_tol: f64) -> Result<Complex64> {
    let data = FunctionalData::zero(spec.m);
    let bvp = assemble_bvp(spec, lambda, &data, &ivp_opts(ivp_tol))?;
    bvp.normalized_determinant().ok_or_else(|| {
        Error::Unsupported(format!(
            "boundary system is {}x{}, not square; use kernel-dimension scans",
            bvp.matrix.nrows(),
            bvp.matrix.ncols()
        ))
    })
}

/// Kernel dimension of the boundary matrix at lambda.
pub fn kernel_dimension_at(spec: &OperatorSpec, lambda: Complex64, ivp_tol: f64) -> Result<usize> {
    let data = FunctionalData::zero(spec.m);
    let bvp = assemble_bvp(spec, lambda, &data, &ivp_opts(ivp_tol))?;
    Ok(bvp.dim - linalg::rank(&bvp.matrix, RANK_RTOL))
}

/// Safeguarded bracketing iteration (Illinois regula falsi) on one real
/// part of the determinant along the real axis; tracks the best full
/// modulus seen.
fn polish_bracketed(
    spec: &OperatorSpec,
    mut a: f64,
    mut b: f64,
    part: fn(&Complex64) -> f64,
    mut fa: f64,
    mut fb: f64,
    opts: &ScanOptions,
) -> Option<(Complex64, f64)> {
    let det = |l: f64| char_det_with(spec, Complex64::new(l, 0.0), opts.ivp_tol).ok();
    let mut best = (Complex64::new(a, 0.0), f64::INFINITY);
    let mut side = 0i8;
    for _ in 0..opts.max_polish {
        let denom = fb - fa;
        let mut c = if denom != 0.0 { b - fb * (b - a) / denom } else { 0.5 * (a + b) };
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let dc = det(c)?;
        if dc.norm() < best.1 {
            best = (Complex64::new(c, 0.0), dc.norm());
        }
        let fc = part(&dc);
        if dc.norm() < 1e-14 || fc == 0.0 {
            break;
        }
        if fa * fc < 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if b - a < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    Some(best)
}

/// Secant iteration on the characteristic determinant, run to stagnation.
fn polish_secant(
    spec: &OperatorSpec,
    mut l0: Complex64,
    mut l1: Complex64,
    opts: &ScanOptions,
) -> Option<(Complex64, f64)> {
    let mut d0 = char_det_with(spec, l0, opts.ivp_tol).ok()?;
    let mut d1 = char_det_with(spec, l1, opts.ivp_tol).ok()?;
    let mut best = if d0.norm() < d1.norm() {
        (l0, d0.norm())
    } else {
        (l1, d1.norm())
    };
    for _ in 0..opts.max_polish {
        let denom = d1 - d0;
        if denom.norm() == 0.0 {
            break;
        }
        let l2 = l1 - d1 * (l1 - l0) / denom;
        if !l2.re.is_finite() || !l2.im.is_finite() {
            break;
        }
        let d2 = char_det_with(spec, l2, opts.ivp_tol).ok()?;
        l0 = l1;
        d0 = d1;
        l1 = l2;
        d1 = d2;
        if d2.norm() < best.1 {
            best = (l2, d2.norm());
        }
        if d2.norm() < 1e-14 {
            break;
        }
        // stagnation: step no longer moves the iterate
        if (l1 - l0).norm() < 1e-14 * (1.0 + l1.norm()) {
            break;
        }
    }
    Some(best)
}

fn dedup_roots(mut roots: Vec<(Complex64, f64)>, rtol: f64) -> Vec<(Complex64, f64)> {
    roots.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    let mut out: Vec<(Complex64, f64)> = Vec::new();
    for (l, r) in roots {
        match out.last_mut() {
            Some((prev, prev_r)) if (l - *prev).norm() <= rtol * prev.norm().max(1.0) => {
                if r < *prev_r {
                    *prev = l;
                    *prev_r = r;
                }
            }
            _ => out.push((l, r)),
        }
    }
    out
}

/// Scan a real window or complex rectangle for pencil eigenvalues.
pub fn find_eigenvalues(
    spec: &OperatorSpec,
    window: SpectralWindow,
    opts: &ScanOptions,
) -> Result<SpectralResult> {
    let mut candidates: Vec<(Complex64, f64)> = Vec::new();
    match window {
        SpectralWindow::Real { lo, hi } => {
            let n = opts.grid.max(3);
            let spacing = (hi - lo) / (n as f64 - 1.0);
            let mut values = Vec::with_capacity(n);
            for k in 0..n {
                let l = Complex64::new(lo + spacing * k as f64, 0.0);
                values.push((l, char_det_with(spec, l, opts.ivp_tol)?));
            }
            let max_abs = values.iter().map(|(_, d)| d.norm()).fold(0.0, f64::max).max(1e-300);
            let max_im = values.iter().map(|(_, d)| d.im.abs()).fold(0.0, f64::max);
            let max_re = values.iter().map(|(_, d)| d.re.abs()).fold(0.0, f64::max);
            // the determinant is often real (or purely imaginary) along a
            // real window; bracket the dominant part's sign changes then
            let part: Option<fn(&Complex64) -> f64> = if max_im <= 1e-9 * max_abs {
                Some(|d: &Complex64| d.re)
            } else if max_re <= 1e-9 * max_abs {
                Some(|d: &Complex64| d.im)
            } else {
                None
            };
            if let Some(part) = part {
                for w in values.windows(2) {
                    let (l0, d0) = w[0];
                    let (l1, d1) = w[1];
                    let (f0, f1) = (part(&d0), part(&d1));
                    if f0 == 0.0 {
                        candidates.push((l0, d0.norm()));
                    } else if f0 * f1 < 0.0 {
                        if let Some(best) =
                            polish_bracketed(spec, l0.re, l1.re, part, f0, f1, opts)
                        {
                            candidates.push(best);
                        }
                    }
                }
                if let Some(&(l, d)) = values.last() {
                    if part(&d) == 0.0 {
                        candidates.push((l, d.norm()));
                    }
                }
            } else {
                // genuinely complex along the window: polish every
                // interior |det| minimum and let the residual filter
                // discard the shallow ones
                for k in 0..n {
                    let here = values[k].1.norm();
                    let left = if k > 0 { values[k - 1].1.norm() } else { f64::INFINITY };
                    let right = if k + 1 < n {
                        values[k + 1].1.norm()
                    } else {
                        f64::INFINITY
                    };
                    if here <= left && here <= right {
                        let l = values[k].0;
                        let seed = l + Complex64::new(0.25 * spacing, 0.0);
                        if let Some(best) = polish_secant(spec, l, seed, opts) {
                            candidates.push(best);
                        }
                    }
                }
            }
            // keep polished roots near the window
            let margin = 2.0 * spacing;
            candidates.retain(|(l, r)| {
                *r < opts.root_tol && l.re >= lo - margin && l.re <= hi + margin
            });
        }
        SpectralWindow::Rect { re, im } => {
            let (nr, ni) = (opts.grid.max(3).min(200), opts.grid_im.max(3));
            let dr = (re.1 - re.0) / (nr as f64 - 1.0);
            let di = (im.1 - im.0) / (ni as f64 - 1.0);
            let mut values = vec![vec![Complex64::ZERO; ni]; nr];
            for (a, row) in values.iter_mut().enumerate() {
                for (b, slot) in row.iter_mut().enumerate() {
                    let l = Complex64::new(re.0 + dr * a as f64, im.0 + di * b as f64);
                    *slot = char_det_with(spec, l, opts.ivp_tol)?;
                }
            }
            let max_abs = values
                .iter()
                .flatten()
                .map(|d| d.norm())
                .fold(0.0, f64::max);
            for a in 0..nr {
                for b in 0..ni {
                    let here = values[a][b].norm();
                    let mut minimal = true;
                    for (da, db) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
                        let (aa, bb) = (a as i64 + da, b as i64 + db);
                        if aa >= 0 && bb >= 0 && (aa as usize) < nr && (bb as usize) < ni
                            && values[aa as usize][bb as usize].norm() < here
                        {
                            minimal = false;
                            break;
                        }
                    }
                    if minimal && here < 0.5 * max_abs.max(1e-300) {
                        let l = Complex64::new(re.0 + dr * a as f64, im.0 + di * b as f64);
                        if let Some(best) = newton_polish(spec, l, dr.min(di), opts) {
                            candidates.push(best);
                        }
                    }
                }
            }
            let margin = 2.0 * dr.max(di);
            candidates.retain(|(l, r)| {
                *r < opts.root_tol
                    && l.re >= re.0 - margin
                    && l.re <= re.1 + margin
                    && l.im >= im.0 - margin
                    && l.im <= im.1 + margin
            });
        }
    }

    let roots = dedup_roots(candidates, opts.dedup_rtol);
    let mut eigenvalues = Vec::with_capacity(roots.len());
    for (l, residual) in roots {
        let multiplicity = kernel_dimension_at(spec, l, opts.ivp_tol)?;
        if multiplicity == 0 {
            continue;
        }
        let eigenfunction = if opts.compute_eigenfunctions {
            eigenfunction_with(spec, l, opts.ivp_tol).ok()
        } else {
            None
        };
        eigenvalues.push(Eigenvalue {
            lambda: l,
            multiplicity,
            residual,
            eigenfunction,
        });
    }
    Ok(SpectralResult {
        eigenvalues,
        window,
        grid: opts.grid,
        root_tol: opts.root_tol,
    })
}

fn newton_polish(
    spec: &OperatorSpec,
    mut l: Complex64,
    scale: f64,
    opts: &ScanOptions,
) -> Option<(Complex64, f64)> {
    let mut best = (l, char_det_with(spec, l, opts.ivp_tol).ok()?.norm());
    let h = 1e-5 * scale.max(1e-8);
    for _ in 0..opts.max_polish {
        let d = char_det_with(spec, l, opts.ivp_tol).ok()?;
        if d.norm() < best.1 {
            best = (l, d.norm());
        }
        if d.norm() < 1e-14 {
            break;
        }
        let dp = char_det_with(spec, l + Complex64::new(h, 0.0), opts.ivp_tol).ok()?;
        let dm = char_det_with(spec, l - Complex64::new(h, 0.0), opts.ivp_tol).ok()?;
        let deriv = (dp - dm) / Complex64::new(2.0 * h, 0.0);
        if deriv.norm() == 0.0 {
            break;
        }
        let step = d / deriv;
        l -= step;
        if step.norm() < 1e-14 * (1.0 + l.norm()) {
            let d = char_det_with(spec, l, opts.ivp_tol).ok()?;
            if d.norm() < best.1 {
                best = (l, d.norm());
            }
            break;
        }
    }
    Some(best)
}

/// Kernel-direction eigenfunction at an eigenvalue, normalized so the
/// largest-magnitude sample of component 0 equals 1 (nonnegative real
/// part).
pub fn eigenfunction(spec: &OperatorSpec, lambda: Complex64) -> Result<VectorTrajectory> {
    eigenfunction_with(spec, lambda, 1e-10)
}

pub fn eigenfunction_with(
    spec: &OperatorSpec,
    lambda: Complex64,
    ivp_tol: f64,
) -> Result<VectorTrajectory> {
    let data = FunctionalData::zero(spec.m);
    let bvp = assemble_bvp(spec, lambda, &data, &ivp_opts(ivp_tol))?;
    let kernel = linalg::null_space(&bvp.matrix, RANK_RTOL);
    if kernel.ncols() == 0 {
        return Err(Error::NotAnEigenvalue { lambda });
    }
    let c = kernel.column(0).into_owned();
    let traj = bvp.trajectory(&c);
    // normalization: divide by the largest-|.| value of component 0
    let (_, mut best) = traj.peak(0);
    if best.norm() < 1e-12 {
        // degenerate top component; fall back to the other components
        for i in 1..traj.len() {
            let (_, v) = traj.peak(i);
            if v.norm() > best.norm() {
                best = v;
            }
        }
    }
    if best.norm() == 0.0 {
        return Err(Error::NotAnEigenvalue { lambda });
    }
    Ok(traj.scaled(best.inv()))
}

/// Numerical symmetry report for the pairing (Y, Z) -> <T Y, K Z>.
pub struct SymmetryReport {
    /// max |<TY, KZ> - conj(<TZ, KY>)| / (1 + |..| + |..|) over the trials.
    pub sigma: f64,
    pub pairs: usize,
}

/// Draw random admissible trial pairs and measure the defect of
/// sesquilinear symmetry of the form at lambda = 0.
pub fn check_symmetry(spec: &OperatorSpec, trials: usize) -> Result<SymmetryReport> {
    check_symmetry_seeded(spec, trials, 0x5eed_0001)
}

pub fn check_symmetry_seeded(
    spec: &OperatorSpec,
    trials: usize,
    seed: u64,
) -> Result<SymmetryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys = sample::sample_trial_space(spec, 2 * trials, &mut rng)?;
    let mut sigma: f64 = 0.0;
    for pair in ys.chunks(2) {
        if pair.len() < 2 {
            break;
        }
        let (y, z) = (&pair[0], &pair[1]);
        let ky = sample::trial_to_test(spec, y)?;
        let kz = sample::trial_to_test(spec, z)?;
        let t_yz = operator::apply_t(spec, Complex64::ZERO, y, &kz)?;
        let t_zy = operator::apply_t(spec, Complex64::ZERO, z, &ky)?;
        let defect = (t_yz - t_zy.conj()).norm() / (1.0 + t_yz.norm() + t_zy.norm());
        sigma = sigma.max(defect);
    }
    Ok(SymmetryReport {
        sigma,
        pairs: trials,
    })
}

/// Empirical numerical-range sector with vertex 0.
pub struct SectorEstimate {
    /// Half-opening angle of the smallest sector containing the samples.
    pub half_angle: f64,
    /// Direction of the sector axis.
    pub axis_angle: f64,
    pub samples: Vec<Complex64>,
}

/// Sample <T Y, K Y> over random admissible trials and return the
/// smallest sector with vertex 0 containing the nonzero samples.
pub fn numerical_range_sector(spec: &OperatorSpec, trials: usize) -> Result<SectorEstimate> {
    numerical_range_sector_seeded(spec, trials, 0x5eed_0002)
}

pub fn numerical_range_sector_seeded(
    spec: &OperatorSpec,
    trials: usize,
    seed: u64,
) -> Result<SectorEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys = sample::sample_trial_space(spec, trials, &mut rng)?;
    let mut samples = Vec::with_capacity(ys.len());
    for y in &ys {
        let ky = sample::trial_to_test(spec, y)?;
        samples.push(operator::apply_t(spec, Complex64::ZERO, y, &ky)?);
    }
    let max_mag = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let mut args: Vec<f64> = samples
        .iter()
        .filter(|s| s.norm() > 1e-12 * max_mag.max(1e-300))
        .map(|s| s.arg())
        .collect();
    if args.is_empty() {
        return Ok(SectorEstimate {
            half_angle: 0.0,
            axis_angle: 0.0,
            samples,
        });
    }
    args.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // smallest arc containing all angles: complement of the largest
    // circular gap
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut max_gap = args[0] + two_pi - args[args.len() - 1];
    let mut gap_end = args[0];
    for w in args.windows(2) {
        let gap = w[1] - w[0];
        if gap > max_gap {
            max_gap = gap;
            gap_end = w[1];
        }
    }
    let span = two_pi - max_gap;
    let half_angle = 0.5 * span;
    let mut axis = gap_end + half_angle;
    if axis > std::f64::consts::PI {
        axis -= two_pi;
    }
    Ok(SectorEstimate {
        half_angle,
        axis_angle: axis,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFunction;
    use crate::problems;

    #[test]
    fn beam_det_nonzero_at_origin() {
        let spec = problems::fourth_order_dirichlet(
            CoefficientFunction::one(),
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let d = char_det(&spec, Complex64::ZERO).unwrap();
        assert!(d.norm() > 1e-6, "clamped beam has trivial kernel at 0: {}", d);
    }

    #[test]
    fn periodic_det_vanishes_at_origin() {
        let spec = problems::third_order_periodic(
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let d = char_det(&spec, Complex64::ZERO).unwrap();
        assert!(d.norm() < 1e-10, "constants are periodic null directions: {}", d);
        assert_eq!(kernel_dimension_at(&spec, Complex64::ZERO, 1e-10).unwrap(), 1);
    }

    #[test]
    fn dirichlet_eigenvalues_classical() {
        let spec = problems::second_order_dirichlet(CoefficientFunction::zero()).unwrap();
        let res = find_eigenvalues(
            &spec,
            SpectralWindow::Real { lo: 1.0, hi: 100.0 },
            &ScanOptions {
                grid: 200,
                ..Default::default()
            },
        )
        .unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(res.eigenvalues.len(), 3);
        for (ev, expect) in res.eigenvalues.iter().zip([pi2, 4.0 * pi2, 9.0 * pi2]) {
            assert!(
                (ev.lambda.re - expect).abs() < 1e-6 * expect,
                "got {} want {}",
                ev.lambda,
                expect
            );
            assert_eq!(ev.multiplicity, 1);
        }
    }

    #[test]
    fn dirichlet_eigenfunction_is_sine() {
        let spec = problems::second_order_dirichlet(CoefficientFunction::zero()).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let ef = eigenfunction(&spec, Complex64::new(pi2, 0.0)).unwrap();
        for k in 0..=16 {
            let x = k as f64 / 16.0;
            let expect = (std::f64::consts::PI * x).sin();
            assert!(
                (ef.eval(0, x).re - expect).abs() < 1e-7,
                "x = {}: {} vs {}",
                x,
                ef.eval(0, x),
                expect
            );
        }
        // not an eigenvalue away from the spectrum
        assert!(eigenfunction(&spec, Complex64::new(20.0, 0.0)).is_err());
    }

    #[test]
    fn sector_of_dirichlet_laplacian_is_positive_axis() {
        let spec = problems::second_order_dirichlet(CoefficientFunction::zero()).unwrap();
        let sector = numerical_range_sector(&spec, 8).unwrap();
        for s in &sector.samples {
            assert!(s.re > 0.0);
            assert!(s.im.abs() <= 1e-9 * s.norm());
        }
    }
}
