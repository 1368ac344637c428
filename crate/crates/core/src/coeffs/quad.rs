//! Adaptive Gauss–Kronrod quadrature over complex-valued closures.
//!
//! Panels are split at supplied breakpoints up front and then bisected
//! greedily at the largest error estimate until the absolute tolerance is
//! met. Integrable endpoint singularities are removed by a power-law
//! substitution before the adaptive pass (see [`integrate_power_endpoint`]).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
/// 7-point Gauss weights.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
/// 15-point Kronrod weights.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance on the total integral.
    pub abs_tol: f64,
    /// Cap on adaptive panels before giving up.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            max_panels: 4096,
        }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64) -> (Complex64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut resabs = f_center.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod += sum * WGK[j];
        resabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).norm();
    // Temper the raw estimate the QUADPACK way so that smooth panels are
    // not over-refined, with a floor at roundoff level.
    let mut err = raw;
    if resabs != 0.0 && raw != 0.0 {
        let scale = (200.0 * raw / (resabs * half.abs())).powf(1.5);
        if scale < 1.0 {
            err = resabs * half.abs() * scale;
        }
    }
    err = err.max(50.0 * f64::EPSILON * resabs * half.abs());
    (value, err)
}

/// Integrate `f` over [a, b], splitting at the supplied interior
/// breakpoints first.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::ZERO);
    }
    let mut cuts: Vec<f64> = vec![a];
    for &p in breakpoints {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.push(b);
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    cuts.dedup();

    let mut panels: Vec<Panel> = Vec::new();
    for w in cuts.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        panels.push(Panel {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }

    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        if total_err <= opts.abs_tol {
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                lo: a,
                hi: b,
                achieved: total_err,
                tolerance: opts.abs_tol,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.error.partial_cmp(&q.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Panel { lo, hi, .. } = panels[worst];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision
            let total_err: f64 = panels.iter().map(|p| p.error).sum();
            if total_err <= 1e3 * opts.abs_tol {
                return Ok(panels.iter().map(|p| p.value).sum());
            }
            return Err(Error::Quadrature {
                lo: a,
                hi: b,
                achieved: total_err,
                tolerance: opts.abs_tol,
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels[worst] = Panel {
            lo,
            hi: mid,
            value: v1,
            error: e1,
        };
        panels.push(Panel {
            lo: mid,
            hi,
            value: v2,
            error: e2,
        });
    }
}

/// Integrate `f` over [a, b] when `f ~ (x - a)^alpha` near `a` (or
/// `(b - x)^alpha` near `b`), with alpha in (-1, 0).
///
/// The substitution x = a + t^beta with beta = 1/(1 + alpha) turns the
/// integrand into a bounded one; Kronrod nodes are interior so the
/// transformed endpoint is never evaluated.
pub fn integrate_power_endpoint<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    alpha: f64,
    at_lower: bool,
    opts: QuadOptions,
) -> Result<Complex64> {
    if alpha <= -1.0 {
        return Err(Error::Domain {
            point: if at_lower { a } else { b },
            message: format!("endpoint exponent {} is not integrable", alpha),
        });
    }
    if a == b {
        return Ok(Complex64::ZERO);
    }
    let beta = 1.0 / (1.0 + alpha);
    let span = b - a;
    let t_max = span.powf(1.0 / beta);
    let g = |t: f64| -> Complex64 {
        let x = if at_lower {
            a + t.powf(beta)
        } else {
            b - t.powf(beta)
        };
        f(x) * (beta * t.powf(beta - 1.0))
    };
    integrate(g, 0.0, t_max, &[], opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sine() {
        let v = integrate(
            |x| Complex64::new((std::f64::consts::PI * x).sin(), 0.0),
            0.0,
            1.0,
            &[],
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v.re - 2.0 / std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn split_at_breakpoint() {
        let v = integrate(
            |x| Complex64::new(if x > 0.5 { 1.0 } else { 0.0 }, 0.0),
            0.0,
            1.0,
            &[0.5],
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v.re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let v = integrate_power_endpoint(
            |x| Complex64::new(x.powf(-0.5), 0.0),
            0.0,
            1.0,
            -0.5,
            true,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((v.re - 2.0).abs() < 1e-12);
    }
}
