//! Thin wrappers over nalgebra for the rank/null-space/least-squares
//! decisions the boundary machinery makes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative singular-value threshold below which values count as zero.
pub const RANK_RTOL: f64 = 1e-10;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn rank(m: &CMat, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|&&s| s > rtol * smax).count()
}

/// Orthonormal basis of the null space (columns), via SVD.
pub fn null_space(m: &CMat, rtol: f64) -> CMat {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return CMat::identity(ncols, ncols);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let r = if smax == 0.0 {
        0
    } else {
        svd.singular_values.iter().filter(|&&s| s > rtol * smax).count()
    };
    // rows r.. of V^T (conjugated back) span the kernel
    let k = ncols - r;
    let mut out = CMat::zeros(ncols, k);
    for (col, row) in (r..ncols).enumerate() {
        if row < v_t.nrows() {
            for j in 0..ncols {
                out[(j, col)] = v_t[(row, j)].conj();
            }
        }
    }
    // columns beyond v_t's rows (when nrows < ncols) are completed by SVD
    // only if asked for full matrices; nalgebra returns the thin factor, so
    // complete with a projector-based Gram-Schmidt if needed.
    if v_t.nrows() < ncols {
        let missing = ncols - v_t.nrows();
        let mut basis: Vec<CVec> = (0..(k - missing)).map(|c| out.column(c).into_owned()).collect();
        let mut col = k - missing;
        for j in 0..ncols {
            if col >= k {
                break;
            }
            let mut cand = CVec::zeros(ncols);
            cand[j] = Complex64::new(1.0, 0.0);
            // remove row-space and existing-kernel components
            for r_i in 0..v_t.nrows() {
                let row: CVec = v_t.row(r_i).transpose().map(|z| z.conj());
                let proj = row.dotc(&cand);
                cand -= row * proj;
            }
            for b in &basis {
                let proj = b.dotc(&cand);
                cand -= b * proj;
            }
            let n = cand.norm();
            if n > 1e-8 {
                let cand = cand / Complex64::new(n, 0.0);
                out.set_column(col, &cand);
                basis.push(cand);
                col += 1;
            }
        }
    }
    out
}

/// Indices of a maximal independent set of rows: the SVD fixes the count,
/// greedy residual pivoting picks which rows realize it. Deterministic
/// (largest residual first, lowest index on ties).
pub fn independent_rows(m: &CMat, rtol: f64) -> Vec<usize> {
    let r = rank(m, rtol);
    if r == 0 {
        return Vec::new();
    }
    let nrows = m.nrows();
    let mut residual: Vec<CVec> = (0..nrows).map(|i| m.row(i).transpose()).collect();
    let mut taken = vec![false; nrows];
    let mut selected = Vec::with_capacity(r);
    for _ in 0..r {
        let mut best = usize::MAX;
        let mut best_norm = -1.0;
        for (i, v) in residual.iter().enumerate() {
            if !taken[i] && v.norm() > best_norm {
                best = i;
                best_norm = v.norm();
            }
        }
        taken[best] = true;
        selected.push(best);
        if best_norm > 0.0 {
            let e = residual[best].clone() / Complex64::new(best_norm, 0.0);
            for (i, v) in residual.iter_mut().enumerate() {
                if !taken[i] {
                    let proj = e.dotc(v);
                    *v -= &e * proj;
                }
            }
        }
    }
    selected.sort_unstable();
    selected
}

pub struct LstsqOutcome {
    pub solution: CVec,
    pub residual: f64,
    pub rank: usize,
    pub kernel: CMat,
    /// Two smallest retained/discarded singular values, for conditioning
    /// ambiguity reports.
    pub gap: Option<(f64, f64)>,
}

/// Minimum-norm least-squares solve with rank reveal.
pub fn lstsq_min_norm(m: &CMat, b: &CVec, rtol: f64) -> LstsqOutcome {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return LstsqOutcome {
            solution: CVec::zeros(ncols),
            residual: 0.0,
            rank: 0,
            kernel: CMat::identity(ncols, ncols),
            gap: None,
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U");
    let v_t = svd.v_t.as_ref().expect("V^T");
    let s = &svd.singular_values;
    let smax = s.max();
    let thresh = rtol * smax;
    let r = if smax == 0.0 {
        0
    } else {
        s.iter().filter(|&&sv| sv > thresh).count()
    };
    // x = V S^+ U^H b over the retained spectrum
    let mut x = CVec::zeros(ncols);
    for k in 0..r {
        let uk = u.column(k);
        let coef = uk.dotc(b) / Complex64::new(s[k], 0.0);
        for j in 0..ncols {
            x[j] += v_t[(k, j)].conj() * coef;
        }
    }
    let residual = (m * &x - b).norm();
    // ambiguity: smallest kept vs largest dropped within a factor of 10 of
    // the threshold on both sides
    let mut gap = None;
    if r > 0 && r < s.len() {
        let kept = s[r - 1];
        let dropped = s[r];
        if kept < 10.0 * thresh && dropped > 0.1 * thresh {
            gap = Some((kept, dropped));
        }
    }
    LstsqOutcome {
        solution: x,
        residual,
        rank: r,
        kernel: null_space(m, rtol),
        gap,
    }
}

pub fn determinant(m: &CMat) -> Complex64 {
    m.clone().lu().determinant()
}

/// 2-norm condition number via SVD.
pub fn condition_number(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

pub fn invert(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> CMat {
        CMat::from_row_slice(
            rows,
            cols,
            &data.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn rank_and_nullspace() {
        let m = cm(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&m, RANK_RTOL), 1);
        let ns = null_space(&m, RANK_RTOL);
        assert_eq!(ns.ncols(), 2);
        let prod = &m * &ns;
        assert!(prod.norm() < 1e-10);
    }

    #[test]
    fn min_norm_solution_of_underdetermined() {
        let m = cm(1, 2, &[1.0, 1.0]);
        let b = CVec::from_element(1, Complex64::new(2.0, 0.0));
        let out = lstsq_min_norm(&m, &b, RANK_RTOL);
        assert!((out.solution[0].re - 1.0).abs() < 1e-12);
        assert!((out.solution[1].re - 1.0).abs() < 1e-12);
        assert_eq!(out.rank, 1);
        assert_eq!(out.kernel.ncols(), 1);
    }

    #[test]
    fn independent_rows_of_rank_deficient() {
        let m = cm(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        let rows = independent_rows(&m, RANK_RTOL);
        assert_eq!(rows.len(), 2);
        assert!(rows.contains(&2));
    }
}
