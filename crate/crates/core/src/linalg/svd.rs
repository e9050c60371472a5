//! Thin SVD of short-wide matrices.
//!
//! The ℓ × n input (ℓ ≤ n, otherwise the transpose is decomposed) is rotated
//! in place by the eigenvectors of its ℓ × ℓ Gram matrix, so the rows become
//! mutually orthogonal with norms equal to the singular values. When the
//! spectrum is wide a second Gram/Jacobi pass over the rotated rows restores
//! full accuracy for the small singular values, and rows that are still weak
//! relative to the top one are re-orthogonalized explicitly.

use super::eigen::symmetric_eigen;
use super::{axpy, dot, norm_sq, Mat};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// `M = U · diag(singular_values) · Vt` with `r = min(ℓ, n)`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// ℓ × r, orthonormal columns.
    pub u: Mat,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// r × n, orthonormal rows. The largest-magnitude entry of each row is
    /// positive.
    pub vt: Mat,
}

const COL_BLOCK: usize = 512;
const GRAM_CHUNKS: usize = 8;
/// Eigenvalue ratio below which the second pass runs.
const REFINE_RATIO: f64 = 1e-4;
/// Singular values below this fraction of the largest are treated as zero.
const NULL_RATIO: f64 = 1e-13;
/// Rows weaker than this fraction of the largest are re-orthogonalized.
const WEAK_RATIO: f64 = 1e-2;

pub fn thin_svd(m: &Mat) -> Result<SvdResult> {
    thin_svd_owned(m.clone())
}

pub fn thin_svd_owned(m: Mat) -> Result<SvdResult> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::invalid("thin_svd needs a non-empty matrix"));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if m.rows() <= m.cols() {
        return Ok(svd_rows_in_place(m, Execution::default(), true));
    }
    // Mᵀ = U' Σ V'ᵀ  ⇒  M = V' Σ U'ᵀ.
    let t = svd_rows_in_place(m.transpose(), Execution::default(), true);
    let mut out = SvdResult {
        u: t.vt.transpose(),
        singular_values: t.singular_values,
        vt: t.u.transpose(),
    };
    fix_signs(&mut out.u, &mut out.vt);
    Ok(out)
}

/// Decomposes an ℓ × n matrix with ℓ ≤ n, consuming its storage for `Vt`.
///
/// With `complete_null` false, rows of `Vt` belonging to zero singular values
/// are left as zero rows instead of being completed to an orthonormal set.
pub(crate) fn svd_rows_in_place(mut b: Mat, exec: Execution, complete_null: bool) -> SvdResult {
    let l = b.rows();
    let n = b.cols();
    debug_assert!(l <= n);

    // Pass 1: rotate rows by eigenvectors of B Bᵀ.
    let g = gram(&b, exec);
    let eig = symmetric_eigen(&g);
    left_multiply_in_place(&eig.vectors, &mut b, exec);
    // B_orig = Qᵀ Y, so U = Qᵀ.
    let mut u = eig.vectors.transpose();

    let top = eig.values[0].max(0.0);
    if top > 0.0 && eig.values.iter().any(|&v| v < REFINE_RATIO * top) {
        let g2 = gram(&b, exec);
        let eig2 = symmetric_eigen(&g2);
        left_multiply_in_place(&eig2.vectors, &mut b, exec);
        u = u.matmul(&eig2.vectors.transpose());
    }

    let mut sigma: Vec<f64> = (0..l).map(|i| norm_sq(b.row(i)).sqrt()).collect();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    if order.iter().enumerate().any(|(k, &i)| k != i) {
        b = permute_rows(&b, &order);
        u = permute_cols(&u, &order);
        sigma = order.iter().map(|&i| sigma[i]).collect();
    }

    let s1 = sigma[0];
    let mut rank = 0;
    for i in 0..l {
        if s1 > 0.0 && sigma[i] > NULL_RATIO * s1 {
            rank += 1;
            let inv = 1.0 / sigma[i];
            b.row_mut(i).iter_mut().for_each(|x| *x *= inv);
        } else {
            sigma[i] = 0.0;
            b.row_mut(i).iter_mut().for_each(|x| *x = 0.0);
        }
    }
    for i in 0..rank {
        if sigma[i] < WEAK_RATIO * s1 {
            reorthogonalize(&mut b, i);
        }
    }
    if complete_null && rank < l {
        complete_basis(&mut b, rank);
    }
    fix_signs(&mut u, &mut b);
    SvdResult {
        u,
        singular_values: sigma,
        vt: b,
    }
}

/// Column-blocked `B Bᵀ`; the partial sums are combined in a fixed order so the
/// result does not depend on the execution mode.
fn gram(b: &Mat, exec: Execution) -> Mat {
    let l = b.rows();
    let n = b.cols();
    let chunks = GRAM_CHUNKS.min(n.div_ceil(COL_BLOCK)).max(1);
    let span = n.div_ceil(chunks);
    let partials = exec.map_range(chunks, |c| {
        let lo = c * span;
        let hi = ((c + 1) * span).min(n);
        let mut g = vec![0.0; l * l];
        let mut start = lo;
        while start < hi {
            let end = (start + COL_BLOCK).min(hi);
            for i in 0..l {
                let ri = &b.row(i)[start..end];
                for j in 0..=i {
                    g[i * l + j] += dot(ri, &b.row(j)[start..end]);
                }
            }
            start = end;
        }
        g
    });
    let mut g = Mat::zeros(l, l);
    for p in &partials {
        for (dst, src) in g.as_mut_slice().iter_mut().zip(p) {
            *dst += src;
        }
    }
    for i in 0..l {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

/// `B ← Q · B` for square `Q`, one column block at a time.
fn left_multiply_in_place(q: &Mat, b: &mut Mat, exec: Execution) {
    let l = b.rows();
    let n = b.cols();
    let blocks = n.div_ceil(COL_BLOCK);
    let group = GRAM_CHUNKS;
    let mut first = 0;
    while first < blocks {
        let last = (first + group).min(blocks);
        let src: &Mat = b;
        let results = exec.map_range(last - first, |k| {
            let start = (first + k) * COL_BLOCK;
            let end = (start + COL_BLOCK).min(n);
            let w = end - start;
            let mut out = vec![0.0; l * w];
            for j in 0..l {
                let dst = &mut out[j * w..(j + 1) * w];
                for (i, &qji) in q.row(j).iter().enumerate() {
                    if qji != 0.0 {
                        axpy(qji, &src.row(i)[start..end], dst);
                    }
                }
            }
            out
        });
        for (k, out) in results.into_iter().enumerate() {
            let start = (first + k) * COL_BLOCK;
            let end = (start + COL_BLOCK).min(n);
            let w = end - start;
            for j in 0..l {
                b.row_mut(j)[start..end].copy_from_slice(&out[j * w..(j + 1) * w]);
            }
        }
        first = last;
    }
}

fn permute_rows(m: &Mat, order: &[usize]) -> Mat {
    let mut out = Mat::zeros(m.rows(), m.cols());
    for (dst, &src) in order.iter().enumerate() {
        out.row_mut(dst).copy_from_slice(m.row(src));
    }
    out
}

fn permute_cols(m: &Mat, order: &[usize]) -> Mat {
    Mat::from_fn(m.rows(), order.len(), |i, j| m[(i, order[j])])
}

/// Two rounds of Gram-Schmidt of row `i` against rows `0..i`, then normalize.
fn reorthogonalize(b: &mut Mat, i: usize) {
    let cols = b.cols();
    let (prev, rest) = b.as_mut_slice().split_at_mut(i * cols);
    let row = &mut rest[..cols];
    for _ in 0..2 {
        for p in prev.chunks_exact(cols) {
            let c = dot(p, row);
            if c != 0.0 {
                axpy(-c, p, row);
            }
        }
    }
    let nrm = norm_sq(row).sqrt();
    if nrm > 0.0 {
        row.iter_mut().for_each(|x| *x /= nrm);
    }
}

/// Fills rows `rank..` with unit vectors orthogonal to everything above,
/// seeding each from the coordinate axis least covered so far.
fn complete_basis(b: &mut Mat, rank: usize) {
    let n = b.cols();
    let mut leverage = vec![0.0; n];
    for i in 0..rank {
        for (lv, x) in leverage.iter_mut().zip(b.row(i)) {
            *lv += x * x;
        }
    }
    for i in rank..b.rows() {
        let k = (0..n).min_by(|&a, &c| leverage[a].total_cmp(&leverage[c])).unwrap_or(0);
        {
            let row = b.row_mut(i);
            row.iter_mut().for_each(|x| *x = 0.0);
            row[k] = 1.0;
        }
        reorthogonalize(b, i);
        for (lv, x) in leverage.iter_mut().zip(b.row(i)) {
            *lv += x * x;
        }
    }
}

/// Makes the largest-magnitude entry of each `Vt` row positive, flipping the
/// matching column of `U`.
fn fix_signs(u: &mut Mat, vt: &mut Mat) {
    for i in 0..vt.rows() {
        let row = vt.row(i);
        let mut best = 0usize;
        for (j, x) in row.iter().enumerate() {
            if x.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            vt.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            if i < u.cols() {
                for r in 0..u.rows() {
                    u[(r, i)] = -u[(r, i)];
                }
            }
        }
    }
}

impl SvdResult {
    pub fn reconstruct(&self) -> Mat {
        let mut svt = self.vt.clone();
        for (i, &s) in self.singular_values.iter().enumerate() {
            svt.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        self.u.matmul(&svt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn check(m: &Mat, tol: f64) -> SvdResult {
        let svd = thin_svd(m).unwrap();
        let r = m.rows().min(m.cols());
        assert_eq!(svd.u.cols(), r);
        assert_eq!(svd.vt.rows(), r);
        let fro = m.frobenius_sq().sqrt().max(f64::MIN_POSITIVE);
        let resid = {
            let rec = svd.reconstruct();
            let mut s = 0.0;
            for (a, b) in rec.as_slice().iter().zip(m.as_slice()) {
                s += (a - b) * (a - b);
            }
            s.sqrt()
        };
        assert!(resid <= tol * fro, "residual {resid:e}");
        let utu = svd.u.transpose().matmul(&svd.u);
        assert!(
            utu.max_abs_diff(&Mat::identity(r)) <= tol,
            "UᵀU off by {:e}",
            utu.max_abs_diff(&Mat::identity(r))
        );
        let vvt = svd.vt.gram_rows();
        assert!(
            vvt.max_abs_diff(&Mat::identity(r)) <= tol,
            "VVᵀ off by {:e}",
            vvt.max_abs_diff(&Mat::identity(r))
        );
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        svd
    }

    #[test]
    fn identity() {
        let svd = check(&Mat::identity(3), 1e-12);
        assert_eq!(svd.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn embedded_diagonal() {
        let mut m = Mat::zeros(2, 5);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = 2.0;
        let svd = check(&m, 1e-12);
        assert_eq!(svd.singular_values, vec![3.0, 2.0]);
        assert_eq!(svd.vt.row(0), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(svd.vt.row(1), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_wide_and_tall() {
        let mut r = lcg(11);
        let wide = Mat::from_fn(8, 40, |_, _| r());
        check(&wide, 1e-10);
        let tall = Mat::from_fn(30, 7, |_, _| r());
        check(&tall, 1e-10);
    }

    #[test]
    fn rank_deficient_gets_orthonormal_completion() {
        let mut r = lcg(3);
        let a = Mat::from_fn(3, 20, |_, _| r());
        // Rows 3..6 are combinations of rows 0..3.
        let mix = Mat::from_fn(6, 3, |i, j| if i < 3 { (i == j) as u8 as f64 } else { r() });
        let m = mix.matmul(&a);
        let svd = check(&m, 1e-10);
        assert!(svd.singular_values[3..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn graded_spectrum() {
        let mut r = lcg(5);
        let base = Mat::from_fn(10, 60, |_, _| r());
        let q = thin_svd(&base).unwrap().vt;
        let sv: Vec<f64> = (0..10).map(|i| 10f64.powi(-(i as i32))).collect();
        let mut m = q.clone();
        for i in 0..10 {
            m.row_mut(i).iter_mut().for_each(|x| *x *= sv[i]);
        }
        let svd = check(&m, 1e-10);
        for i in 0..10 {
            assert!(
                (svd.singular_values[i] - sv[i]).abs() <= 1e-12 * sv[i].max(1e-3),
                "σ{i}"
            );
        }
    }

    #[test]
    fn zero_matrix() {
        let svd = check(&Mat::zeros(3, 4), 1e-12);
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(thin_svd(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn execution_modes_agree() {
        let mut r = lcg(9);
        let m = Mat::from_fn(16, 1500, |_, _| r());
        let a = svd_rows_in_place(m.clone(), Execution::Sequential, true);
        let b = svd_rows_in_place(m, Execution::Parallel, true);
        assert_eq!(a.singular_values, b.singular_values);
        assert_eq!(a.vt, b.vt);
    }
}
