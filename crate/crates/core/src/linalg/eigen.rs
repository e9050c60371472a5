use super::Mat;

/// Eigen-decomposition `A = Qᵀ diag(values) Q` of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in non-increasing order.
    pub values: Vec<f64>,
    /// Row `j` is the unit eigenvector for `values[j]`.
    pub vectors: Mat,
}

const MAX_SWEEPS: usize = 80;
/// Above this order the tridiagonal QR solver is used instead of Jacobi.
const JACOBI_MAX: usize = 48;

/// Eigen-decomposition of a symmetric matrix (lower triangle read).
pub fn symmetric_eigen(a: &Mat) -> SymmetricEigen {
    if a.rows() <= JACOBI_MAX {
        jacobi_eigen(a)
    } else {
        tridiagonal_eigen(a)
    }
}

/// Householder tridiagonalization plus implicit QR, via nalgebra.
fn tridiagonal_eigen(a: &Mat) -> SymmetricEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)] });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| eig.eigenvectors[(c, order[r])]);
    SymmetricEigen { values, vectors }
}

/// Cyclic Jacobi eigensolver.
///
/// Rotations are skipped only when `|a_pq| ≤ ε·sqrt(|a_pp·a_qq|)`, which gives
/// small eigenvalues of graded positive definite matrices relative accuracy.
/// Only the lower triangle is read.
pub fn jacobi_eigen(a: &Mat) -> SymmetricEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let mut w = a.clone();
    for i in 0..n {
        for j in 0..i {
            w[(j, i)] = w[(i, j)];
        }
    }
    let mut vt = Mat::identity(n);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                if apq.abs() <= eps * (app * aqq).abs().sqrt() {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut w, p, q, c, s);
                w[(p, p)] = app - t * apq;
                w[(q, q)] = aqq + t * apq;
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.row_mut(dst).copy_from_slice(vt.row(src));
    }
    SymmetricEigen { values, vectors }
}

/// Applies the rotation to rows/columns `p`, `q` of symmetric `w`, leaving the
/// 2×2 block to the caller.
#[inline]
fn rotate(w: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = w.cols();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[(p, k)];
        let akq = w[(q, k)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        w[(p, k)] = np;
        w[(q, k)] = nq;
        w[(k, p)] = np;
        w[(k, q)] = nq;
    }
}

#[inline]
pub(super) fn rotate_rows(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let (lo, hi) = m.as_mut_slice().split_at_mut(q * cols);
    let rp = &mut lo[p * cols..(p + 1) * cols];
    let rq = &mut hi[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_sorted() {
        let a = Mat::from_rows(&[[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]]);
        let e = symmetric_eigen(&a);
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.row(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two() {
        let a = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = symmetric_eigen(&a);
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let v = e.vectors.row(0);
        assert!((v[0].abs() - v[1].abs()).abs() < 1e-14);
    }

    fn check_random_symmetric(n: usize, solver: fn(&Mat) -> SymmetricEigen) {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let b = Mat::from_fn(n, n, |_, _| next());
        let a = b.matmul(&b.transpose());
        let e = solver(&a);
        let q = &e.vectors;
        let mut lam_q = q.clone();
        for i in 0..n {
            lam_q.row_mut(i).iter_mut().for_each(|x| *x *= e.values[i]);
        }
        let rec = q.transpose().matmul(&lam_q);
        assert!(rec.max_abs_diff(&a) < 1e-11 * n as f64);
        assert!(q.matmul(&q.transpose()).max_abs_diff(&Mat::identity(n)) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reconstructs_random_symmetric() {
        check_random_symmetric(12, jacobi_eigen);
        check_random_symmetric(12, tridiagonal_eigen);
        check_random_symmetric(90, symmetric_eigen);
    }

    #[test]
    fn solvers_agree() {
        let n = 60;
        let a = Mat::from_fn(n, n, |i, j| {
            1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 }
        });
        let x = jacobi_eigen(&a);
        let y = tridiagonal_eigen(&a);
        for (p, q) in x.values.iter().zip(&y.values) {
            assert!((p - q).abs() < 1e-12, "{p} {q}");
        }
    }
}
