//! Covariance and projection error of a sketch against the streamed matrix,
//! plus the exact truncated-SVD embedding used as the quality ceiling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm_sq, thin_svd, Mat};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sketch::{Embedding, SketcherKind};

/// Largest node count for which dense n × n work (oracle SVD, projection-error
/// denominators) is attempted.
pub const DEFAULT_DENSE_GUARD: usize = 20_000;

/// A matrix that can be streamed row by row any number of times.
pub trait RowSource {
    fn n_cols(&self) -> usize;

    fn for_each_row(&self, f: &mut dyn FnMut(&[f64])) -> Result<()>;

    /// `Mᵀ(M x)`.
    fn gram_apply(&self, x: &[f64], _exec: Execution) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_cols()];
        self.for_each_row(&mut |row| {
            let c = dot(row, x);
            if c != 0.0 {
                axpy(c, row, &mut y);
            }
        })?;
        Ok(y)
    }
}

/// Rows of an in-memory matrix.
#[derive(Clone, Copy, Debug)]
pub struct DenseRows<'a>(pub &'a Mat);

const APPLY_CHUNKS: usize = 16;

impl RowSource for DenseRows<'_> {
    fn n_cols(&self) -> usize {
        self.0.cols()
    }

    fn for_each_row(&self, f: &mut dyn FnMut(&[f64])) -> Result<()> {
        for i in 0..self.0.rows() {
            f(self.0.row(i));
        }
        Ok(())
    }

    fn gram_apply(&self, x: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let m = self.0;
        let rows = m.rows();
        let span = rows.div_ceil(APPLY_CHUNKS).max(1);
        let partials = exec.map_range(rows.div_ceil(span), |c| {
            let mut y = vec![0.0; m.cols()];
            for i in c * span..((c + 1) * span).min(rows) {
                let r = m.row(i);
                let s = dot(r, x);
                if s != 0.0 {
                    axpy(s, r, &mut y);
                }
            }
            y
        });
        let mut y = vec![0.0; m.cols()];
        for p in &partials {
            axpy(1.0, p, &mut y);
        }
        Ok(y)
    }
}

impl<T: AsRef<[f64]>> RowSource for [T] {
    fn n_cols(&self) -> usize {
        self.first().map_or(0, |r| r.as_ref().len())
    }

    fn for_each_row(&self, f: &mut dyn FnMut(&[f64])) -> Result<()> {
        for r in self {
            f(r.as_ref());
        }
        Ok(())
    }
}

/// Stopping policy for the matrix-free spectral norm.
#[derive(Clone, Copy, Debug)]
pub struct PowerIteration {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            max_iters: 200,
            rel_tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

/// `‖MᵀM − EᵀE‖₂ / ‖M‖_F²`, with `E` used as given (rows are `k × n`).
///
/// To measure a sketch rather than a downstream embedding, extract it with
/// singular-value exponent 1.
pub fn covariance_error(rows: &(impl RowSource + ?Sized), e: &Embedding) -> Result<f64> {
    covariance_error_with(rows, e, PowerIteration::default(), Execution::default())
}

pub fn covariance_error_with(
    rows: &(impl RowSource + ?Sized),
    e: &Embedding,
    policy: PowerIteration,
    exec: Execution,
) -> Result<f64> {
    let n = rows.n_cols();
    let mut count = 0usize;
    let mut fro = 0.0;
    let mut bad_len = None;
    rows.for_each_row(&mut |r| {
        count += 1;
        if r.len() != n {
            bad_len = Some(r.len());
        }
        fro += norm_sq(r);
    })?;
    if count == 0 {
        return Err(Error::EmptyInput("row stream is empty"));
    }
    if let Some(actual) = bad_len {
        return Err(Error::DimensionMismatch { expected: n, actual });
    }
    if e.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: e.n(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nx = norm_sq(&x).sqrt();
    x.iter_mut().for_each(|v| *v /= nx);

    let mut lambda = 0.0f64;
    for _ in 0..policy.max_iters {
        let mut y = rows.gram_apply(&x, exec)?;
        for k in 0..e.k() {
            let er = e.values().row(k);
            let c = dot(er, &x);
            if c != 0.0 {
                axpy(-c, er, &mut y);
            }
        }
        let next = norm_sq(&y).sqrt();
        if next == 0.0 {
            lambda = 0.0;
            break;
        }
        let done = (next - lambda).abs() <= policy.rel_tol * next;
        lambda = next;
        y.iter_mut().for_each(|v| *v /= next);
        x = y;
        if done {
            break;
        }
    }
    if fro == 0.0 {
        return Ok(if lambda == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(lambda / fro)
}

/// `‖M − π_k(M)‖_F² / ‖M − [M]_k‖_F²`, where `π_k` projects onto the top `k`
/// right singular vectors of the embedding. Needs the dense matrix, so both
/// dimensions are limited by `guard`.
pub fn projection_error(rows: &(impl RowSource + ?Sized), e: &Embedding, k: usize, guard: usize) -> Result<f64> {
    check_projection_args(rows.n_cols(), e, k)?;
    let residuals = rank_residuals(rows, guard)?;
    projection_error_given(rows, e, k, &residuals)
}

/// `‖M − [M]_k‖_F²` for `k = 0..=rank bound`, from one dense SVD of `M`.
pub fn rank_residuals(rows: &(impl RowSource + ?Sized), guard: usize) -> Result<Vec<f64>> {
    let n = rows.n_cols();
    if n > guard {
        return Err(Error::Capability(format!(
            "dense projection error needs n ≤ {guard}, got {n}"
        )));
    }
    let mut dense = Vec::new();
    let mut count = 0usize;
    let mut too_many = false;
    rows.for_each_row(&mut |r| {
        count += 1;
        if count > guard {
            too_many = true;
            return;
        }
        dense.extend_from_slice(r);
    })?;
    if too_many {
        return Err(Error::Capability(format!(
            "dense projection error needs at most {guard} rows"
        )));
    }
    if count == 0 {
        return Err(Error::EmptyInput("row stream is empty"));
    }
    if dense.len() != count * n {
        return Err(Error::DimensionMismatch {
            expected: count * n,
            actual: dense.len(),
        });
    }
    let svd = thin_svd(&Mat::from_vec(count, n, dense))?;
    let mut tails = vec![0.0; svd.singular_values.len() + 1];
    for i in (0..svd.singular_values.len()).rev() {
        tails[i] = tails[i + 1] + svd.singular_values[i] * svd.singular_values[i];
    }
    Ok(tails)
}

/// [`projection_error`] with the denominators precomputed by
/// [`rank_residuals`].
pub fn projection_error_given(
    rows: &(impl RowSource + ?Sized),
    e: &Embedding,
    k: usize,
    residuals: &[f64],
) -> Result<f64> {
    let dirs = check_projection_args(rows.n_cols(), e, k)?;
    let mut numer = 0.0;
    rows.for_each_row(&mut |r| {
        let mut res = r.to_vec();
        for j in 0..k {
            let v = dirs.vt.row(j);
            let c = dot(v, r);
            axpy(-c, v, &mut res);
        }
        numer += norm_sq(&res);
    })?;
    let fro = residuals.first().copied().unwrap_or(0.0);
    let denom = residuals.get(k).copied().unwrap_or(0.0);
    let floor = 1e-12 * fro;
    if denom <= floor {
        return Ok(if numer <= floor { 1.0 } else { f64::INFINITY });
    }
    Ok(numer / denom)
}

fn check_projection_args(n: usize, e: &Embedding, k: usize) -> Result<super::SvdResult> {
    if e.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: e.n(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("projection error needs k ≥ 1"));
    }
    let dirs = thin_svd(e.values())?;
    let available = dirs.singular_values.iter().filter(|&&s| s > 0.0).count();
    if k > available {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {available} directions available in the embedding"
        )));
    }
    Ok(dirs)
}

/// Top-`d` truncated SVD of the full matrix: rows `σᵢ^exponent · vᵢᵀ`.
pub fn svd_oracle_embedding(m: &Mat, d: usize, exponent: f64, guard: usize) -> Result<Embedding> {
    if m.rows() > guard || m.cols() > guard {
        return Err(Error::Capability(format!(
            "exact SVD is limited to {guard} nodes, matrix is {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let svd = thin_svd(m)?;
    let mut values = Mat::zeros(d, m.cols());
    for i in 0..d.min(svd.singular_values.len()) {
        let s = svd.singular_values[i].powf(exponent);
        for (dst, v) in values.row_mut(i).iter_mut().zip(svd.vt.row(i)) {
            *dst = s * v;
        }
    }
    Ok(Embedding::new(values, SketcherKind::Svd, m.rows() as u64, exponent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(values: Mat) -> Embedding {
        Embedding::new(values, SketcherKind::Svd, 0, 1.0)
    }

    #[test]
    fn identity_against_partial_basis() {
        let m = Mat::identity(4);
        let e = emb(Mat::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]));
        let ce = covariance_error(&DenseRows(&m), &e).unwrap();
        assert!((ce - 0.25).abs() < 1e-12, "{ce}");
    }

    #[test]
    fn exact_factor_has_zero_error() {
        let m = Mat::from_fn(12, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let svd = thin_svd(&m).unwrap();
        let mut f = svd.vt.clone();
        for i in 0..f.rows() {
            let s = svd.singular_values[i];
            f.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        let ce = covariance_error(&DenseRows(&m), &emb(f)).unwrap();
        assert!(ce < 1e-9, "{ce}");
    }

    #[test]
    fn empty_stream_is_an_error() {
        let rows: Vec<Vec<f64>> = Vec::new();
        let e = emb(Mat::zeros(1, 3));
        assert!(matches!(
            covariance_error(rows.as_slice(), &e),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn oracle_on_diagonal() {
        let m = Mat::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let e = svd_oracle_embedding(&m, 2, 0.5, DEFAULT_DENSE_GUARD).unwrap();
        let r0 = e.values().row(0);
        let r1 = e.values().row(1);
        assert!((r0[0] - 3f64.sqrt()).abs() < 1e-12 && r0[1].abs() < 1e-12);
        assert!((r1[1] - 2f64.sqrt()).abs() < 1e-12 && r1[0].abs() < 1e-12);
        assert!(matches!(svd_oracle_embedding(&m, 2, 0.5, 2), Err(Error::Capability(_))));
    }

    #[test]
    fn projection_error_checks_k() {
        let m = Mat::identity(3);
        let e = emb(Mat::from_rows(&[[1.0, 0.0, 0.0]]));
        assert!(projection_error(&DenseRows(&m), &e, 2, 100).is_err());
        assert!(matches!(
            projection_error(&DenseRows(&m), &e, 1, 2),
            Err(Error::Capability(_))
        ));
    }
}
