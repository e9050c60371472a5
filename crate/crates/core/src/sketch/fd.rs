//! Frequent Directions over a `2d × n` row buffer.
//!
//! Raw rows fill the buffer with weight 1. When it is full, the weighted
//! buffer `diag(σ̂)·W` is decomposed, every retained direction loses the
//! energy of the `d`-th singular value, and the bottom half is freed. This
//! keeps `0 ≼ MᵀM − BᵀB ≼ (‖M‖_F² / d)·I` for every prefix of the stream.

use super::{check_extract, check_row, scale_factor, Embedding, Sketcher, SketcherKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{svd_rows_in_place, thin_svd_owned, Mat, SvdResult};

#[derive(Clone, Debug)]
pub struct FrequentDirections {
    d: usize,
    n: usize,
    /// `2d × n`; slots at and after `fill` are zero.
    w: Mat,
    /// Per-slot weight; 1 for raw rows and empty slots.
    sigma: Vec<f64>,
    /// Next free slot.
    fill: usize,
    rows_seen: u64,
    /// Raw rows were inserted since the last decomposition.
    dirty: bool,
    exec: Execution,
}

impl FrequentDirections {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("sketch dimension must be at least 1"));
        }
        if n == 0 {
            return Err(Error::invalid("row length must be at least 1"));
        }
        Ok(FrequentDirections {
            d,
            n,
            w: Mat::zeros(2 * d, n),
            sigma: vec![1.0; 2 * d],
            fill: 0,
            rows_seen: 0,
            dirty: false,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub(crate) fn from_parts(d: usize, n: usize, w: Mat, sigma: Vec<f64>, fill: usize, rows_seen: u64) -> Result<Self> {
        if d == 0 || n == 0 || w.rows() != 2 * d || w.cols() != n || sigma.len() != 2 * d || fill >= 2 * d {
            return Err(Error::Format("inconsistent frequent-directions state".into()));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || !w.is_finite() {
            return Err(Error::Format("non-finite or negative sketch values".into()));
        }
        if (fill as u64) > rows_seen {
            return Err(Error::Format("fill exceeds rows_seen".into()));
        }
        Ok(FrequentDirections {
            d,
            n,
            w,
            sigma,
            fill,
            rows_seen,
            dirty: fill > 0,
            exec: Execution::default(),
        })
    }

    pub fn buffer(&self) -> &Mat {
        &self.w
    }

    pub fn sigma_hat(&self) -> &[f64] {
        &self.sigma
    }

    pub fn fill(&self) -> usize {
        self.fill
    }

    /// `diag(σ̂)·W`, the rows whose Gram matrix is the covariance estimate.
    pub fn weighted_buffer(&self) -> Mat {
        let mut b = self.w.clone();
        for (i, &s) in self.sigma.iter().enumerate() {
            b.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        b
    }

    fn decompose(&mut self) -> SvdResult {
        let mut b = std::mem::replace(&mut self.w, Mat::zeros(0, 0));
        for (i, &s) in self.sigma.iter().enumerate() {
            if s != 1.0 {
                b.row_mut(i).iter_mut().for_each(|x| *x *= s);
            }
        }
        if b.rows() <= b.cols() {
            svd_rows_in_place(b, self.exec, false)
        } else {
            thin_svd_owned(b).expect("sketch rows are finite")
        }
    }

    /// Installs the first `keep` right singular vectors as buffer rows.
    fn install(&mut self, svd: SvdResult, keep: usize) {
        let rows = 2 * self.d;
        let mut vt = svd.vt;
        if vt.rows() == rows {
            for i in keep..rows {
                vt.row_mut(i).iter_mut().for_each(|x| *x = 0.0);
            }
            self.w = vt;
        } else {
            let mut w = Mat::zeros(rows, self.n);
            for i in 0..keep.min(vt.rows()) {
                w.row_mut(i).copy_from_slice(vt.row(i));
            }
            self.w = w;
        }
    }

    /// Decomposes the full buffer and shrinks by the `d`-th singular value.
    fn shrink(&mut self) {
        let svd = self.decompose();
        self.apply_shrink(svd);
    }

    /// Keeps the top `d − 1` directions of `svd`, each reduced by the energy of
    /// the `d`-th singular value, and frees the rest of the buffer.
    fn apply_shrink(&mut self, svd: SvdResult) {
        let d = self.d;
        let s = &svd.singular_values;
        let delta = s.get(d - 1).copied().unwrap_or(0.0);
        let delta_sq = delta * delta;
        for i in 0..d {
            let si = s.get(i).copied().unwrap_or(0.0);
            self.sigma[i] = (si * si - delta_sq).max(0.0).sqrt();
        }
        self.sigma[d - 1] = 0.0;
        for x in &mut self.sigma[d..] {
            *x = 1.0;
        }
        self.install(svd, d);
        for i in 0..d {
            if self.sigma[i] == 0.0 {
                self.w.row_mut(i).iter_mut().for_each(|x| *x = 0.0);
            }
        }
        self.fill = d;
        self.dirty = false;
    }

    /// Rotates the occupied slots to orthogonal directions without losing any
    /// energy. The result is cached until the next insert.
    pub fn compress(&mut self) {
        if !self.dirty {
            return;
        }
        let fill = self.fill;
        let svd = self.decompose();
        for i in 0..2 * self.d {
            self.sigma[i] = if i < fill {
                svd.singular_values.get(i).copied().unwrap_or(0.0)
            } else {
                1.0
            };
        }
        self.install(svd, fill);
        self.dirty = false;
    }

    /// Frequent Directions over the concatenated weighted rows of both
    /// sketches. Up to `2d − 1` rows are kept as they are; otherwise a single
    /// shrink of the stacked rows is applied, so the merged covariance does not
    /// depend on the argument order.
    pub fn merge(mut self, mut other: FrequentDirections) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Incompatible(format!(
                "cannot merge d={}, n={} with d={}, n={}",
                self.d, self.n, other.d, other.n
            )));
        }
        self.compress();
        other.compress();
        let (d, n) = (self.d, self.n);
        let rows: Vec<(f64, &[f64])> = [&self, &other]
            .into_iter()
            .flat_map(|part| (0..part.fill).map(move |i| (part.sigma[i], part.w.row(i))))
            .filter(|&(s, _)| s > 0.0)
            .collect();
        let mut out = FrequentDirections::new(d, n)?.with_execution(self.exec);
        if rows.len() < 2 * d {
            for (s, r) in rows {
                let i = out.fill;
                out.w.row_mut(i).iter_mut().zip(r).for_each(|(dst, x)| *dst = s * x);
                out.fill += 1;
            }
            out.dirty = out.fill > 0;
        } else {
            let mut stacked = Mat::zeros(rows.len(), n);
            for (i, (s, r)) in rows.into_iter().enumerate() {
                stacked.row_mut(i).iter_mut().zip(r).for_each(|(dst, x)| *dst = s * x);
            }
            let svd = if stacked.rows() <= n {
                svd_rows_in_place(stacked, self.exec, false)
            } else {
                thin_svd_owned(stacked)?
            };
            out.apply_shrink(svd);
        }
        out.rows_seen = self.rows_seen + other.rows_seen;
        Ok(out)
    }

    fn push(&mut self, row: &[f64]) {
        self.w.row_mut(self.fill).copy_from_slice(row);
        self.sigma[self.fill] = 1.0;
        self.fill += 1;
        self.rows_seen += 1;
        self.dirty = true;
        if self.fill == 2 * self.d {
            self.shrink();
        }
    }
}

impl Sketcher for FrequentDirections {
    fn kind(&self) -> SketcherKind {
        SketcherKind::Fd
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn n(&self) -> usize {
        self.n
    }

    fn rows_seen(&self) -> u64 {
        self.rows_seen
    }

    fn insert_row(&mut self, _index: usize, row: &[f64]) -> Result<()> {
        check_row(self.n, row)?;
        self.push(row);
        Ok(())
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        check_extract(k, self.d, self.rows_seen)?;
        self.compress();
        let mut values = Mat::zeros(k, self.n);
        for i in 0..k {
            let s = scale_factor(self.sigma[i], exponent);
            if s == 0.0 {
                continue;
            }
            for (dst, x) in values.row_mut(i).iter_mut().zip(self.w.row(i)) {
                *dst = s * x;
            }
        }
        Ok(Embedding::new(values, SketcherKind::Fd, self.rows_seen, exponent))
    }
}
