//! Streaming random projection: `W += r_i ⊗ M_i` with `r_i ∈ {±1/√d}^d`.

use rand::Rng;

use super::{check_extract, check_row, embedding_from_buffer, Embedding, Sketcher, SketcherKind};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm_sq, Mat};
use crate::similarity::walk_rng;

#[derive(Clone, Debug)]
pub struct RandomProjection {
    d: usize,
    n: usize,
    w: Mat,
    seed: u64,
    rows_seen: u64,
    total_sq_norm: f64,
}

impl RandomProjection {
    pub fn new(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::invalid("sketch dimensions must be positive"));
        }
        Ok(RandomProjection {
            d,
            n,
            w: Mat::zeros(d, n),
            seed,
            rows_seen: 0,
            total_sq_norm: 0.0,
        })
    }

    pub(crate) fn from_parts(w: Mat, seed: u64, rows_seen: u64, total_sq_norm: f64) -> Result<Self> {
        let mut rp = RandomProjection::new(w.rows(), w.cols(), seed).map_err(|e| Error::Format(e.to_string()))?;
        rp.w = w;
        rp.rows_seen = rows_seen;
        rp.total_sq_norm = total_sq_norm;
        Ok(rp)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn buffer(&self) -> &Mat {
        &self.w
    }

    pub fn total_sq_norm(&self) -> f64 {
        self.total_sq_norm
    }

    /// The projection column used for row `index`.
    pub fn projection(&self, index: usize) -> Vec<f64> {
        let scale = 1.0 / (self.d as f64).sqrt();
        let mut rng = walk_rng(self.seed, index);
        (0..self.d)
            .map(|_| if rng.gen::<bool>() { scale } else { -scale })
            .collect()
    }

    pub fn merge(mut self, other: RandomProjection) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Incompatible("random projections differ in shape".into()));
        }
        if self.seed != other.seed {
            return Err(Error::Incompatible("random projections use different seeds".into()));
        }
        axpy(1.0, other.w.as_slice(), self.w.as_mut_slice());
        self.rows_seen += other.rows_seen;
        self.total_sq_norm += other.total_sq_norm;
        Ok(self)
    }
}

impl Sketcher for RandomProjection {
    fn kind(&self) -> SketcherKind {
        SketcherKind::RandomProjection
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

    fn insert_row(&mut self, index: usize, row: &[f64]) -> Result<()> {
        check_row(self.n, row)?;
        let r = self.projection(index);
        for (j, &c) in r.iter().enumerate() {
            axpy(c, row, self.w.row_mut(j));
        }
        self.rows_seen += 1;
        self.total_sq_norm += norm_sq(row);
        Ok(())
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        check_extract(k, self.d, self.rows_seen)?;
        embedding_from_buffer(
            self.w.clone(),
            k,
            exponent,
            SketcherKind::RandomProjection,
            self.rows_seen,
        )
    }
}
