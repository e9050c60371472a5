//! Row-streaming covariance sketches and anytime embedding extraction.

mod checkpoint;
mod embedding;
mod exact;
mod fd;
mod hashing;
mod projection;
mod sampling;

use std::fmt;
use std::str::FromStr;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use embedding::{Embedding, LabeledEmbedding};
pub use exact::ExactSvd;
pub use fd::FrequentDirections;
pub use hashing::{HashFamily, Hashing};
pub use projection::RandomProjection;
pub use sampling::{ReservoirSlot, Sampling};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{thin_svd_owned, Mat};
use crate::similarity::SimilarityRow;

/// Default singular-value exponent applied at extraction.
pub const DEFAULT_EXPONENT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SketcherKind {
    Fd,
    Hashing,
    RandomProjection,
    Sampling,
    /// Exact truncated SVD of the collected matrix (desk scale only).
    Svd,
}

impl SketcherKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SketcherKind::Fd => "fd",
            SketcherKind::Hashing => "hash",
            SketcherKind::RandomProjection => "rp",
            SketcherKind::Sampling => "sample",
            SketcherKind::Svd => "svd",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            SketcherKind::Fd => 0,
            SketcherKind::Hashing => 1,
            SketcherKind::RandomProjection => 2,
            SketcherKind::Sampling => 3,
            SketcherKind::Svd => 4,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => SketcherKind::Fd,
            1 => SketcherKind::Hashing,
            2 => SketcherKind::RandomProjection,
            3 => SketcherKind::Sampling,
            4 => SketcherKind::Svd,
            _ => return None,
        })
    }
}

impl fmt::Display for SketcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketcherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fd" | "frequent-directions" => SketcherKind::Fd,
            "hash" | "hashing" => SketcherKind::Hashing,
            "rp" | "random-projection" => SketcherKind::RandomProjection,
            "sample" | "sampling" => SketcherKind::Sampling,
            "svd" => SketcherKind::Svd,
            other => return Err(Error::invalid(format!("unknown sketcher {other:?}"))),
        })
    }
}

/// A single-writer streaming sketch over rows of length `n`.
pub trait Sketcher {
    fn kind(&self) -> SketcherKind;

    /// Target dimension.
    fn dim(&self) -> usize;

    fn n(&self) -> usize;

    fn rows_seen(&self) -> u64;

    /// Adds row `index` of the streamed matrix. Randomized sketches key their
    /// per-row randomness on `index`.
    fn insert_row(&mut self, index: usize, row: &[f64]) -> Result<()>;

    fn insert(&mut self, row: &SimilarityRow) -> Result<()> {
        self.insert_row(row.node, &row.values)
    }

    /// The first `k ≤ dim` directions, each scaled by its singular value raised
    /// to `exponent`. Callable after any number of inserts.
    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding>;

    fn get_embedding(&mut self, k: usize) -> Result<Embedding> {
        self.embedding_with(k, DEFAULT_EXPONENT)
    }

    /// The sketch itself (`exponent = 1`), whose Gram matrix approximates `MᵀM`.
    fn sketch_factor(&mut self, k: usize) -> Result<Embedding> {
        self.embedding_with(k, 1.0)
    }
}

pub(crate) fn check_row(n: usize, row: &[f64]) -> Result<()> {
    if row.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: row.len(),
        });
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

pub(crate) fn check_extract(k: usize, d: usize, rows_seen: u64) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!(
            "embedding dimension k = {k} must be in 1..={d}"
        )));
    }
    if rows_seen == 0 {
        return Err(Error::EmptySketch);
    }
    Ok(())
}

/// `s^exponent`, with zero singular values always mapping to zero.
pub(crate) fn scale_factor(s: f64, exponent: f64) -> f64 {
    if s > 0.0 {
        s.powf(exponent)
    } else {
        0.0
    }
}

/// Thin SVD of an accumulated buffer, keeping the first `k` scaled directions.
pub(crate) fn embedding_from_buffer(
    w: Mat,
    k: usize,
    exponent: f64,
    kind: SketcherKind,
    rows_seen: u64,
) -> Result<Embedding> {
    let n = w.cols();
    let svd = thin_svd_owned(w)?;
    let mut values = Mat::zeros(k, n);
    for i in 0..k.min(svd.singular_values.len()) {
        let s = scale_factor(svd.singular_values[i], exponent);
        if s == 0.0 {
            continue;
        }
        for (dst, v) in values.row_mut(i).iter_mut().zip(svd.vt.row(i)) {
            *dst = s * v;
        }
    }
    Ok(Embedding::new(values, kind, rows_seen, exponent))
}

/// Any of the checkpointable sketchers, or the exact oracle.
#[derive(Clone, Debug)]
pub enum AnySketch {
    Fd(FrequentDirections),
    Hashing(Hashing),
    RandomProjection(RandomProjection),
    Sampling(Sampling),
    Svd(ExactSvd),
}

impl AnySketch {
    pub fn new(kind: SketcherKind, d: usize, n: usize, seed: u64) -> Result<Self> {
        Ok(match kind {
            SketcherKind::Fd => AnySketch::Fd(FrequentDirections::new(d, n)?),
            SketcherKind::Hashing => AnySketch::Hashing(Hashing::new(d, n, seed)?),
            SketcherKind::RandomProjection => AnySketch::RandomProjection(RandomProjection::new(d, n, seed)?),
            SketcherKind::Sampling => AnySketch::Sampling(Sampling::new(d, n, seed)?),
            SketcherKind::Svd => AnySketch::Svd(ExactSvd::new(d, n)?),
        })
    }

    /// Execution mode for the sketch's own dense kernels (only Frequent
    /// Directions has any).
    pub fn with_execution(self, exec: Execution) -> Self {
        match self {
            AnySketch::Fd(s) => AnySketch::Fd(s.with_execution(exec)),
            other => other,
        }
    }

    fn inner(&self) -> &dyn Sketcher {
        match self {
            AnySketch::Fd(s) => s,
            AnySketch::Hashing(s) => s,
            AnySketch::RandomProjection(s) => s,
            AnySketch::Sampling(s) => s,
            AnySketch::Svd(s) => s,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Sketcher {
        match self {
            AnySketch::Fd(s) => s,
            AnySketch::Hashing(s) => s,
            AnySketch::RandomProjection(s) => s,
            AnySketch::Sampling(s) => s,
            AnySketch::Svd(s) => s,
        }
    }

    /// Combines sketches of disjoint row sets.
    pub fn merge(self, other: AnySketch) -> Result<AnySketch> {
        Ok(match (self, other) {
            (AnySketch::Fd(a), AnySketch::Fd(b)) => AnySketch::Fd(a.merge(b)?),
            (AnySketch::Hashing(a), AnySketch::Hashing(b)) => AnySketch::Hashing(a.merge(b)?),
            (AnySketch::RandomProjection(a), AnySketch::RandomProjection(b)) => {
                AnySketch::RandomProjection(a.merge(b)?)
            }
            (AnySketch::Sampling(a), AnySketch::Sampling(b)) => AnySketch::Sampling(a.merge(b)?),
            (AnySketch::Svd(_), AnySketch::Svd(_)) => {
                return Err(Error::Incompatible("the exact SVD oracle is not mergeable".into()))
            }
            (a, b) => {
                return Err(Error::Incompatible(format!(
                    "cannot merge a {} sketch with a {} sketch",
                    a.kind(),
                    b.kind()
                )))
            }
        })
    }
}

impl Sketcher for AnySketch {
    fn kind(&self) -> SketcherKind {
        self.inner().kind()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn n(&self) -> usize {
        self.inner().n()
    }

    fn rows_seen(&self) -> u64 {
        self.inner().rows_seen()
    }

    fn insert_row(&mut self, index: usize, row: &[f64]) -> Result<()> {
        self.inner_mut().insert_row(index, row)
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        self.inner_mut().embedding_with(k, exponent)
    }
}
