use super::{check_extract, check_row, Embedding, Sketcher, SketcherKind};
use crate::error::{Error, Result};
use crate::linalg::{svd_oracle_embedding, Mat, DEFAULT_DENSE_GUARD};

/// Collects the whole matrix and returns its exact truncated SVD. Only for
/// graphs small enough to hold `n × n` in memory.
#[derive(Clone, Debug)]
pub struct ExactSvd {
    d: usize,
    rows: Vec<f64>,
    n: usize,
    count: u64,
    guard: usize,
}

impl ExactSvd {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_guard(d, n, DEFAULT_DENSE_GUARD)
    }

    pub fn with_guard(d: usize, n: usize, guard: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::invalid("sketch dimensions must be positive"));
        }
        if n > guard {
            return Err(Error::Capability(format!(
                "exact SVD is limited to {guard} nodes, graph has {n}"
            )));
        }
        Ok(ExactSvd {
            d,
            rows: Vec::new(),
            n,
            count: 0,
            guard,
        })
    }
}

impl Sketcher for ExactSvd {
    fn kind(&self) -> SketcherKind {
        SketcherKind::Svd
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn n(&self) -> usize {
        self.n
    }

    fn rows_seen(&self) -> u64 {
        self.count
    }

    fn insert_row(&mut self, _index: usize, row: &[f64]) -> Result<()> {
        check_row(self.n, row)?;
        if self.count as usize >= self.guard {
            return Err(Error::Capability(format!(
                "exact SVD holds at most {} rows",
                self.guard
            )));
        }
        self.rows.extend_from_slice(row);
        self.count += 1;
        Ok(())
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        check_extract(k, self.d, self.count)?;
        let m = Mat::from_vec(self.count as usize, self.n, self.rows.clone());
        let e = svd_oracle_embedding(&m, k, exponent, self.guard)?;
        Ok(Embedding::new(
            e.values().clone(),
            SketcherKind::Svd,
            self.count,
            exponent,
        ))
    }
}
