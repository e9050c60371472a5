//! Norm-weighted row sampling with `d` reservoir slots.
//!
//! Each row gets the key `ln(u) / ‖row‖²` for `u` uniform on (0, 1); the `d`
//! largest keys are kept, which samples without replacement with probability
//! proportional to the squared norm. At extraction every kept row is rescaled
//! to squared norm `‖M‖_F² / d`.

use rand::Rng;

use super::{check_extract, check_row, embedding_from_buffer, Embedding, Sketcher, SketcherKind};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, Mat};
use crate::similarity::walk_rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReservoirSlot {
    pub key: f64,
    pub index: u64,
    pub sq_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Sampling {
    d: usize,
    n: usize,
    seed: u64,
    slots: Vec<ReservoirSlot>,
    /// Row `j` holds the row sampled into `slots[j]`.
    rows: Mat,
    rows_seen: u64,
    total_sq_norm: f64,
}

impl Sampling {
    pub fn new(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::invalid("sketch dimensions must be positive"));
        }
        Ok(Sampling {
            d,
            n,
            seed,
            slots: Vec::with_capacity(d),
            rows: Mat::zeros(d, n),
            rows_seen: 0,
            total_sq_norm: 0.0,
        })
    }

    pub(crate) fn from_parts(
        rows: Mat,
        slots: Vec<ReservoirSlot>,
        seed: u64,
        rows_seen: u64,
        total_sq_norm: f64,
    ) -> Result<Self> {
        if slots.len() > rows.rows() {
            return Err(Error::Format("more reservoir slots than rows".into()));
        }
        let mut s = Sampling::new(rows.rows(), rows.cols(), seed).map_err(|e| Error::Format(e.to_string()))?;
        s.rows = rows;
        s.slots = slots;
        s.rows_seen = rows_seen;
        s.total_sq_norm = total_sq_norm;
        Ok(s)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> &[ReservoirSlot] {
        &self.slots
    }

    pub fn buffer(&self) -> &Mat {
        &self.rows
    }

    pub fn total_sq_norm(&self) -> f64 {
        self.total_sq_norm
    }

    fn key(&self, index: usize, sq_norm: f64) -> f64 {
        let mut rng = walk_rng(self.seed, index);
        // gen::<f64>() is in [0, 1); flip to (0, 1] so the log is finite.
        let u = 1.0 - rng.gen::<f64>();
        u.ln() / sq_norm
    }

    fn offer(&mut self, slot: ReservoirSlot, row: &[f64]) {
        if self.slots.len() < self.d {
            self.rows.row_mut(self.slots.len()).copy_from_slice(row);
            self.slots.push(slot);
            return;
        }
        let (weakest, min_key) = self
            .slots
            .iter()
            .enumerate()
            .map(|(j, s)| (j, s.key))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("reservoir is full");
        if slot.key > min_key {
            self.slots[weakest] = slot;
            self.rows.row_mut(weakest).copy_from_slice(row);
        }
    }

    /// Sampled rows rescaled to squared norm `‖M‖_F² / d`.
    pub fn scaled_rows(&self) -> Mat {
        let mut out = Mat::zeros(self.d, self.n);
        let target = (self.total_sq_norm / self.d as f64).sqrt();
        for (j, slot) in self.slots.iter().enumerate() {
            let scale = target / slot.sq_norm.sqrt();
            for (dst, x) in out.row_mut(j).iter_mut().zip(self.rows.row(j)) {
                *dst = scale * x;
            }
        }
        out
    }

    /// Union of the two reservoirs, keeping the `d` largest keys.
    pub fn merge(mut self, other: Sampling) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Incompatible("sampling sketches differ in shape".into()));
        }
        for (j, slot) in other.slots.iter().enumerate() {
            self.offer(*slot, other.rows.row(j));
        }
        self.rows_seen += other.rows_seen;
        self.total_sq_norm += other.total_sq_norm;
        Ok(self)
    }
}

impl Sketcher for Sampling {
    fn kind(&self) -> SketcherKind {
        SketcherKind::Sampling
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
        self.rows_seen += 1;
        let sq_norm = norm_sq(row);
        if sq_norm == 0.0 {
            return Ok(());
        }
        self.total_sq_norm += sq_norm;
        let slot = ReservoirSlot {
            key: self.key(index, sq_norm),
            index: index as u64,
            sq_norm,
        };
        self.offer(slot, row);
        Ok(())
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        check_extract(k, self.d, self.rows_seen)?;
        embedding_from_buffer(self.scaled_rows(), k, exponent, SketcherKind::Sampling, self.rows_seen)
    }
}
