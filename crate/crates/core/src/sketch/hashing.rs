//! Count-sketch style hashing: row `i` is added to bucket `h(i)` with sign `g(i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_extract, check_row, embedding_from_buffer, Embedding, Sketcher, SketcherKind};
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm_sq, Mat};

const MERSENNE_61: u64 = (1 << 61) - 1;

fn mod_p(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// Polynomial hashing modulo `2^61 − 1`: a degree-1 polynomial for the bucket
/// (2-universal) and a degree-3 polynomial for the sign (4-universal).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashFamily {
    bucket: [u64; 2],
    sign: [u64; 4],
}

impl HashFamily {
    pub fn from_seeds(hash_seed: u64, sign_seed: u64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(hash_seed);
        let bucket = [r.gen_range(1..MERSENNE_61), r.gen_range(0..MERSENNE_61)];
        let mut r = ChaCha8Rng::seed_from_u64(sign_seed);
        let sign = [
            r.gen_range(0..MERSENNE_61),
            r.gen_range(0..MERSENNE_61),
            r.gen_range(0..MERSENNE_61),
            r.gen_range(1..MERSENNE_61),
        ];
        HashFamily { bucket, sign }
    }

    fn poly(coeffs: &[u64], x: u64) -> u64 {
        let x = mod_p(x as u128);
        coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| mod_p(acc as u128 * x as u128 + c as u128))
    }

    pub fn bucket(&self, i: u64, d: usize) -> usize {
        (Self::poly(&self.bucket, i) % d as u64) as usize
    }

    pub fn sign(&self, i: u64) -> f64 {
        if Self::poly(&self.sign, i) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct Hashing {
    d: usize,
    n: usize,
    w: Mat,
    hash_seed: u64,
    sign_seed: u64,
    family: HashFamily,
    rows_seen: u64,
    total_sq_norm: f64,
}

impl Hashing {
    /// Both hash functions are derived from `seed`.
    pub fn new(d: usize, n: usize, seed: u64) -> Result<Self> {
        Self::with_seeds(d, n, seed, seed ^ 0x9e37_79b9_7f4a_7c15)
    }

    pub fn with_seeds(d: usize, n: usize, hash_seed: u64, sign_seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::invalid("sketch dimensions must be positive"));
        }
        Ok(Hashing {
            d,
            n,
            w: Mat::zeros(d, n),
            hash_seed,
            sign_seed,
            family: HashFamily::from_seeds(hash_seed, sign_seed),
            rows_seen: 0,
            total_sq_norm: 0.0,
        })
    }

    pub(crate) fn from_parts(
        w: Mat,
        hash_seed: u64,
        sign_seed: u64,
        rows_seen: u64,
        total_sq_norm: f64,
    ) -> Result<Self> {
        let mut h =
            Hashing::with_seeds(w.rows(), w.cols(), hash_seed, sign_seed).map_err(|e| Error::Format(e.to_string()))?;
        h.w = w;
        h.rows_seen = rows_seen;
        h.total_sq_norm = total_sq_norm;
        Ok(h)
    }

    pub fn seeds(&self) -> (u64, u64) {
        (self.hash_seed, self.sign_seed)
    }

    pub fn buffer(&self) -> &Mat {
        &self.w
    }

    pub fn total_sq_norm(&self) -> f64 {
        self.total_sq_norm
    }

    /// Adds `sign · row` to `bucket`, bypassing the hash functions.
    pub(crate) fn accumulate(&mut self, bucket: usize, sign: f64, row: &[f64]) {
        axpy(sign, row, self.w.row_mut(bucket));
        self.rows_seen += 1;
        self.total_sq_norm += norm_sq(row);
    }

    pub fn merge(mut self, other: Hashing) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Incompatible("hashing sketches differ in shape".into()));
        }
        if self.seeds() != other.seeds() {
            return Err(Error::Incompatible("hashing sketches use different hash seeds".into()));
        }
        axpy(1.0, other.w.as_slice(), self.w.as_mut_slice());
        self.rows_seen += other.rows_seen;
        self.total_sq_norm += other.total_sq_norm;
        Ok(self)
    }
}

impl Sketcher for Hashing {
    fn kind(&self) -> SketcherKind {
        SketcherKind::Hashing
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
        let bucket = self.family.bucket(index as u64, self.d);
        let sign = self.family.sign(index as u64);
        self.accumulate(bucket, sign, row);
        Ok(())
    }

    fn embedding_with(&mut self, k: usize, exponent: f64) -> Result<Embedding> {
        check_extract(k, self.d, self.rows_seen)?;
        embedding_from_buffer(self.w.clone(), k, exponent, SketcherKind::Hashing, self.rows_seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_signs_cancel() {
        let mut h = Hashing::new(2, 2, 0).unwrap();
        h.accumulate(0, 1.0, &[1.0, 0.0]);
        h.accumulate(0, -1.0, &[1.0, 0.0]);
        assert_eq!(h.buffer().row(0), &[0.0, 0.0]);
        assert_eq!(h.rows_seen(), 2);
    }

    #[test]
    fn hash_values_in_range_and_balanced() {
        let fam = HashFamily::from_seeds(1, 2);
        let mut buckets = [0usize; 7];
        let mut plus = 0;
        for i in 0..7000u64 {
            buckets[fam.bucket(i, 7)] += 1;
            if fam.sign(i) > 0.0 {
                plus += 1;
            }
        }
        assert!(buckets.iter().all(|&c| (800..1200).contains(&c)), "{buckets:?}");
        assert!((3200..3800).contains(&plus));
    }

    #[test]
    fn mod_p_reduces() {
        assert_eq!(mod_p(MERSENNE_61 as u128), 0);
        assert_eq!(mod_p(MERSENNE_61 as u128 + 5), 5);
        let big = (MERSENNE_61 as u128 - 1) * (MERSENNE_61 as u128 - 1);
        assert_eq!(mod_p(big), 1);
    }

    #[test]
    fn merge_requires_same_seeds() {
        let a = Hashing::new(2, 3, 1).unwrap();
        let b = Hashing::new(2, 3, 2).unwrap();
        assert!(a.clone().merge(b).is_err());
        assert!(a.clone().merge(a).is_ok());
    }
}
