//! Binary sketch checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "FDSK"  version:u32  kind:u8  d:u32  n:u64  rows_seen:u64  fill:u32
//! fd:       sigma_hat: 2d × f64, W: 2d·n × f64 (row-major)
//! hashing:  W: d·n × f64, hash_seed:u64, sign_seed:u64, total_sq_norm:f64
//! rp:       W: d·n × f64, seed:u64, total_sq_norm:f64
//! sampling: W: d·n × f64, seed:u64, total_sq_norm:f64,
//!           then `fill` slots of (key:f64, index:u64, sq_norm:f64)
//! ```
//!
//! For the baselines `fill` is the number of occupied rows (`d` for hashing
//! and projections, the reservoir size for sampling).

use std::io::{Read, Write};

use super::{
    AnySketch, FrequentDirections, Hashing, RandomProjection, ReservoirSlot, Sampling, Sketcher, SketcherKind,
};
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FDSK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Upper bound on buffer entries accepted when reading, to fail fast on
/// corrupt headers instead of attempting a huge allocation.
const MAX_ENTRIES: u64 = 1 << 34;

pub fn write_checkpoint<W: Write>(sketch: &AnySketch, mut out: W) -> Result<()> {
    let (d, n, rows_seen) = (sketch.dim(), sketch.n(), sketch.rows_seen());
    let fill = match sketch {
        AnySketch::Fd(s) => s.fill(),
        AnySketch::Hashing(_) | AnySketch::RandomProjection(_) => d,
        AnySketch::Sampling(s) => s.slots().len(),
        AnySketch::Svd(_) => {
            return Err(Error::Capability(
                "the exact SVD oracle has no checkpoint format".into(),
            ))
        }
    };
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&[sketch.kind().code()])?;
    out.write_all(&(d as u32).to_le_bytes())?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&rows_seen.to_le_bytes())?;
    out.write_all(&(fill as u32).to_le_bytes())?;
    match sketch {
        AnySketch::Fd(s) => {
            write_f64s(&mut out, s.sigma_hat())?;
            write_f64s(&mut out, s.buffer().as_slice())?;
        }
        AnySketch::Hashing(s) => {
            write_f64s(&mut out, s.buffer().as_slice())?;
            let (h, g) = s.seeds();
            out.write_all(&h.to_le_bytes())?;
            out.write_all(&g.to_le_bytes())?;
            out.write_all(&s.total_sq_norm().to_le_bytes())?;
        }
        AnySketch::RandomProjection(s) => {
            write_f64s(&mut out, s.buffer().as_slice())?;
            out.write_all(&s.seed().to_le_bytes())?;
            out.write_all(&s.total_sq_norm().to_le_bytes())?;
        }
        AnySketch::Sampling(s) => {
            write_f64s(&mut out, s.buffer().as_slice())?;
            out.write_all(&s.seed().to_le_bytes())?;
            out.write_all(&s.total_sq_norm().to_le_bytes())?;
            for slot in s.slots() {
                out.write_all(&slot.key.to_le_bytes())?;
                out.write_all(&slot.index.to_le_bytes())?;
                out.write_all(&slot.sq_norm.to_le_bytes())?;
            }
        }
        AnySketch::Svd(_) => unreachable!(),
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<AnySketch> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut code = [0u8; 1];
    input.read_exact(&mut code).map_err(truncated)?;
    let kind = SketcherKind::from_code(code[0]).ok_or_else(|| Error::Format(format!("unknown kind {}", code[0])))?;
    let d = read_u32(&mut input)? as usize;
    let n = read_u64(&mut input)?;
    let rows_seen = read_u64(&mut input)?;
    let fill = read_u32(&mut input)? as usize;
    let rows = match kind {
        SketcherKind::Fd => 2 * d as u64,
        _ => d as u64,
    };
    if d == 0 || n == 0 || rows.saturating_mul(n) > MAX_ENTRIES {
        return Err(Error::Format(format!("implausible shape d={d}, n={n}")));
    }
    let n = n as usize;
    let sketch = match kind {
        SketcherKind::Fd => {
            let sigma = read_f64s(&mut input, 2 * d)?;
            let w = Mat::from_vec(2 * d, n, read_f64s(&mut input, 2 * d * n)?);
            AnySketch::Fd(FrequentDirections::from_parts(d, n, w, sigma, fill, rows_seen)?)
        }
        SketcherKind::Hashing => {
            let w = Mat::from_vec(d, n, read_f64s(&mut input, d * n)?);
            let h = read_u64(&mut input)?;
            let g = read_u64(&mut input)?;
            let total = read_f64(&mut input)?;
            AnySketch::Hashing(Hashing::from_parts(w, h, g, rows_seen, total)?)
        }
        SketcherKind::RandomProjection => {
            let w = Mat::from_vec(d, n, read_f64s(&mut input, d * n)?);
            let seed = read_u64(&mut input)?;
            let total = read_f64(&mut input)?;
            AnySketch::RandomProjection(RandomProjection::from_parts(w, seed, rows_seen, total)?)
        }
        SketcherKind::Sampling => {
            if fill > d {
                return Err(Error::Format("reservoir larger than d".into()));
            }
            let w = Mat::from_vec(d, n, read_f64s(&mut input, d * n)?);
            let seed = read_u64(&mut input)?;
            let total = read_f64(&mut input)?;
            let mut slots = Vec::with_capacity(fill);
            for _ in 0..fill {
                let key = read_f64(&mut input)?;
                let index = read_u64(&mut input)?;
                let sq_norm = read_f64(&mut input)?;
                slots.push(ReservoirSlot { key, index, sq_norm });
            }
            AnySketch::Sampling(Sampling::from_parts(w, slots, seed, rows_seen, total)?)
        }
        SketcherKind::Svd => return Err(Error::Format("exact SVD has no checkpoint format".into())),
    };
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(sketch)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated checkpoint".into())
    } else {
        Error::Io(e)
    }
}

fn write_f64s<W: Write>(out: &mut W, xs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * xs.len().min(1 << 16));
    for chunk in xs.chunks(1 << 16) {
        buf.clear();
        for x in chunk {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(input: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len);
    let mut buf = vec![0u8; 8 * len.min(1 << 16)];
    let mut left = len;
    while left > 0 {
        let take = left.min(1 << 16);
        input.read_exact(&mut buf[..8 * take]).map_err(truncated)?;
        out.extend(
            buf[..8 * take]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap())),
        );
        left -= take;
    }
    Ok(out)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(input)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(kind: SketcherKind) -> AnySketch {
        let mut s = AnySketch::new(kind, 2, 3, 17).unwrap();
        for i in 0..7 {
            s.insert_row(i, &[i as f64, 1.0, -(i as f64) * 0.5]).unwrap();
        }
        s
    }

    #[test]
    fn header_layout() {
        let s = filled(SketcherKind::Fd);
        let mut buf = Vec::new();
        write_checkpoint(&s, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FDSK");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(buf[8], 0);
        assert_eq!(u32::from_le_bytes(buf[9..13].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[13..21].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[21..29].try_into().unwrap()), 7);
        assert_eq!(buf.len(), 33 + 8 * 4 + 8 * 4 * 3);
    }

    #[test]
    fn every_kind_round_trips() {
        for kind in [
            SketcherKind::Fd,
            SketcherKind::Hashing,
            SketcherKind::RandomProjection,
            SketcherKind::Sampling,
        ] {
            let mut s = filled(kind);
            let mut buf = Vec::new();
            write_checkpoint(&s, &mut buf).unwrap();
            let mut back = read_checkpoint(buf.as_slice()).unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back.rows_seen(), 7);
            let mut again = Vec::new();
            write_checkpoint(&back, &mut again).unwrap();
            assert_eq!(buf, again, "{kind}");
            assert_eq!(
                s.get_embedding(2).unwrap().values(),
                back.get_embedding(2).unwrap().values()
            );
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let s = filled(SketcherKind::Hashing);
        let mut buf = Vec::new();
        write_checkpoint(&s, &mut buf).unwrap();
        assert!(matches!(read_checkpoint(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_checkpoint(extra.as_slice()).is_err());
        let mut kind = buf;
        kind[8] = 9;
        assert!(read_checkpoint(kind.as_slice()).is_err());
    }
}
