//! Binary containers (little-endian).
//!
//! `HVFM` holds a compressed matrix:
//!
//! ```text
//! "HVFM" | version u32 = 1 | N u32 | kind u8 | max_depth u16 | tol f64
//! perm: N x u32
//! count u8 | count x (row0, rows, col0, cols: u32) | count x block
//! ```
//!
//! Every block starts with a tag byte and its dimensions `m, n` (u32):
//! `0` zero; `1` dense, `m n` f32 values; `2` CSR, see below; `3` SVD,
//! `q` u32, the `m x q` factor U as CSR, `q` f32 singular values, the
//! `n x q` factor V as CSR; `4` subdivided, a child grid laid out like the
//! root grid with local ranges.
//!
//! A CSR payload is `nnz` u64, `m + 1` u64 row pointers, `nnz` u32 column
//! indices and `nnz` f32 values.
//!
//! `HVFC` holds one plain CSR matrix: `"HVFC" | version u32 = 1 | m u32 |
//! n u32 | CSR payload`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{CompressedViewFactor, SubBlock, Subdivided, VfBlock};
use crate::linalg::{DenseBlock, LinalgError, SparseCsr, TruncatedSvd};
use crate::spatial::TreeKind;

const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HmatrixError {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("file is truncated")]
    Truncated,
    #[error("corrupt container: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn save(f: &CompressedViewFactor, path: impl AsRef<Path>) -> Result<(), HmatrixError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(b"HVFM")?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(f.n as u32).to_le_bytes())?;
    out.write_all(&[f.kind.code()])?;
    out.write_all(&(f.max_depth as u16).to_le_bytes())?;
    out.write_all(&f.tol.to_le_bytes())?;
    for &p in &f.perm {
        out.write_all(&(p as u32).to_le_bytes())?;
    }
    write_grid(&mut out, &f.blocks)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<CompressedViewFactor, HmatrixError> {
    let bytes = fs::read(path)?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    r.magic(b"HVFM", "HVFM")?;
    let n = r.u32()? as usize;
    let kind = TreeKind::from_code(r.u8()?)
        .ok_or_else(|| HmatrixError::Corrupt("unknown tree kind".into()))?;
    let max_depth = r.u16()? as usize;
    let tol = r.f64()?;
    let mut perm = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for _ in 0..n {
        let p = r.u32()? as usize;
        if p >= n || seen[p] {
            return Err(HmatrixError::Corrupt("permutation is not a bijection".into()));
        }
        seen[p] = true;
        perm.push(p);
    }
    let blocks = r.grid(n, n)?;
    if r.pos != bytes.len() {
        return Err(HmatrixError::Corrupt("trailing bytes".into()));
    }
    Ok(CompressedViewFactor::new(kind, perm, max_depth, tol, blocks))
}

pub fn save_csr(a: &SparseCsr, path: impl AsRef<Path>) -> Result<(), HmatrixError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(b"HVFC")?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(a.nrows() as u32).to_le_bytes())?;
    out.write_all(&(a.ncols() as u32).to_le_bytes())?;
    write_csr(&mut out, a)?;
    out.flush()?;
    Ok(())
}

pub fn load_csr(path: impl AsRef<Path>) -> Result<SparseCsr, HmatrixError> {
    let bytes = fs::read(path)?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    r.magic(b"HVFC", "HVFC")?;
    let m = r.u32()? as usize;
    let n = r.u32()? as usize;
    let a = r.csr(m, n)?;
    if r.pos != bytes.len() {
        return Err(HmatrixError::Corrupt("trailing bytes".into()));
    }
    Ok(a)
}

fn write_grid(out: &mut impl Write, children: &[SubBlock]) -> io::Result<()> {
    out.write_all(&[children.len() as u8])?;
    for c in children {
        for v in [c.rows.start, c.rows.len(), c.cols.start, c.cols.len()] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
    }
    for c in children {
        write_block(out, &c.block)?;
    }
    Ok(())
}

fn write_block(out: &mut impl Write, b: &VfBlock) -> io::Result<()> {
    let tag = match b {
        VfBlock::Zero { .. } => 0u8,
        VfBlock::Dense(_) => 1,
        VfBlock::Csr(_) => 2,
        VfBlock::Svd(_) => 3,
        VfBlock::Subdivided(_) => 4,
    };
    out.write_all(&[tag])?;
    out.write_all(&(b.nrows() as u32).to_le_bytes())?;
    out.write_all(&(b.ncols() as u32).to_le_bytes())?;
    match b {
        VfBlock::Zero { .. } => {}
        VfBlock::Dense(d) => {
            for v in d.values() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        VfBlock::Csr(c) => write_csr(out, c)?,
        VfBlock::Svd(s) => {
            out.write_all(&(s.rank() as u32).to_le_bytes())?;
            write_csr(out, s.u())?;
            for v in s.sigma() {
                out.write_all(&v.to_le_bytes())?;
            }
            write_csr(out, s.v())?;
        }
        VfBlock::Subdivided(s) => write_grid(out, &s.children)?,
    }
    Ok(())
}

fn write_csr(out: &mut impl Write, a: &SparseCsr) -> io::Result<()> {
    out.write_all(&(a.nnz() as u64).to_le_bytes())?;
    for p in a.row_ptr() {
        out.write_all(&p.to_le_bytes())?;
    }
    for c in a.col_idx() {
        out.write_all(&c.to_le_bytes())?;
    }
    for v in a.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], HmatrixError> {
        let end = self.pos.checked_add(K).ok_or(HmatrixError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(HmatrixError::Truncated)?;
        self.pos = end;
        Ok(s.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, HmatrixError> {
        Ok(self.take::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, HmatrixError> {
        Ok(u16::from_le_bytes(self.take()?))
    }

    fn u32(&mut self) -> Result<u32, HmatrixError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64, HmatrixError> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f32(&mut self) -> Result<f32, HmatrixError> {
        Ok(f32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, HmatrixError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    /// Fails early when fewer than `count * width` bytes remain, so corrupt
    /// lengths cannot trigger huge allocations.
    fn reserve(&self, count: usize, width: usize) -> Result<usize, HmatrixError> {
        let need = count.checked_mul(width).ok_or(HmatrixError::Truncated)?;
        if self.buf.len() - self.pos < need {
            return Err(HmatrixError::Truncated);
        }
        Ok(count)
    }

    fn magic(&mut self, expected: &[u8; 4], name: &'static str) -> Result<(), HmatrixError> {
        if &self.take::<4>()? != expected {
            return Err(HmatrixError::BadMagic { expected: name });
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(HmatrixError::UnsupportedVersion(v));
        }
        Ok(())
    }

    fn grid(&mut self, m: usize, n: usize) -> Result<Vec<SubBlock>, HmatrixError> {
        let count = self.u8()? as usize;
        let mut ranges = Vec::with_capacity(count);
        for _ in 0..count {
            let (r0, rows, c0, cols) = (
                self.u32()? as usize,
                self.u32()? as usize,
                self.u32()? as usize,
                self.u32()? as usize,
            );
            if r0 + rows > m || c0 + cols > n {
                return Err(HmatrixError::Corrupt("child range outside parent".into()));
            }
            ranges.push((r0..r0 + rows, c0..c0 + cols));
        }
        ranges
            .into_iter()
            .map(|(rows, cols)| {
                let block = self.block()?;
                if block.nrows() != rows.len() || block.ncols() != cols.len() {
                    return Err(HmatrixError::Corrupt("block size does not match its range".into()));
                }
                Ok(SubBlock { rows, cols, block })
            })
            .collect()
    }

    fn block(&mut self) -> Result<VfBlock, HmatrixError> {
        let tag = self.u8()?;
        let m = self.u32()? as usize;
        let n = self.u32()? as usize;
        Ok(match tag {
            0 => VfBlock::Zero { nrows: m, ncols: n },
            1 => {
                let len = self.reserve(m.checked_mul(n).ok_or(HmatrixError::Truncated)?, 4)?;
                let values = (0..len).map(|_| self.f32()).collect::<Result<_, _>>()?;
                VfBlock::Dense(DenseBlock::from_values(m, n, values)?)
            }
            2 => VfBlock::Csr(self.csr(m, n)?),
            3 => {
                let q = self.u32()? as usize;
                let u = self.csr(m, q)?;
                let len = self.reserve(q, 4)?;
                let sigma = (0..len).map(|_| self.f32()).collect::<Result<_, _>>()?;
                let v = self.csr(n, q)?;
                VfBlock::Svd(TruncatedSvd::new(u, sigma, v)?)
            }
            4 => VfBlock::Subdivided(Subdivided {
                nrows: m,
                ncols: n,
                children: self.grid(m, n)?,
            }),
            t => return Err(HmatrixError::Corrupt(format!("unknown block tag {t}"))),
        })
    }

    fn csr(&mut self, m: usize, n: usize) -> Result<SparseCsr, HmatrixError> {
        let nnz = self.u64()? as usize;
        let rows = self.reserve(m + 1, 8)?;
        let row_ptr = (0..rows).map(|_| self.u64()).collect::<Result<_, _>>()?;
        let len = self.reserve(nnz, 8)?;
        let col_idx = (0..len).map(|_| self.u32()).collect::<Result<_, _>>()?;
        let values = (0..len).map(|_| self.f32()).collect::<Result<_, _>>()?;
        Ok(SparseCsr::new(m, n, row_ptr, col_idx, values)?)
    }
}
