use std::ops::Range;

use rayon::prelude::*;

use super::{check_len, DenseBlock, LinalgError, LinearOperator};

const PAR_ROWS: usize = 512;

/// Compressed sparse row matrix with 64-bit row pointers, 32-bit column
/// indices and single-precision values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCsr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<u64>,
    col_idx: Vec<u32>,
    values: Vec<f32>,
}

impl SparseCsr {
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<u64>,
        col_idx: Vec<u32>,
        values: Vec<f32>,
    ) -> Result<Self, LinalgError> {
        let bad = |m: &str| Err(LinalgError::InvalidCsr(m.to_string()));
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return bad("row pointer length or origin");
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return bad("row pointers decrease");
        }
        let nnz = row_ptr[nrows] as usize;
        if col_idx.len() != nnz || values.len() != nnz {
            return bad("nnz does not match index/value arrays");
        }
        for r in 0..nrows {
            let cols = &col_idx[row_ptr[r] as usize..row_ptr[r + 1] as usize];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad("column indices not strictly increasing");
            }
            if cols.last().is_some_and(|&c| c as usize >= ncols) {
                return bad("column index out of range");
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n as u64).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from per-row `(column, value)` lists sorted by column.
    /// Explicit zeros are dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(u32, f32)>>) -> Self {
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in &rows {
            for &(c, v) in row {
                if v != 0.0 {
                    debug_assert!(col_idx.len() == *row_ptr.last().unwrap() as usize
                        || *col_idx.last().unwrap() < c);
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len() as u64);
        }
        Self {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Stacks row blocks with equal column counts vertically.
    pub fn vstack(blocks: &[SparseCsr]) -> Self {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut out = Self::zeros(0, ncols);
        for b in blocks {
            assert_eq!(b.ncols, ncols);
            let base = *out.row_ptr.last().unwrap();
            out.row_ptr.extend(b.row_ptr[1..].iter().map(|p| p + base));
            out.col_idx.extend_from_slice(&b.col_idx);
            out.values.extend_from_slice(&b.values);
            out.nrows += b.nrows;
        }
        out
    }

    /// Sparse matrix holding the nonzeros of a row-major dense array.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[f32]) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        let rows = data
            .chunks(ncols.max(1))
            .take(nrows)
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c as u32, v))
                    .collect()
            })
            .collect();
        Self::from_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[u64] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Storage size: 8 bytes per row pointer, 4 per column index, 4 per value.
    pub fn nbytes(&self) -> u64 {
        8 * (self.nrows as u64 + 1) + 8 * self.nnz() as u64
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f32]) {
        let range = self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize;
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Copy of the sub-block `rows x cols` with local indices.
    pub fn slice(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        assert!(rows.end <= self.nrows && cols.end <= self.ncols);
        let (c0, c1) = (cols.start as u32, cols.end as u32);
        let mut out = Self::zeros(0, cols.len());
        out.row_ptr.reserve(rows.len());
        for r in rows {
            let (cs, vs) = self.row(r);
            let a = cs.partition_point(|&c| c < c0);
            let b = cs.partition_point(|&c| c < c1);
            out.col_idx.extend(cs[a..b].iter().map(|c| c - c0));
            out.values.extend_from_slice(&vs[a..b]);
            out.row_ptr.push(out.col_idx.len() as u64);
            out.nrows += 1;
        }
        out
    }

    /// Copy of the sub-matrix at global `rows` and `cols`, with local
    /// indices following the order of the given lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut pos = vec![u32::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            pos[c] = k as u32;
        }
        let entries = rows
            .par_iter()
            .map(|&r| {
                let (cs, vs) = self.row(r);
                let mut row: Vec<(u32, f32)> = cs
                    .iter()
                    .zip(vs)
                    .filter(|(&c, _)| pos[c as usize] != u32::MAX)
                    .map(|(&c, &v)| (pos[c as usize], v))
                    .collect();
                row.sort_unstable_by_key(|e| e.0);
                row
            })
            .collect();
        Self::from_rows(cols.len(), entries)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for k in 0..self.ncols {
            counts[k + 1] += counts[k];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0f32; self.nnz()];
        for r in 0..self.nrows {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                let slot = next[c as usize] as usize;
                col_idx[slot] = r as u32;
                values[slot] = v;
                next[c as usize] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> DenseBlock {
        let mut d = DenseBlock::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                d.values_mut()[r * self.ncols + c as usize] = v;
            }
        }
        d
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|&v| v as f64).sum())
            .collect()
    }

    /// Marks the columns holding at least one stored entry.
    pub fn nonzero_columns(&self) -> Vec<bool> {
        let mut mask = vec![false; self.ncols];
        for &c in &self.col_idx {
            mask[c as usize] = true;
        }
        mask
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cs, vs) = self.row(r);
        cs.iter()
            .zip(vs)
            .map(|(&c, &v)| v as f64 * x[c as usize])
            .sum()
    }

    /// `y += A x` without bounds checks beyond slice indexing.
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            *yr += self.row_dot(r, x);
        }
    }

    /// `y += A^T x`.
    pub fn matvec_t_acc(&self, x: &[f64], y: &mut [f64]) {
        for (r, &xr) in x.iter().enumerate().take(self.nrows) {
            if xr == 0.0 {
                continue;
            }
            let (cs, vs) = self.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                y[c as usize] += v as f64 * xr;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.ncols, x.len())?;
        let mut y = vec![0.0; self.nrows];
        self.matvec_acc(x, &mut y);
        Ok(y)
    }
}

impl LinearOperator for SparseCsr {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(PAR_ROWS)
            .enumerate()
            .for_each(|(chunk, ys)| {
                let r0 = chunk * PAR_ROWS;
                for (k, yr) in ys.iter_mut().enumerate() {
                    *yr = self.row_dot(r0 + k, x);
                }
            });
    }
}
