//! Hierarchically compressed view-factor matrices.
//!
//! A [`CompressedViewFactor`] stores `F` in the face ordering of a spatial
//! tree. The matrix is split into the blocks formed by pairs of first-level
//! tree nodes; each block is a [`VfBlock`] chosen by a dynamic program to
//! minimize storage among zero, dense, sparse, low-rank and recursively
//! subdivided representations.

mod compress;
mod io;
mod stats;

pub use compress::{compress, compress_block, compress_from_csr, estimate_rank, CompressParams};
pub use io::{load, load_csr, save, save_csr, HmatrixError};
pub use stats::{block_stats, write_block_stats, BlockRecord};

use std::ops::Range;

use rayon::prelude::*;

use crate::linalg::{DenseBlock, LinalgError, LinearOperator, SparseCsr, TruncatedSvd};
use crate::spatial::TreeKind;

/// Bookkeeping bytes charged to every subdivided node.
pub const NODE_OVERHEAD: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum VfBlock {
    Zero { nrows: usize, ncols: usize },
    Dense(DenseBlock),
    Csr(SparseCsr),
    Svd(TruncatedSvd),
    Subdivided(Subdivided),
}

/// A grid of child blocks whose row ranges partition the parent's rows and
/// whose column ranges partition its columns. Children are kept in
/// row-major grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivided {
    pub nrows: usize,
    pub ncols: usize,
    pub children: Vec<SubBlock>,
}

/// A block placed at local row and column ranges of its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBlock {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub block: VfBlock,
}

impl VfBlock {
    pub fn nrows(&self) -> usize {
        match self {
            VfBlock::Zero { nrows, .. } => *nrows,
            VfBlock::Dense(d) => d.nrows(),
            VfBlock::Csr(c) => c.nrows(),
            VfBlock::Svd(s) => s.nrows(),
            VfBlock::Subdivided(s) => s.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            VfBlock::Zero { ncols, .. } => *ncols,
            VfBlock::Dense(d) => d.ncols(),
            VfBlock::Csr(c) => c.ncols(),
            VfBlock::Svd(s) => s.ncols(),
            VfBlock::Subdivided(s) => s.ncols,
        }
    }

    /// Storage accounting used by the compression dynamic program.
    pub fn nbytes(&self) -> u64 {
        match self {
            VfBlock::Zero { .. } => 0,
            VfBlock::Dense(d) => d.nbytes(),
            VfBlock::Csr(c) => c.nbytes(),
            VfBlock::Svd(s) => s.nbytes(),
            VfBlock::Subdivided(s) => {
                NODE_OVERHEAD + s.children.iter().map(|c| c.block.nbytes()).sum::<u64>()
            }
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            VfBlock::Zero { .. } => "zero",
            VfBlock::Dense(_) => "dense",
            VfBlock::Csr(_) => "csr",
            VfBlock::Svd(_) => "svd",
            VfBlock::Subdivided(_) => "subdivided",
        }
    }

    /// `y += B x` with children applied in row-major order.
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        match self {
            VfBlock::Zero { .. } => {}
            VfBlock::Dense(d) => d.matvec_acc(x, y),
            VfBlock::Csr(c) => c.matvec_acc(x, y),
            VfBlock::Svd(s) => s.matvec_acc(x, y),
            VfBlock::Subdivided(s) => {
                for c in &s.children {
                    c.block
                        .matvec_acc(&x[c.cols.clone()], &mut y[c.rows.clone()]);
                }
            }
        }
    }

    /// Dense row-major expansion (for tests and small instances).
    pub fn to_dense(&self) -> DenseBlock {
        let (m, n) = (self.nrows(), self.ncols());
        match self {
            VfBlock::Zero { .. } => DenseBlock::zeros(m, n),
            VfBlock::Dense(d) => d.clone(),
            VfBlock::Csr(c) => c.to_dense(),
            VfBlock::Svd(s) => s.to_dense(),
            VfBlock::Subdivided(s) => {
                let mut out = DenseBlock::zeros(m, n);
                for c in &s.children {
                    let d = c.block.to_dense();
                    for (lr, r) in c.rows.clone().enumerate() {
                        for (lc, col) in c.cols.clone().enumerate() {
                            out.values_mut()[r * n + col] += d.get(lr, lc);
                        }
                    }
                }
                out
            }
        }
    }
}

/// Compressed `N x N` view-factor matrix in tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedViewFactor {
    pub(crate) n: usize,
    pub(crate) kind: TreeKind,
    /// Position `k` of the tree order holds face `perm[k]`.
    pub(crate) perm: Vec<usize>,
    pub(crate) max_depth: usize,
    pub(crate) tol: f64,
    /// First-level blocks with global ranges in tree order, row-major.
    pub(crate) blocks: Vec<SubBlock>,
}

impl CompressedViewFactor {
    pub fn new(
        kind: TreeKind,
        perm: Vec<usize>,
        max_depth: usize,
        tol: f64,
        blocks: Vec<SubBlock>,
    ) -> Self {
        Self {
            n: perm.len(),
            kind,
            perm,
            max_depth,
            tol,
            blocks,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn blocks(&self) -> &[SubBlock] {
        &self.blocks
    }

    /// Total storage of all blocks.
    pub fn nbytes(&self) -> u64 {
        self.blocks.iter().map(|b| b.block.nbytes()).sum()
    }

    /// `F x` in the original face ordering.
    pub fn hmatvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.apply(x)
    }

    /// Applies the operator to each column of `xs`.
    pub fn hmatvec_multi(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinalgError> {
        xs.iter().map(|x| self.hmatvec(x)).collect()
    }

    /// Densifies in the original face ordering (small instances only).
    pub fn to_dense(&self) -> DenseBlock {
        let n = self.n;
        let mut out = DenseBlock::zeros(n, n);
        for b in &self.blocks {
            let d = b.block.to_dense();
            for (lr, r) in b.rows.clone().enumerate() {
                for (lc, c) in b.cols.clone().enumerate() {
                    out.values_mut()[self.perm[r] * n + self.perm[c]] += d.get(lr, lc);
                }
            }
        }
        out
    }
}

impl LinearOperator for CompressedViewFactor {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let xp: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        let mut yp = vec![0.0; self.n];
        // Group the row-major blocks by row range; groups write disjoint
        // slices of the output and are applied in parallel.
        let mut groups: Vec<(Range<usize>, Vec<&SubBlock>)> = Vec::new();
        for b in &self.blocks {
            match groups.last_mut() {
                Some((rows, list)) if *rows == b.rows => list.push(b),
                _ => groups.push((b.rows.clone(), vec![b])),
            }
        }
        let mut slices = Vec::with_capacity(groups.len());
        let mut rest: &mut [f64] = &mut yp;
        let mut offset = 0;
        for (rows, _) in &groups {
            let (_, tail) = rest.split_at_mut(rows.start - offset);
            let (mine, tail) = tail.split_at_mut(rows.len());
            slices.push(mine);
            rest = tail;
            offset = rows.end;
        }
        slices
            .into_par_iter()
            .zip(groups.par_iter())
            .for_each(|(ys, (_, list))| {
                for b in list {
                    b.block.matvec_acc(&xp[b.cols.clone()], ys);
                }
            });
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = yp[k];
        }
    }
}
