use rayon::prelude::*;

use super::{CompressedViewFactor, SubBlock, Subdivided, VfBlock, NODE_OVERHEAD};
use crate::linalg::{LanczosSvd, SparseCsr, TruncatedSvd};
use crate::mesh::TriangleMesh;
use crate::raytrace::Bvh;
use crate::spatial::SpatialTree;
use crate::viewfactor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressParams {
    /// Relative singular value cutoff.
    pub tol: f64,
    /// Recursion stops at this tree depth.
    pub max_depth: usize,
    /// Blocks with fewer entries are stored directly.
    pub min_size: usize,
    /// Initial rank tried by the rank estimate.
    pub k0: usize,
    pub seed: u64,
}

impl Default for CompressParams {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            max_depth: 4,
            min_size: 16384,
            k0: 8,
            seed: 0,
        }
    }
}

/// Low-rank factors of `block` that meet the singular value cutoff `tol`
/// and take fewer bytes than the CSR block, or `None`.
///
/// Starting from `k0` triplets, finds the smallest `q` with
/// `sigma_{q+1} < tol sigma_1`; while no such `q` exists among the computed
/// triplets, the number of triplets is doubled as long as it stays below
/// `min(m, n) / 2`.
pub fn estimate_rank(block: &SparseCsr, tol: f64, k0: usize, seed: u64) -> Option<TruncatedSvd> {
    let limit = block.nrows().min(block.ncols());
    if block.nnz() == 0 || limit < 2 {
        return None;
    }
    let target = block.nbytes();
    // Even rank one needs a row pointer array and one entry per nonempty
    // row for each factor.
    let nonempty_rows = (0..block.nrows()).filter(|&r| !block.row(r).0.is_empty()).count();
    let nonempty_cols = block.nonzero_columns().iter().filter(|&&c| c).count();
    let rank_one = 8 * (block.nrows() + block.ncols() + 2 + nonempty_rows + nonempty_cols) as u64 + 4;
    if rank_one >= target {
        return None;
    }
    let mut k = k0.clamp(1, limit - 1);
    loop {
        let svd = LanczosSvd::compute(block, k, seed).ok()?;
        let sigma = &svd.sigma;
        if sigma.is_empty() {
            return None;
        }
        let cut = (1..sigma.len()).find(|&q| sigma[q] / sigma[0] < tol);
        let q = match cut {
            Some(q) => Some(q),
            None if svd.exhausted => Some(sigma.len()),
            None => None,
        };
        if let Some(q) = q {
            let t = svd.to_truncated(q);
            return (t.nbytes() < target).then_some(t);
        }
        // Any admissible rank exceeds k, and the leading k factors alone
        // already cost this much.
        if svd.to_truncated(k).nbytes() >= target {
            return None;
        }
        k *= 2;
        if k >= limit / 2 {
            return None;
        }
    }
}

struct Context<'a> {
    /// Source of blocks that are not supplied; `None` when compressing an
    /// assembled matrix.
    geometry: Option<(&'a TriangleMesh, &'a Bvh)>,
    tree: &'a SpatialTree,
    params: CompressParams,
}

/// Compresses the block of `F` between tree nodes `row_node` and
/// `col_node`. `csr` is the already assembled block, if any; `depth` is the
/// recursion depth of the pair.
pub fn compress_block(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    tree: &SpatialTree,
    row_node: usize,
    col_node: usize,
    csr: Option<SparseCsr>,
    depth: usize,
    params: &CompressParams,
) -> VfBlock {
    let ctx = Context {
        geometry: Some((mesh, bvh)),
        tree,
        params: *params,
    };
    ctx.block(row_node, col_node, csr, depth)
}

impl Context<'_> {
    fn block(&self, row_node: usize, col_node: usize, csr: Option<SparseCsr>, depth: usize) -> VfBlock {
        let p = &self.params;
        let csr = csr.unwrap_or_else(|| {
            let (mesh, bvh) = self.geometry.expect("blocks are supplied without geometry");
            viewfactor::assemble_block(mesh, bvh, self.tree.indices(row_node), self.tree.indices(col_node))
        });
        let (m, n) = (csr.nrows(), csr.ncols());
        if csr.nnz() == 0 {
            return VfBlock::Zero { nrows: m, ncols: n };
        }
        let dense_bytes = 4 * (m * n) as u64;
        if m * n < p.min_size || depth >= p.max_depth {
            return if dense_bytes < csr.nbytes() {
                VfBlock::Dense(csr.to_dense())
            } else {
                VfBlock::Csr(csr)
            };
        }

        let svd = estimate_rank(&csr, p.tol, p.k0, p.seed);

        let rnode = self.tree.node(row_node);
        let cnode = self.tree.node(col_node);
        let split = |node: usize| {
            let t = self.tree.node(node);
            if t.is_leaf() {
                vec![node]
            } else {
                t.children.clone()
            }
        };
        let subdivided = if rnode.is_leaf() && cnode.is_leaf() {
            None
        } else {
            let pairs: Vec<(usize, usize)> = split(row_node)
                .into_iter()
                .flat_map(|r| split(col_node).into_iter().map(move |c| (r, c)))
                .collect();
            let children: Vec<SubBlock> = pairs
                .par_iter()
                .map(|&(r, c)| {
                    let rr = self.tree.node(r).range.clone();
                    let cr = self.tree.node(c).range.clone();
                    let rows = rr.start - rnode.range.start..rr.end - rnode.range.start;
                    let cols = cr.start - cnode.range.start..cr.end - cnode.range.start;
                    let sub = csr.slice(rows.clone(), cols.clone());
                    SubBlock {
                        rows,
                        cols,
                        block: self.block(r, c, Some(sub), depth + 1),
                    }
                })
                .collect();
            Some(Subdivided {
                nrows: m,
                ncols: n,
                children,
            })
        };

        // Candidates in order of preference on ties.
        let mut best_bytes = csr.nbytes();
        let mut best = 0;
        let mut consider = |bytes: u64, id: usize| {
            if bytes < best_bytes {
                best_bytes = bytes;
                best = id;
            }
        };
        consider(dense_bytes, 1);
        if let Some(s) = &svd {
            consider(s.nbytes(), 2);
        }
        let sub_bytes = subdivided.as_ref().map(|s| {
            NODE_OVERHEAD + s.children.iter().map(|c| c.block.nbytes()).sum::<u64>()
        });
        if let Some(b) = sub_bytes {
            consider(b, 3);
        }
        match best {
            1 => VfBlock::Dense(csr.to_dense()),
            2 => VfBlock::Svd(svd.expect("candidate exists")),
            3 => coalesce(subdivided.expect("candidate exists"), csr, best_bytes),
            _ => VfBlock::Csr(csr),
        }
    }
}

/// Merges a grid of sparse (or dense) children, zero children included,
/// into one block of that kind when this does not cost extra bytes.
fn coalesce(sub: Subdivided, csr: SparseCsr, sub_bytes: u64) -> VfBlock {
    let all = |f: fn(&VfBlock) -> bool| {
        sub.children
            .iter()
            .all(|c| matches!(c.block, VfBlock::Zero { .. }) || f(&c.block))
    };
    if all(|b| matches!(b, VfBlock::Csr(_))) && csr.nbytes() <= sub_bytes {
        return VfBlock::Csr(csr);
    }
    let dense_bytes = 4 * (sub.nrows * sub.ncols) as u64;
    if all(|b| matches!(b, VfBlock::Dense(_))) && dense_bytes <= sub_bytes {
        return VfBlock::Dense(csr.to_dense());
    }
    VfBlock::Subdivided(sub)
}

/// Compresses the full view-factor matrix block by block over pairs of
/// first-level tree nodes. Only one first-level block is held in CSR form
/// at a time.
pub fn compress(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    tree: &SpatialTree,
    params: &CompressParams,
) -> CompressedViewFactor {
    let ctx = Context {
        geometry: Some((mesh, bvh)),
        tree,
        params: *params,
    };
    compress_pairs(&ctx, |_, _| None)
}

/// Runs the same block selection on an already assembled matrix `full`
/// (original face ordering) instead of ray tracing each block.
pub fn compress_from_csr(full: &SparseCsr, tree: &SpatialTree, params: &CompressParams) -> CompressedViewFactor {
    assert_eq!(full.nrows(), tree.len());
    assert_eq!(full.ncols(), tree.len());
    let ctx = Context {
        geometry: None,
        tree,
        params: *params,
    };
    compress_pairs(&ctx, |r, c| Some(full.select(tree.indices(r), tree.indices(c))))
}

fn compress_pairs(
    ctx: &Context,
    source: impl Fn(usize, usize) -> Option<SparseCsr>,
) -> CompressedViewFactor {
    let tree = ctx.tree;
    let root = tree.node(tree.root());
    let first: Vec<usize> = if root.is_leaf() {
        vec![tree.root()]
    } else {
        root.children.clone()
    };
    let depth = tree.node(first[0]).depth;
    let mut blocks = Vec::with_capacity(first.len() * first.len());
    for &r in &first {
        for &c in &first {
            let block = ctx.block(r, c, source(r, c), depth);
            blocks.push(SubBlock {
                rows: tree.node(r).range.clone(),
                cols: tree.node(c).range.clone(),
                block,
            });
        }
    }
    CompressedViewFactor::new(
        tree.kind(),
        tree.perm().to_vec(),
        ctx.params.max_depth,
        ctx.params.tol,
        blocks,
    )
}
