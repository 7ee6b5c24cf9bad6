use std::io::{self, Write};

use super::{CompressedViewFactor, SubBlock, VfBlock};

/// One leaf block of a compressed matrix, at absolute offsets in tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub depth: usize,
    pub row0: usize,
    pub rows: usize,
    pub col0: usize,
    pub cols: usize,
    pub tag: &'static str,
    pub bytes: u64,
    /// Rank of SVD blocks.
    pub q: Option<usize>,
}

/// Leaf blocks in depth-first, row-major order. First-level blocks have
/// depth 1.
pub fn block_stats(f: &CompressedViewFactor) -> Vec<BlockRecord> {
    let mut out = Vec::new();
    for b in f.blocks() {
        collect(b, 0, 0, 1, &mut out);
    }
    out
}

fn collect(b: &SubBlock, row_base: usize, col_base: usize, depth: usize, out: &mut Vec<BlockRecord>) {
    let (row0, col0) = (row_base + b.rows.start, col_base + b.cols.start);
    if let VfBlock::Subdivided(s) = &b.block {
        for c in &s.children {
            collect(c, row0, col0, depth + 1, out);
        }
        return;
    }
    out.push(BlockRecord {
        depth,
        row0,
        rows: b.rows.len(),
        col0,
        cols: b.cols.len(),
        tag: b.block.tag(),
        bytes: b.block.nbytes(),
        q: match &b.block {
            VfBlock::Svd(s) => Some(s.rank()),
            _ => None,
        },
    });
}

/// Writes the records as CSV followed by a totals row whose byte count is
/// the full storage of the matrix, subdivision overhead included.
pub fn write_block_stats(f: &CompressedViewFactor, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "depth,row0,rows,col0,cols,tag,bytes,q")?;
    for r in block_stats(f) {
        let q = r.q.map(|q| q.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.depth, r.row0, r.rows, r.col0, r.cols, r.tag, r.bytes, q
        )?;
    }
    writeln!(out, "total,0,{},0,{},total,{},", f.n(), f.n(), f.nbytes())
}
