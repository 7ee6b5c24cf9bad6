use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use hvf::hmatrix::{block_stats, compress, load, save, save_csr, write_block_stats, CompressParams};
use hvf::mesh::read_obj;
use hvf::spatial::DEFAULT_MIN_LEAF;
use hvf::{viewfactor, Bvh, SpatialTree};

use crate::{create, TreeArg};

#[derive(Args)]
pub struct AssembleArgs {
    /// Input OBJ mesh.
    #[arg(long)]
    mesh: PathBuf,
    /// Relative singular value cutoff for low-rank blocks.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = TreeArg::Quad)]
    tree: TreeArg,
    /// Depth of the spatial tree and of block recursion.
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    /// Blocks with fewer entries than this are stored directly.
    #[arg(long, default_value_t = 16384)]
    min_size: usize,
    /// Initial rank of the rank search.
    #[arg(long, default_value_t = 8)]
    k0: usize,
    /// Seed of the SVD start vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the uncompressed matrix as an HVFC container instead.
    #[arg(long)]
    full: bool,
    /// Output container.
    #[arg(short)]
    o: PathBuf,
}

pub fn assemble(a: AssembleArgs) -> Result<()> {
    if !(a.tol > 0.0 && a.tol < 1.0) {
        bail!("--tol must lie in (0, 1)");
    }
    if a.max_depth == 0 {
        bail!("--max-depth must be at least 1");
    }
    let mesh = read_obj(&a.mesh)?;
    let bvh = Bvh::build(&mesh);
    let start = Instant::now();
    if a.full {
        let f = viewfactor::assemble_full(&mesh, &bvh);
        let secs = start.elapsed().as_secs_f64();
        save_csr(&f, &a.o)?;
        println!(
            "N={} nnz={} bytes={} t_assemble_s={secs:.3}",
            mesh.num_faces(),
            f.nnz(),
            f.nbytes()
        );
        return Ok(());
    }
    let tree = SpatialTree::build(&mesh, a.tree.into(), a.max_depth, DEFAULT_MIN_LEAF);
    let params = CompressParams {
        tol: a.tol,
        max_depth: a.max_depth,
        min_size: a.min_size,
        k0: a.k0,
        seed: a.seed,
    };
    let f = compress(&mesh, &bvh, &tree, &params);
    let secs = start.elapsed().as_secs_f64();
    save(&f, &a.o)?;
    let records = block_stats(&f);
    let count = |tag: &str| records.iter().filter(|r| r.tag == tag).count();
    println!(
        "N={} bytes={} t_assemble_s={secs:.3} blocks: zero={} dense={} csr={} svd={}",
        f.n(),
        f.nbytes(),
        count("zero"),
        count("dense"),
        count("csr"),
        count("svd")
    );
    Ok(())
}

#[derive(Args)]
pub struct StatsArgs {
    /// Compressed matrix (HVFM).
    #[arg(long = "F")]
    f: PathBuf,
    /// Output CSV.
    #[arg(short)]
    o: PathBuf,
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let f = load(&a.f)?;
    let mut out = create(&a.o)?;
    write_block_stats(&f, &mut out)?;
    out.flush()?;
    println!("records={} bytes={}", block_stats(&f).len(), f.nbytes());
    Ok(())
}
