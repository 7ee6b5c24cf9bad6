use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hvf::hmatrix::{load, load_csr};
use hvf::{CompressedViewFactor, LinearOperator, SparseCsr};

/// A view-factor matrix read from either container format.
pub enum Operator {
    Compressed(CompressedViewFactor),
    Full(SparseCsr),
}

impl Operator {
    pub fn open(path: &Path) -> Result<Self> {
        let mut magic = [0u8; 4];
        File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .with_context(|| format!("cannot read {}", path.display()))?;
        let op = match &magic {
            b"HVFM" => Operator::Compressed(load(path)?),
            b"HVFC" => Operator::Full(load_csr(path)?),
            _ => bail!("{} is neither an HVFM nor an HVFC container", path.display()),
        };
        if op.nrows() != op.ncols() {
            bail!("view-factor matrix must be square");
        }
        Ok(op)
    }

    pub fn check_faces(&self, faces: usize) -> Result<()> {
        if self.nrows() != faces {
            bail!("matrix has {} rows but the mesh has {faces} faces", self.nrows());
        }
        Ok(())
    }
}

impl LinearOperator for Operator {
    fn nrows(&self) -> usize {
        match self {
            Operator::Compressed(c) => c.nrows(),
            Operator::Full(f) => f.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Operator::Compressed(c) => c.ncols(),
            Operator::Full(f) => f.ncols(),
        }
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Operator::Compressed(c) => c.apply_into(x, y),
            Operator::Full(f) => f.apply_into(x, y),
        }
    }
}
