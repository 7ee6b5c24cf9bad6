mod assemble;
mod crater;
mod operator;
mod thermal;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "hvf", version, about = "Compressed view-factor matrices and surface thermal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TreeArg {
    Quad,
    Oct,
}

impl From<TreeArg> for hvf::TreeKind {
    fn from(t: TreeArg) -> Self {
        match t {
            TreeArg::Quad => hvf::TreeKind::Quad,
            TreeArg::Oct => hvf::TreeKind::Oct,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mesh a spherical-cap crater in a flat plain.
    Mkcrater(crater::MkcraterArgs),
    /// Write a synthetic crater elevation grid and optionally mesh it.
    Mkdem(crater::MkdemArgs),
    /// Write a circular sun trajectory.
    Mktraj(thermal::MktrajArgs),
    /// Assemble the view-factor matrix of a mesh.
    Assemble(assemble::AssembleArgs),
    /// Per-block statistics of a compressed matrix.
    Stats(assemble::StatsArgs),
    /// Equilibrium temperatures for one sun position.
    Equilibrium(thermal::EquilibriumArgs),
    /// Time-dependent run with subsurface conduction.
    Simulate(thermal::SimulateArgs),
    /// Compare crater equilibrium temperatures against the closed form.
    ValidateCap(validate::ValidateArgs),
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HVF_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("HVF_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("HVF_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Mkcrater(a) => crater::mkcrater(a),
        Command::Mkdem(a) => crater::mkdem(a),
        Command::Mktraj(a) => thermal::mktraj(a),
        Command::Assemble(a) => assemble::assemble(a),
        Command::Stats(a) => assemble::stats(a),
        Command::Equilibrium(a) => thermal::equilibrium(a),
        Command::Simulate(a) => thermal::simulate(a),
        Command::ValidateCap(a) => validate::validate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn create(path: &PathBuf) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}
