use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hvf::hmatrix::{compress, CompressParams};
use hvf::mesh::{make_cap_crater_mesh, CapCraterSpec, Region};
use hvf::spatial::DEFAULT_MIN_LEAF;
use hvf::thermal::{analytic_cap_field, direct_flux, equilibrium, Albedo, PhysParams};
use hvf::{viewfactor, Bvh, LinearOperator, SpatialTree};

use crate::{create, TreeArg};

#[derive(Clone, Copy, ValueEnum)]
enum Faces {
    /// Faces labeled as crater shadow.
    Shadow,
    /// All crater faces.
    Crater,
    All,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Comma-separated edge lengths (m).
    #[arg(long, value_delimiter = ',', required = true)]
    hs: Vec<f64>,
    /// Comma-separated compression tolerances.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
    tols: Vec<f64>,
    #[arg(long, default_value_t = 40.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.8)]
    rc: f64,
    /// Sun elevation (degrees).
    #[arg(long, default_value_t = 15.0)]
    e0: f64,
    /// Solar constant (W/m^2).
    #[arg(long = "S", default_value_t = 1000.0)]
    s: f64,
    #[arg(long, default_value_t = 0.3)]
    albedo: f64,
    #[arg(long, default_value_t = 0.99)]
    emiss: f64,
    #[arg(long, value_enum, default_value_t = TreeArg::Quad)]
    tree: TreeArg,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 16384)]
    min_size: usize,
    /// Faces over which errors are measured.
    #[arg(long, value_enum, default_value_t = Faces::Shadow)]
    faces: Faces,
    /// Output directory for errors.csv, sizes.csv and timings.csv.
    #[arg(short)]
    o: PathBuf,
}

struct Row {
    n: usize,
    eps: String,
    norms: [f64; 3],
    bytes: u64,
    t_assemble: f64,
    t_matvec: f64,
}

/// Mean wall time of one product, over at least 0.2 s of repetitions.
fn time_matvec(f: &impl LinearOperator) -> f64 {
    let x: Vec<f64> = (0..f.ncols()).map(|i| 1.0 + (i % 7) as f64).collect();
    let mut y = vec![0.0; f.nrows()];
    let start = Instant::now();
    let mut reps = 0u32;
    while reps < 3 || start.elapsed().as_secs_f64() < 0.2 {
        f.apply_into(&x, &mut y);
        reps += 1;
    }
    start.elapsed().as_secs_f64() / reps as f64
}

/// Relative l1, l2 and max errors over `faces`.
fn norms(t: &[f64], exact: &[f64], faces: &[usize]) -> [f64; 3] {
    let (mut e1, mut e2, mut ei, mut r1, mut r2, mut ri) = (0.0, 0.0, 0.0f64, 0.0, 0.0, 0.0f64);
    for &i in faces {
        let d = (t[i] - exact[i]).abs();
        e1 += d;
        e2 += d * d;
        ei = ei.max(d);
        r1 += exact[i].abs();
        r2 += exact[i] * exact[i];
        ri = ri.max(exact[i].abs());
    }
    [e1 / r1, (e2 / r2).sqrt(), ei / ri]
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    if a.tols.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        bail!("tolerances must lie in (0, 1)");
    }
    std::fs::create_dir_all(&a.o).with_context(|| format!("cannot create {}", a.o.display()))?;
    let params = PhysParams {
        albedo: Albedo::Uniform(a.albedo),
        emissivity: a.emiss,
        solar_constant: a.s,
        ..Default::default()
    };
    params.validate(0)?;
    let mut rows = Vec::new();
    for &h in &a.hs {
        let spec = CapCraterSpec {
            beta_deg: a.beta,
            rim_radius: a.rc,
            edge_length: h,
            sun_elevation_deg: a.e0,
            contour_shadow: true,
            ground_extent: (a.rc * 1.25).max(a.rc + h),
        };
        let crater = make_cap_crater_mesh(&spec)?;
        let mesh = &crater.mesh;
        let n = mesh.num_faces();
        let bvh = Bvh::build(mesh);
        let q = direct_flux(mesh, &bvh, &params, &spec.sun_dir(), 1.0);
        let exact = analytic_cap_field(&crater, &params).context("analytic solution needs a uniform albedo")?;
        let faces: Vec<usize> = (0..n)
            .filter(|&i| match a.faces {
                Faces::Shadow => crater.labels[i] == Region::CraterShadow,
                Faces::Crater => crater.labels[i].is_crater(),
                Faces::All => true,
            })
            .collect();
        if faces.is_empty() {
            bail!("no faces to compare for h = {h}");
        }

        let start = Instant::now();
        let full = viewfactor::assemble_full(mesh, &bvh);
        let t_assemble = start.elapsed().as_secs_f64();
        let (state, _) = equilibrium(&full, &params, &q)?;
        rows.push(Row {
            n,
            eps: "full".into(),
            norms: norms(&state.t, &exact, &faces),
            bytes: full.nbytes(),
            t_assemble,
            t_matvec: time_matvec(&full),
        });
        drop(full);

        let tree = SpatialTree::build(mesh, a.tree.into(), a.max_depth, DEFAULT_MIN_LEAF);
        for &tol in &a.tols {
            let cp = CompressParams {
                tol,
                max_depth: a.max_depth,
                min_size: a.min_size,
                ..Default::default()
            };
            let start = Instant::now();
            let f = compress(mesh, &bvh, &tree, &cp);
            let t_assemble = start.elapsed().as_secs_f64();
            let (state, _) = equilibrium(&f, &params, &q)?;
            rows.push(Row {
                n,
                eps: format!("{tol:e}"),
                norms: norms(&state.t, &exact, &faces),
                bytes: f.nbytes(),
                t_assemble,
                t_matvec: time_matvec(&f),
            });
        }
        let last = &rows[rows.len() - 1 - a.tols.len()];
        println!("N={n} full l2={:.3e}", last.norms[1]);
    }

    let mut errors = create(&a.o.join("errors.csv"))?;
    let mut sizes = create(&a.o.join("sizes.csv"))?;
    let mut timings = create(&a.o.join("timings.csv"))?;
    writeln!(errors, "N,eps,l1,l2,linf,bytes,t_assemble_s,t_matvec_s")?;
    writeln!(sizes, "N,eps,bytes")?;
    writeln!(timings, "N,eps,t_assemble_s,t_matvec_s")?;
    for r in &rows {
        writeln!(
            errors,
            "{},{},{},{},{},{},{},{}",
            r.n, r.eps, r.norms[0], r.norms[1], r.norms[2], r.bytes, r.t_assemble, r.t_matvec
        )?;
        writeln!(sizes, "{},{},{}", r.n, r.eps, r.bytes)?;
        writeln!(timings, "{},{},{},{}", r.n, r.eps, r.t_assemble, r.t_matvec)?;
    }
    errors.flush()?;
    sizes.flush()?;
    timings.flush()?;
    Ok(())
}
