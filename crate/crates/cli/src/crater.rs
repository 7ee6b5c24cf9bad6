use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{ArgAction, Args};
use hvf::mesh::{dem_to_mesh, make_cap_crater_mesh, write_obj, CapCraterSpec, Dem};

use crate::create;

#[derive(Args)]
pub struct MkcraterArgs {
    /// Half-angle of the cap seen from the sphere center (degrees).
    #[arg(long, default_value_t = 40.0)]
    beta: f64,
    /// Rim radius (m).
    #[arg(long, default_value_t = 0.8)]
    rc: f64,
    /// Target edge length (m); faces have area at most 2/3 h^2.
    #[arg(long, default_value_t = (2.0f64 / 3.0).powi(5))]
    h: f64,
    /// Sun elevation used to contour the shadow line (degrees).
    #[arg(long, default_value_t = 15.0)]
    e0: f64,
    /// Insert the shadow line as a mesh constraint.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    contour_shadow: bool,
    /// Half-width of the square ground plane (m).
    #[arg(long, default_value_t = 1.0)]
    ground_extent: f64,
    /// Output OBJ file.
    #[arg(short)]
    o: PathBuf,
    /// Region labels CSV (default: next to the mesh, `.labels.csv`).
    #[arg(long)]
    labels: Option<PathBuf>,
}

pub fn mkcrater(a: MkcraterArgs) -> Result<()> {
    let spec = CapCraterSpec {
        beta_deg: a.beta,
        rim_radius: a.rc,
        edge_length: a.h,
        sun_elevation_deg: a.e0,
        contour_shadow: a.contour_shadow,
        ground_extent: a.ground_extent,
    };
    let crater = make_cap_crater_mesh(&spec)?;
    write_obj(&crater.mesh, &a.o)?;
    let labels = a.labels.unwrap_or_else(|| a.o.with_extension("labels.csv"));
    let mut out = create(&labels)?;
    writeln!(out, "face,region")?;
    for (i, r) in crater.labels.iter().enumerate() {
        writeln!(out, "{i},{}", r.name())?;
    }
    out.flush()?;
    println!(
        "faces={} vertices={} mesh={} labels={}",
        crater.mesh.num_faces(),
        crater.mesh.num_vertices(),
        a.o.display(),
        labels.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct MkdemArgs {
    /// Samples along x and y.
    #[arg(long, default_value_t = 201)]
    n: usize,
    /// Grid spacing (m).
    #[arg(long, default_value_t = 5.0)]
    dx: f64,
    /// Radius of the bowl crater at the grid center (m).
    #[arg(long, default_value_t = 200.0)]
    crater_radius: f64,
    /// Depth of the bowl below the plain (m).
    #[arg(long, default_value_t = 40.0)]
    crater_depth: f64,
    /// Height of the raised rim (m).
    #[arg(long, default_value_t = 5.0)]
    rim_height: f64,
    /// Output elevation grid.
    #[arg(short)]
    o: PathBuf,
    /// Also triangulate the grid into this OBJ file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Radius of the finely meshed region about the center (m).
    #[arg(long)]
    roi: Option<f64>,
    /// Maximum face area inside the region of interest (m^2).
    #[arg(long, default_value_t = 200.0)]
    inner_area: f64,
    /// Maximum face area outside it (m^2).
    #[arg(long, default_value_t = 2000.0)]
    outer_area: f64,
}

pub fn mkdem(a: MkdemArgs) -> Result<()> {
    if a.n < 2 || !(a.dx > 0.0) || !(a.crater_radius > 0.0) {
        bail!("need n >= 2, a positive spacing and a positive crater radius");
    }
    let half = 0.5 * (a.n - 1) as f64 * a.dx;
    let (r, d, rim) = (a.crater_radius, a.crater_depth, a.rim_height);
    let dem = Dem::from_fn(a.n, a.n, a.dx, a.dx, -half, -half, |x, y| {
        let rho = (x * x + y * y).sqrt();
        let bowl = if rho < r { -d * (1.0 - (rho / r).powi(2)) } else { 0.0 };
        bowl + rim * (-((rho - r) / (0.2 * r)).powi(2)).exp()
    });
    dem.write(&a.o)?;
    println!("grid {}x{} written to {}", a.n, a.n, a.o.display());
    if let Some(path) = a.mesh {
        let roi = a.roi.unwrap_or(1.5 * r);
        let mesh = dem_to_mesh(&dem, a.inner_area, a.outer_area, roi)?;
        write_obj(&mesh, &path)?;
        println!("faces={} mesh={}", mesh.num_faces(), path.display());
    }
    Ok(())
}
