use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use hvf::mesh::read_obj;
use hvf::thermal::{
    circular_sun_trajectory, direct_flux, equilibrium as solve_equilibrium, simulate as run_simulation, Albedo,
    InitialTemperature, LayerGrid, PhysParams, SimConfig, SunTrajectory,
};
use hvf::{Bvh, Vec3};

use crate::create;
use crate::operator::Operator;

#[derive(Args)]
pub struct MktrajArgs {
    /// Sun elevation (degrees).
    #[arg(long, default_value_t = 15.0)]
    e0: f64,
    /// Length of one revolution (s).
    #[arg(long, default_value_t = 2551443.0)]
    period: f64,
    /// Samples per revolution.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Sun distance (AU).
    #[arg(long, default_value_t = 1.0)]
    r_au: f64,
    /// Output CSV.
    #[arg(short)]
    o: PathBuf,
}

pub fn mktraj(a: MktrajArgs) -> Result<()> {
    let traj = circular_sun_trajectory(a.e0, a.period, a.steps, a.cycles, a.r_au)?;
    let mut out = create(&a.o)?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    println!("samples={}", traj.len());
    Ok(())
}

#[derive(Args)]
struct Material {
    /// Albedo.
    #[arg(long, default_value_t = 0.3)]
    albedo: f64,
    /// Emissivity.
    #[arg(long, default_value_t = 0.99)]
    emiss: f64,
    /// Solar constant at 1 AU (W/m^2).
    #[arg(long = "S", default_value_t = 1361.0)]
    s: f64,
    /// Geothermal flux (W/m^2).
    #[arg(long = "Fg", default_value_t = 0.0)]
    fg: f64,
    /// Volumetric heat capacity (J/m^3/K).
    #[arg(long, default_value_t = 1.2e6)]
    rhoc: f64,
    /// Thermal conductivity (W/m/K).
    #[arg(long, default_value_t = 2.5e-3)]
    k: f64,
}

impl Material {
    fn params(&self, r_au: f64) -> PhysParams {
        PhysParams {
            albedo: Albedo::Uniform(self.albedo),
            emissivity: self.emiss,
            solar_constant: self.s,
            sun_distance: r_au,
            geothermal_flux: self.fg,
            rho_c: self.rhoc,
            conductivity: self.k,
        }
    }
}

#[derive(Args)]
pub struct EquilibriumArgs {
    /// Input OBJ mesh.
    #[arg(long)]
    mesh: PathBuf,
    /// View-factor matrix (HVFM or HVFC).
    #[arg(long = "F")]
    f: PathBuf,
    /// Sun elevation above the x-y plane (degrees).
    #[arg(long, default_value_t = 15.0)]
    e0: f64,
    /// Sun azimuth from +x toward +y (degrees).
    #[arg(long, default_value_t = 0.0)]
    azimuth: f64,
    /// Sun distance (AU).
    #[arg(long, default_value_t = 1.0)]
    r_au: f64,
    #[command(flatten)]
    material: Material,
    /// Output CSV.
    #[arg(short)]
    o: PathBuf,
}

fn sun_direction(e0_deg: f64, az_deg: f64) -> Vec3 {
    let (e, a) = (e0_deg.to_radians(), az_deg.to_radians());
    Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin())
}

pub fn equilibrium(a: EquilibriumArgs) -> Result<()> {
    let params = a.material.params(a.r_au);
    let mesh = read_obj(&a.mesh)?;
    params.validate(mesh.num_faces())?;
    let f = Operator::open(&a.f)?;
    f.check_faces(mesh.num_faces())?;
    let bvh = Bvh::build(&mesh);
    let q = direct_flux(&mesh, &bvh, &params, &sun_direction(a.e0, a.azimuth), a.r_au);
    let (state, report) = solve_equilibrium(&f, &params, &q)?;
    let mut out = create(&a.o)?;
    state.write_csv(&mut out)?;
    out.flush()?;
    let (lo, hi) = state
        .t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    println!(
        "N={} iterations={}+{} residuals={:.2e},{:.2e} T_min={lo:.3} T_max={hi:.3}",
        mesh.num_faces(),
        report.visible.iterations,
        report.infrared.iterations,
        report.residual_visible,
        report.residual_infrared
    );
    Ok(())
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Input OBJ mesh.
    #[arg(long)]
    mesh: PathBuf,
    /// View-factor matrix (HVFM or HVFC).
    #[arg(long = "F")]
    f: PathBuf,
    /// Sun trajectory CSV (`t,dx,dy,dz,r_au`).
    #[arg(long)]
    traj: PathBuf,
    /// Number of subsurface layers.
    #[arg(long = "M", default_value_t = LayerGrid::DEFAULT_LAYERS)]
    m: usize,
    /// Depth of the deepest node (m).
    #[arg(long, default_value_t = 2.5)]
    depth: f64,
    /// Thickness ratio of successive layers.
    #[arg(long, default_value_t = LayerGrid::DEFAULT_RATIO)]
    ratio: f64,
    #[command(flatten)]
    material: Material,
    /// Passes over the trajectory.
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Initial temperature of all faces and layers (K).
    #[arg(long, default_value_t = 110.0)]
    t0: f64,
    /// Stop once no node changes by this much (K) between passes.
    #[arg(long)]
    stop_threshold: Option<f64>,
    /// Write a snapshot every this many steps (0: none).
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Output directory.
    #[arg(short)]
    o: PathBuf,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let traj = SunTrajectory::read_csv(&a.traj)?;
    if traj.is_empty() {
        bail!("trajectory {} is empty", a.traj.display());
    }
    let r_au = traj.samples()[0].r_au;
    let params = a.material.params(r_au);
    let mesh = read_obj(&a.mesh)?;
    params.validate(mesh.num_faces())?;
    let grid = LayerGrid::geometric(a.m, a.depth, a.ratio)?;
    let f = Operator::open(&a.f)?;
    f.check_faces(mesh.num_faces())?;
    let bvh = Bvh::build(&mesh);
    std::fs::create_dir_all(&a.o).with_context(|| format!("cannot create {}", a.o.display()))?;
    let config = SimConfig {
        grid,
        cycles: a.cycles,
        initial: InitialTemperature::Uniform(a.t0),
        stop_threshold: a.stop_threshold,
    };
    let mut io_error = None;
    let report = run_simulation(&f, &mesh, &bvh, &params, &traj, &config, |s| {
        if a.snapshot_every == 0 || s.step % a.snapshot_every != 0 || io_error.is_some() {
            return;
        }
        let path = a.o.join(format!("snapshot_{:06}.csv", s.step));
        let written = create(&path).and_then(|mut out| {
            s.state.flux.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        });
        if let Err(e) = written {
            io_error = Some(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let mut out = create(&a.o.join("summary.csv"))?;
    writeln!(out, "face,T_max,T_mean")?;
    for i in 0..mesh.num_faces() {
        writeln!(out, "{i},{},{}", report.t_max[i], report.t_mean[i])?;
    }
    out.flush()?;
    let mut out = create(&a.o.join("final.csv"))?;
    report.state.flux.write_csv(&mut out)?;
    out.flush()?;
    println!(
        "steps={} cycles={} converged={} last_cycle_change={}",
        report.steps,
        report.cycles_run,
        report.converged,
        report
            .last_cycle_change
            .map_or_else(|| "n/a".to_string(), |c| format!("{c:.4}"))
    );
    Ok(())
}
