use rayon::prelude::*;

use super::conduction::{cn_step, LayerGrid};
use super::flux::direct_flux;
use super::{clamp_nonnegative, FluxState, PhysParams, SunTrajectory, ThermalError, SIGMA_SB};
use crate::linalg::LinearOperator;
use crate::mesh::TriangleMesh;
use crate::raytrace::Bvh;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialTemperature {
    /// The same temperature at every face and depth.
    Uniform(f64),
    /// Each column starts at the equilibrium temperature of its initial
    /// absorbed flux, but not below `floor`.
    FromFlux { floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: LayerGrid,
    /// Number of passes over the trajectory.
    pub cycles: usize,
    pub initial: InitialTemperature,
    /// Stop after a pass in which no node changed by this much (K) since
    /// the end of the previous pass.
    pub stop_threshold: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: LayerGrid::geometric(LayerGrid::DEFAULT_LAYERS, 2.5, LayerGrid::DEFAULT_RATIO)
                .expect("valid default grid"),
            cycles: 1,
            initial: InitialTemperature::Uniform(110.0),
            stop_threshold: None,
        }
    }
}

/// Fluxes and subsurface temperatures of every face.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub flux: FluxState,
    profiles: Vec<f64>,
    grid: LayerGrid,
}

impl SimState {
    pub fn grid(&self) -> &LayerGrid {
        &self.grid
    }

    /// Temperatures of face `i` at the grid nodes, surface first.
    pub fn profile(&self, i: usize) -> &[f64] {
        let k = self.grid.nodes();
        &self.profiles[i * k..(i + 1) * k]
    }

    /// All profiles, face-major.
    pub fn profiles(&self) -> &[f64] {
        &self.profiles
    }
}

/// Explicit stepper: one visible and one infrared product with `F` per
/// step, so higher scattering orders lag behind in time.
pub struct Simulation<'a, F> {
    f: &'a F,
    mesh: &'a TriangleMesh,
    bvh: &'a Bvh,
    params: &'a PhysParams,
    alpha: Vec<f64>,
    state: SimState,
}

impl<'a, F: LinearOperator> Simulation<'a, F> {
    /// Initial state for the sun at `sun_dir`: direct flux only, with the
    /// geothermal flux added to the absorbed flux and radiated flux equal
    /// to the absorbed flux.
    pub fn new(
        f: &'a F,
        mesh: &'a TriangleMesh,
        bvh: &'a Bvh,
        params: &'a PhysParams,
        grid: LayerGrid,
        initial: InitialTemperature,
        sun_dir: &Vec3,
        r_au: f64,
    ) -> Result<Self, ThermalError> {
        let n = mesh.num_faces();
        if f.nrows() != n || f.ncols() != n {
            return Err(ThermalError::DimensionMismatch {
                expected: n,
                found: f.nrows(),
            });
        }
        params.validate(n)?;
        let alpha = params.albedo_vec(n);
        let eps = params.emissivity;
        let q_direct = direct_flux(mesh, bvh, params, sun_dir, r_au);
        let q_abs: Vec<f64> = (0..n)
            .map(|i| (1.0 - alpha[i]) * q_direct[i] + params.geothermal_flux)
            .collect();
        let t: Vec<f64> = match initial {
            InitialTemperature::Uniform(t0) => {
                if !(t0 > 0.0) {
                    return Err(ThermalError::InvalidParams("initial temperature must be positive".into()));
                }
                vec![t0; n]
            }
            InitialTemperature::FromFlux { floor } => {
                if !(floor > 0.0) {
                    return Err(ThermalError::InvalidParams("temperature floor must be positive".into()));
                }
                q_abs
                    .iter()
                    .map(|q| (q / (eps * SIGMA_SB)).powf(0.25).max(floor))
                    .collect()
            }
        };
        let k = grid.nodes();
        let profiles = t.iter().flat_map(|&t| std::iter::repeat_n(t, k)).collect();
        let flux = FluxState {
            q_direct,
            q_refl: vec![0.0; n],
            q_ir: vec![0.0; n],
            q_rad: q_abs.clone(),
            q_abs,
            t,
        };
        Ok(Self {
            f,
            mesh,
            bvh,
            params,
            alpha,
            state: SimState { flux, profiles, grid },
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    /// Advances by `dt` seconds to the sun at `sun_dir`.
    pub fn step(&mut self, sun_dir: &Vec3, r_au: f64, dt: f64) -> Result<(), ThermalError> {
        let n = self.alpha.len();
        let p = self.params;
        let eps = p.emissivity;
        let old = &self.state.flux;

        let q_direct = direct_flux(self.mesh, self.bvh, p, sun_dir, r_au);
        let vis: Vec<f64> = (0..n).map(|i| self.alpha[i] * (q_direct[i] + old.q_refl[i])).collect();
        let mut q_refl = vec![0.0; n];
        self.f.apply_into(&vis, &mut q_refl);
        clamp_nonnegative(&mut q_refl);

        let ir: Vec<f64> = (0..n).map(|i| old.q_rad[i] + (1.0 - eps) * old.q_ir[i]).collect();
        let mut q_ir = vec![0.0; n];
        self.f.apply_into(&ir, &mut q_ir);
        clamp_nonnegative(&mut q_ir);

        let q_abs: Vec<f64> = (0..n)
            .map(|i| (1.0 - self.alpha[i]) * (q_direct[i] + q_refl[i]) + eps * q_ir[i])
            .collect();

        let grid = &self.state.grid;
        let q_old = &old.q_abs;
        let t: Vec<f64> = self
            .state
            .profiles
            .par_chunks_mut(grid.nodes())
            .enumerate()
            .map(|(i, prof)| cn_step(prof, q_old[i], q_abs[i], dt, p, grid))
            .collect::<Result<_, _>>()?;
        let q_rad = t.iter().map(|t| eps * SIGMA_SB * t.powi(4)).collect();
        self.state.flux = FluxState {
            q_direct,
            q_refl,
            q_ir,
            q_abs,
            q_rad,
            t,
        };
        Ok(())
    }
}

/// One sample of a running simulation.
pub struct Snapshot<'s> {
    /// Pass over the trajectory, from 0.
    pub cycle: usize,
    /// Sample index within the trajectory.
    pub index: usize,
    /// Steps taken so far.
    pub step: usize,
    pub time: f64,
    pub state: &'s SimState,
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub steps: usize,
    pub cycles_run: usize,
    /// Whether the stop threshold was met.
    pub converged: bool,
    /// Largest change of any node between the ends of the last two passes.
    pub last_cycle_change: Option<f64>,
    /// Maximum and mean surface temperature of every face over the last pass.
    pub t_max: Vec<f64>,
    pub t_mean: Vec<f64>,
    pub state: SimState,
}

/// Runs `config.cycles` passes over `traj`. The first sample initializes
/// the state; `observer` sees every sample, the initial one included.
pub fn simulate<F: LinearOperator>(
    f: &F,
    mesh: &TriangleMesh,
    bvh: &Bvh,
    params: &PhysParams,
    traj: &SunTrajectory,
    config: &SimConfig,
    mut observer: impl FnMut(&Snapshot),
) -> Result<SimReport, ThermalError> {
    let samples = traj.samples();
    if samples.is_empty() {
        return Err(ThermalError::InvalidTrajectory("trajectory is empty".into()));
    }
    if config.cycles == 0 {
        return Err(ThermalError::InvalidParams("at least one cycle is required".into()));
    }
    let period = match traj.period() {
        Some(p) => p,
        None if config.cycles == 1 => 0.0,
        None => {
            return Err(ThermalError::InvalidTrajectory(
                "a single sample cannot be repeated".into(),
            ))
        }
    };
    let n = mesh.num_faces();
    let first = &samples[0];
    let mut sim = Simulation::new(
        f,
        mesh,
        bvh,
        params,
        config.grid.clone(),
        config.initial,
        &first.dir,
        first.r_au,
    )?;

    let mut t_max = vec![f64::NEG_INFINITY; n];
    let mut t_sum = vec![0.0; n];
    let mut pass_count = 0usize;
    let accumulate = |state: &SimState, t_max: &mut Vec<f64>, t_sum: &mut Vec<f64>| {
        for i in 0..n {
            let t = state.flux.t[i];
            t_max[i] = t_max[i].max(t);
            t_sum[i] += t;
        }
    };

    let mut steps = 0;
    let mut time = first.t;
    let mut prev_end: Option<Vec<f64>> = None;
    let mut last_change = None;
    let mut converged = false;
    let mut cycles_run = 0;
    for cycle in 0..config.cycles {
        t_max.fill(f64::NEG_INFINITY);
        t_sum.fill(0.0);
        pass_count = 0;
        for (index, s) in samples.iter().enumerate() {
            if cycle > 0 || index > 0 {
                let t_next = s.t + cycle as f64 * period;
                sim.step(&s.dir, s.r_au, t_next - time)?;
                time = t_next;
                steps += 1;
            }
            accumulate(sim.state(), &mut t_max, &mut t_sum);
            pass_count += 1;
            observer(&Snapshot {
                cycle,
                index,
                step: steps,
                time,
                state: sim.state(),
            });
        }
        cycles_run = cycle + 1;
        let end = sim.state().profiles().to_vec();
        if let Some(prev) = &prev_end {
            let change = prev.iter().zip(&end).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            last_change = Some(change);
            if config.stop_threshold.is_some_and(|th| change < th) {
                converged = true;
                break;
            }
        }
        prev_end = Some(end);
    }
    let t_mean = t_sum.iter().map(|s| s / pass_count as f64).collect();
    Ok(SimReport {
        steps,
        cycles_run,
        converged,
        last_cycle_change: last_change,
        t_max,
        t_mean,
        state: sim.into_state(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseCsr;
    use crate::mesh::shapes;
    use crate::thermal::circular_sun_trajectory;

    #[test]
    fn dark_plane_cools_monotonically() {
        let mesh = shapes::flat_grid(3, 3, 1.0, 1.0);
        let bvh = Bvh::build(&mesh);
        let f = SparseCsr::zeros(mesh.num_faces(), mesh.num_faces());
        let params = PhysParams::default();
        let traj = circular_sun_trajectory(-10.0, 86400.0, 24, 1, 1.0).unwrap();
        let config = SimConfig {
            grid: LayerGrid::geometric(20, 0.5, 1.2).unwrap(),
            ..Default::default()
        };
        let mut last = vec![110.0; mesh.num_faces()];
        let mut seen = 0;
        simulate(&f, &mesh, &bvh, &params, &traj, &config, |s| {
            for (a, b) in s.state.flux.t.iter().zip(&last) {
                assert!(*a <= *b);
            }
            last = s.state.flux.t.clone();
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 24);
        assert!(last.iter().all(|&t| t < 110.0));
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let mesh = shapes::flat_grid(1, 1, 1.0, 1.0);
        let bvh = Bvh::build(&mesh);
        let f = SparseCsr::zeros(2, 2);
        let traj = SunTrajectory::new(Vec::new()).unwrap();
        let r = simulate(&f, &mesh, &bvh, &PhysParams::default(), &traj, &SimConfig::default(), |_| {});
        assert!(matches!(r, Err(ThermalError::InvalidTrajectory(_))));
    }
}
