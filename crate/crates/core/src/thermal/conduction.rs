//! Flux-conservative Crank-Nicolson steps for one subsurface column.
//!
//! A column has nodes `z_0 = 0 < z_1 < ... < z_M`. Node 0 is a surface skin
//! without heat capacity whose temperature follows from the surface energy
//! balance `Q + k (T_1 - T_0) / z_1 = e s T_0^4`. Node 1 owns the slab from
//! the surface down to the midpoint of its lower layer; deeper nodes own
//! half of each adjacent layer.

use super::{PhysParams, ThermalError, SIGMA_SB};
use crate::linalg::tridiag_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    z: Vec<f64>,
}

impl LayerGrid {
    pub const DEFAULT_LAYERS: usize = 30;
    pub const DEFAULT_RATIO: f64 = 1.2;

    /// `layers` layers whose thicknesses grow by `ratio` from the surface
    /// down to `depth`.
    pub fn geometric(layers: usize, depth: f64, ratio: f64) -> Result<Self, ThermalError> {
        if layers == 0 || !(depth > 0.0 && depth.is_finite()) || !(ratio > 0.0 && ratio.is_finite()) {
            return Err(ThermalError::InvalidParams(
                "layer grid needs at least one layer, a positive depth and a positive ratio".into(),
            ));
        }
        let total: f64 = (0..layers).map(|j| ratio.powi(j as i32)).sum();
        let mut z = Vec::with_capacity(layers + 1);
        z.push(0.0);
        let mut acc = 0.0;
        for j in 0..layers {
            acc += depth * ratio.powi(j as i32) / total;
            z.push(acc);
        }
        z[layers] = depth;
        Ok(Self { z })
    }

    /// Node depths starting at the surface `z_0 = 0`.
    pub fn from_depths(z: Vec<f64>) -> Result<Self, ThermalError> {
        if z.len() < 2 || z[0] != 0.0 || z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ThermalError::InvalidParams(
                "node depths must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { z })
    }

    pub fn layers(&self) -> usize {
        self.z.len() - 1
    }

    pub fn nodes(&self) -> usize {
        self.z.len()
    }

    pub fn depths(&self) -> &[f64] {
        &self.z
    }

    pub fn depth(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn thickness(&self, layer: usize) -> f64 {
        self.z[layer + 1] - self.z[layer]
    }

    /// Heat capacity per unit area of every node (zero for the skin).
    pub fn capacities(&self, rho_c: f64) -> Vec<f64> {
        let m = self.layers();
        (0..=m)
            .map(|j| match j {
                0 => 0.0,
                1 if m == 1 => rho_c * self.z[1],
                1 => rho_c * (self.z[1] + 0.5 * self.thickness(1)),
                j if j == m => rho_c * 0.5 * self.thickness(m - 1),
                j => rho_c * 0.5 * (self.thickness(j - 1) + self.thickness(j)),
            })
            .collect()
    }
}

/// Re-linearization stops once the skin temperature moves less than this
/// (K) from the temperature it was linearized about.
const RELINEARIZE_TOL: f64 = 0.1;
const MAX_RELINEARIZE: usize = 30;

enum Surface {
    /// Absorbed flux at the end of the step.
    Radiative { q_new: f64, emissivity: f64 },
    Insulated,
}

/// Advances `profile` (one temperature per grid node, skin first) by `dt`
/// with absorbed surface flux `q_old` at the start and `q_new` at the end
/// of the step, and the geothermal flux entering at the bottom. The
/// emission `e s T_0^4` is linearized about the previous skin temperature,
/// and about `sqrt(T_r T_0)` again while the skin moves by more than
/// 0.1 K. Returns the new skin temperature.
///
/// `q_old` only enters through the skin temperature it produced, which
/// `profile[0]` already holds.
pub fn cn_step(
    profile: &mut [f64],
    q_old: f64,
    q_new: f64,
    dt: f64,
    params: &PhysParams,
    grid: &LayerGrid,
) -> Result<f64, ThermalError> {
    let _ = q_old;
    let surface = Surface::Radiative {
        q_new,
        emissivity: params.emissivity,
    };
    step(profile, surface, params.geothermal_flux, dt, params, grid)?;
    Ok(profile[0])
}

/// Like [`cn_step`] with zero flux through both boundaries; the skin takes
/// the temperature of the first node.
pub fn cn_step_insulated(profile: &mut [f64], dt: f64, params: &PhysParams, grid: &LayerGrid) -> Result<(), ThermalError> {
    step(profile, Surface::Insulated, 0.0, dt, params, grid)
}

fn step(
    profile: &mut [f64],
    surface: Surface,
    bottom_flux: f64,
    dt: f64,
    params: &PhysParams,
    grid: &LayerGrid,
) -> Result<(), ThermalError> {
    let n = grid.nodes();
    if profile.len() != n {
        return Err(ThermalError::DimensionMismatch {
            expected: n,
            found: profile.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ThermalError::InvalidParams("time step must be positive".into()));
    }
    // Unknowns are nodes 1..=m; index k of the system is node k + 1.
    let m = n - 1;
    let cap = grid.capacities(params.rho_c);
    let g: Vec<f64> = (0..m).map(|j| params.conductivity / grid.thickness(j)).collect();
    let t = &*profile;

    let mut lower = vec![0.0; m - 1];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m - 1];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let j = k + 1;
        let c = cap[j] / dt;
        diag[k] = c;
        rhs[k] = c * t[j];
        if j > 1 {
            let gj = g[j - 1];
            lower[k - 1] = -0.5 * gj;
            diag[k] += 0.5 * gj;
            rhs[k] += 0.5 * gj * (t[j - 1] - t[j]);
        }
        if j < m {
            let gj = g[j];
            upper[k] = -0.5 * gj;
            diag[k] += 0.5 * gj;
            rhs[k] += 0.5 * gj * (t[j + 1] - t[j]);
        }
    }
    rhs[m - 1] += bottom_flux;

    let (q_new, es) = match surface {
        Surface::Insulated => {
            let next = tridiag_solve(&lower, &diag, &upper, &rhs)?;
            check_positive(&next, 1)?;
            profile[1..].copy_from_slice(&next);
            profile[0] = profile[1];
            return Ok(());
        }
        Surface::Radiative { q_new, emissivity } => (q_new, emissivity * SIGMA_SB),
    };

    // Old level: the flux the skin passed down at the start of the step.
    let a = g[0];
    rhs[0] += 0.5 * a * (t[0] - t[1]);
    // New level: with e s T^4 ~ e s (T_r^4 + 4 T_r^3 (T - T_r)), the skin
    // balance gives T_0 = (q + 3 e s T_r^4 + a T_1) / (a + b), b = 4 e s T_r^3,
    // and the flux into node 1 is a (T_0 - T_1).
    let mut tr = t[0];
    for _ in 0..MAX_RELINEARIZE {
        let b = 4.0 * es * tr.powi(3);
        let src = q_new + 3.0 * es * tr.powi(4);
        let mut d = diag.clone();
        let mut r = rhs.clone();
        d[0] += 0.5 * a * b / (a + b);
        r[0] += 0.5 * a * src / (a + b);
        let next = tridiag_solve(&lower, &d, &upper, &r)?;
        let t0 = (src + a * next[0]) / (a + b);
        if (t0 - tr).abs() <= RELINEARIZE_TOL || !(t0 > 0.0) {
            check_positive(&[t0], 0)?;
            check_positive(&next, 1)?;
            profile[0] = t0;
            profile[1..].copy_from_slice(&next);
            return Ok(());
        }
        tr = (tr * t0).sqrt();
    }
    Err(ThermalError::NonPositiveTemperature {
        layer: 0,
        value: f64::NAN,
    })
}

fn check_positive(values: &[f64], first: usize) -> Result<(), ThermalError> {
    for (k, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(ThermalError::NonPositiveTemperature { layer: first + k, value: v });
        }
    }
    Ok(())
}
