use rayon::prelude::*;

use super::{clamp_nonnegative, FluxState, PhysParams, ThermalError, SIGMA_SB};
use crate::linalg::{fixed_point_solve, FixedPointReport, LinearOperator};
use crate::mesh::TriangleMesh;
use crate::raytrace::{sun_visible, Bvh};
use crate::Vec3;

pub const EQ_TOL: f64 = 1e-7;
pub const EQ_MAX_ITER: usize = 50;

/// Point-sun insolation `S / R^2 * max(n . d, 0)` on every face whose
/// centroid sees the sun.
pub fn direct_flux(mesh: &TriangleMesh, bvh: &Bvh, params: &PhysParams, sun_dir: &Vec3, r_au: f64) -> Vec<f64> {
    let s = params.solar_constant / (r_au * r_au);
    (0..mesh.num_faces())
        .into_par_iter()
        .map(|i| {
            let mu = mesh.normal(i).dot(sun_dir);
            if mu > 0.0 && sun_visible(mesh, bvh, i, sun_dir) {
                s * mu
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct EquilibriumReport {
    pub visible: FixedPointReport,
    pub infrared: FixedPointReport,
    /// `||(I - F diag(a)) Q_refl - F diag(a) Q_direct|| / ||F diag(a) Q_direct||`.
    pub residual_visible: f64,
    /// The same for the infrared system.
    pub residual_infrared: f64,
}

/// Steady radiative balance for fixed insolation. Solves for the reflected
/// visible flux, then for the infrared flux, clamping negative components
/// after every application of `F`.
pub fn equilibrium<F: LinearOperator>(
    f: &F,
    params: &PhysParams,
    q_direct: &[f64],
) -> Result<(FluxState, EquilibriumReport), ThermalError> {
    let n = q_direct.len();
    if f.nrows() != n || f.ncols() != n {
        return Err(ThermalError::DimensionMismatch {
            expected: n,
            found: f.nrows(),
        });
    }
    params.validate(n)?;
    let alpha = params.albedo_vec(n);
    let eps = params.emissivity;
    let h = params.geothermal_flux;

    let apply = |x: &[f64]| {
        let mut y = vec![0.0; n];
        f.apply_into(x, &mut y);
        y
    };
    let apply_clamped = |x: &[f64], y: &mut [f64]| {
        f.apply_into(x, y);
        clamp_nonnegative(y);
    };

    let scaled: Vec<f64> = q_direct.iter().zip(&alpha).map(|(q, a)| a * q).collect();
    let rhs_vis_raw = apply(&scaled);
    let mut rhs_vis = rhs_vis_raw.clone();
    clamp_nonnegative(&mut rhs_vis);
    let mut buf = vec![0.0; n];
    let (q_refl, rep_vis) = fixed_point_solve(
        |x, y| {
            for ((b, xi), a) in buf.iter_mut().zip(x).zip(&alpha) {
                *b = a * xi;
            }
            apply_clamped(&buf, y);
        },
        &rhs_vis,
        EQ_TOL,
        EQ_MAX_ITER,
    )?;
    let residual_visible = {
        let ax: Vec<f64> = q_refl.iter().zip(&alpha).map(|(q, a)| a * q).collect();
        relative_residual(&q_refl, &apply(&ax), &rhs_vis_raw)
    };

    let emitted: Vec<f64> = (0..n)
        .map(|i| (1.0 - alpha[i]) * (q_direct[i] + q_refl[i]) + h)
        .collect();
    let rhs_ir_raw = apply(&emitted);
    let mut rhs_ir = rhs_ir_raw.clone();
    clamp_nonnegative(&mut rhs_ir);
    let (q_ir, rep_ir) = fixed_point_solve(
        |x, y| {
            for (b, xi) in buf.iter_mut().zip(x) {
                *b = eps * xi;
            }
            apply_clamped(&buf, y);
        },
        &rhs_ir,
        EQ_TOL,
        EQ_MAX_ITER,
    )?;
    let residual_infrared = {
        let ex: Vec<f64> = q_ir.iter().map(|q| eps * q).collect();
        relative_residual(&q_ir, &apply(&ex), &rhs_ir_raw)
    };

    let q_abs: Vec<f64> = (0..n)
        .map(|i| (1.0 - alpha[i]) * (q_direct[i] + q_refl[i]) + eps * q_ir[i])
        .collect();
    let t: Vec<f64> = q_abs.iter().map(|q| ((q + h) / (eps * SIGMA_SB)).powf(0.25)).collect();
    let q_rad: Vec<f64> = t.iter().map(|t| eps * SIGMA_SB * t.powi(4)).collect();
    Ok((
        FluxState {
            q_direct: q_direct.to_vec(),
            q_refl,
            q_ir,
            q_abs,
            q_rad,
            t,
        },
        EquilibriumReport {
            visible: rep_vis,
            infrared: rep_ir,
            residual_visible,
            residual_infrared,
        },
    ))
}

/// `||x - kx - rhs|| / ||rhs||`, zero for a zero right side.
fn relative_residual(x: &[f64], kx: &[f64], rhs: &[f64]) -> f64 {
    let num: f64 = (0..x.len()).map(|i| (x[i] - kx[i] - rhs[i]).powi(2)).sum::<f64>().sqrt();
    let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
