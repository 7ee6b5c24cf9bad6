//! Closed-form equilibrium temperatures for a spherical-cap crater in a flat
//! plain, where every point of the bowl sees the same fraction `f` of the
//! bowl and scattered fluxes are uniform.

use super::{PhysParams, SIGMA_SB};
use crate::mesh::{CapCraterSpec, CraterMesh, Region};

/// View fraction of the bowl, `1/f = 1 + (D/d)^2 / 4`.
pub fn cap_view_fraction(spec: &CapCraterSpec) -> f64 {
    let ratio = spec.diameter() / spec.depth();
    1.0 / (1.0 + ratio * ratio / 4.0)
}

/// Ratio of the scattered flux to the direct flux on the plain,
/// `b = f (e + a (1 - f)) / (1 - a f)`.
pub fn cap_b(f: f64, albedo: f64, emissivity: f64) -> f64 {
    f * (emissivity + albedo * (1.0 - f)) / (1.0 - albedo * f)
}

/// Equilibrium temperature on the plain, on the sunlit bowl with local
/// `sin(e) = sin_e`, or in the bowl's shadow, for the sun elevation of
/// `spec`. Returns `None` for the uncontoured [`Region::Crater`] label or a
/// per-face albedo.
pub fn analytic_cap_temperature(spec: &CapCraterSpec, params: &PhysParams, region: Region, sin_e: f64) -> Option<f64> {
    let albedo = params.albedo.uniform()?;
    let eps = params.emissivity;
    let s = params.solar_constant / (params.sun_distance * params.sun_distance);
    let sin_sun = spec.sun_elevation_deg.to_radians().sin();
    let b = cap_b(cap_view_fraction(spec), albedo, eps);
    let factor = match region {
        Region::Ground => sin_sun,
        Region::CraterLit => sin_e.max(0.0) + b * sin_sun,
        Region::CraterShadow => b * sin_sun,
        Region::Crater => return None,
    };
    Some(((1.0 - albedo) * s * factor / (eps * SIGMA_SB)).powf(0.25))
}

/// Analytic temperature of every face of a crater mesh. Lit faces use their
/// facet normal for the local sun elevation; uncontoured crater faces are
/// classified by the exact shadow test at the centroid.
pub fn analytic_cap_field(crater: &CraterMesh, params: &PhysParams) -> Option<Vec<f64>> {
    let spec = &crater.spec;
    let d = spec.sun_dir();
    (0..crater.mesh.num_faces())
        .map(|i| {
            let c = crater.mesh.centroid(i);
            let region = match crater.labels[i] {
                Region::Crater if spec.in_shadow(c.x, c.y) => Region::CraterShadow,
                Region::Crater => Region::CraterLit,
                r => r,
            };
            analytic_cap_temperature(spec, params, region, crater.mesh.normal(i).dot(&d))
        })
        .collect()
}
