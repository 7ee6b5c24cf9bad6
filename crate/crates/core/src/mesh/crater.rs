//! Spherical-cap crater in a flat ground plane, optionally with the shadow
//! line cast by the crater rim contoured into the mesh.
//!
//! Coordinates: the ground is the plane z = 0, the crater axis is the z-axis
//! and the sphere center sits at height `H_c = r cos(beta)` above the ground,
//! so the bowl bottom is at z = H_c - r. The sun direction is
//! `(cos e0, 0, sin e0)`, i.e. the sun lies toward +x.

use std::f64::consts::PI;

use super::planar::{self, PlanarDomain};
use super::{MeshError, TriangleMesh};
use crate::Vec3;

/// Parameters of the spherical-cap crater test problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapCraterSpec {
    /// Angle between the crater rim and the crater axis, seen from the
    /// sphere center (degrees).
    pub beta_deg: f64,
    /// Crater rim radius (m).
    pub rim_radius: f64,
    /// Target edge length h (m); every face has area at most `(2/3) h^2`.
    pub edge_length: f64,
    /// Sun elevation above the ground plane used for shadow contouring (degrees).
    pub sun_elevation_deg: f64,
    pub contour_shadow: bool,
    /// Half-width of the square ground plane around the crater (m).
    pub ground_extent: f64,
}

impl Default for CapCraterSpec {
    fn default() -> Self {
        Self {
            beta_deg: 40.0,
            rim_radius: 0.8,
            edge_length: (2.0f64 / 3.0).powi(5),
            sun_elevation_deg: 15.0,
            contour_shadow: true,
            ground_extent: 1.0,
        }
    }
}

impl CapCraterSpec {
    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |msg: &str| Err(MeshError::InvalidSpec(msg.to_string()));
        if !(self.beta_deg > 0.0 && self.beta_deg < 90.0) {
            return bad("beta must lie strictly between 0 and 90 degrees");
        }
        if !(self.rim_radius > 0.0) {
            return bad("rim radius must be positive");
        }
        if !(self.edge_length > 0.0) {
            return bad("edge length must be positive");
        }
        if self.edge_length > self.rim_radius {
            return bad("edge length exceeds the rim radius");
        }
        if !(self.sun_elevation_deg > 0.0 && self.sun_elevation_deg <= 90.0) {
            return bad("sun elevation must lie in (0, 90] degrees");
        }
        if !(self.ground_extent > self.rim_radius + 0.5 * self.edge_length) {
            return bad("ground extent must exceed the rim radius by at least h/2");
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta_deg.to_radians()
    }

    /// Sphere radius r = r_c / sin(beta).
    pub fn sphere_radius(&self) -> f64 {
        self.rim_radius / self.beta().sin()
    }

    /// Height of the sphere center above the ground, H_c = r cos(beta).
    pub fn center_height(&self) -> f64 {
        self.sphere_radius() * self.beta().cos()
    }

    /// Crater diameter D = 2 r sin(beta).
    pub fn diameter(&self) -> f64 {
        2.0 * self.rim_radius
    }

    /// Crater depth d = r (1 - cos(beta)).
    pub fn depth(&self) -> f64 {
        self.sphere_radius() * (1.0 - self.beta().cos())
    }

    pub fn sun_dir(&self) -> Vec3 {
        let e = self.sun_elevation_deg.to_radians();
        Vec3::new(e.cos(), 0.0, e.sin())
    }

    /// Surface height z(x, y): on the spherical bowl inside the rim, zero outside.
    pub fn surface_z(&self, x: f64, y: f64) -> f64 {
        let rho2 = x * x + y * y;
        if rho2 >= self.rim_radius * self.rim_radius {
            return 0.0;
        }
        let r = self.sphere_radius();
        (self.center_height() - (r * r - rho2).sqrt()).min(0.0)
    }

    /// Residual of the silhouette condition at planar point (x, y):
    /// positive inside the shadow, zero on the silhouette and on the rim.
    ///
    /// A bowl point at depth `D = sqrt(r^2 - x^2 - y^2) - H_c` below the rim
    /// plane is on the shadow line when the ray toward the sun grazes the
    /// rim point `(sqrt(r_c^2 - y^2), y, 0)`, i.e. when
    /// `D = tan(e0) (sqrt(r_c^2 - y^2) - x)`.
    pub fn silhouette_residual(&self, x: f64, y: f64) -> f64 {
        let r = self.sphere_radius();
        let t = self.sun_elevation_deg.to_radians().tan();
        let depth = (r * r - x * x - y * y).max(0.0).sqrt() - self.center_height();
        let rim = (self.rim_radius * self.rim_radius - y * y).max(0.0).sqrt();
        depth - t * (rim - x)
    }

    /// Exact geometric shadow test for a planar point inside the rim.
    pub fn in_shadow(&self, x: f64, y: f64) -> bool {
        if self.sun_elevation_deg >= 90.0 {
            return false;
        }
        x * x + y * y < self.rim_radius * self.rim_radius && self.silhouette_residual(x, y) > 0.0
    }

    /// Maximum |y| of the silhouette, or `None` when the crater has no shadow.
    ///
    /// The residual is concave in x with a root at the rim; an interior root
    /// exists iff its slope at the rim is negative, i.e. iff
    /// `sqrt(r_c^2 - y^2) > tan(e0) H_c`.
    pub fn silhouette_span(&self) -> Option<f64> {
        if self.sun_elevation_deg >= 90.0 {
            return None;
        }
        let th = self.sun_elevation_deg.to_radians().tan() * self.center_height();
        (th < self.rim_radius).then(|| (self.rim_radius * self.rim_radius - th * th).sqrt())
    }

    /// Root separation below which the silhouette root is extrapolated
    /// instead of solved for.
    fn coalescence_gap(&self) -> f64 {
        (10.0 * self.edge_length).min(0.02 * self.rim_radius)
    }
}

/// Solves for the silhouette x-coordinate at `y` by bisection, without
/// near-rim extrapolation.
fn silhouette_root(spec: &CapCraterSpec, y: f64) -> Option<f64> {
    let r = spec.sphere_radius();
    let rim = (spec.rim_radius * spec.rim_radius - y * y).max(0.0).sqrt();
    // argmax of the concave residual
    let peak = spec.sun_elevation_deg.to_radians().sin() * (r * r - y * y).sqrt();
    if !(peak < rim) || spec.silhouette_residual(peak, y) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (-rim, peak);
    let tol = 1e-13 * spec.rim_radius;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if spec.silhouette_residual(mid, y) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// x-coordinate of the silhouette point at height `y`.
///
/// Away from the rim the silhouette root is found by bisection. Where the
/// silhouette root and the rim root come within the coalescence gap of each
/// other, the value is extrapolated linearly from the last four well
/// separated samples.
pub fn silhouette_x(y: f64, spec: &CapCraterSpec) -> Result<f64, MeshError> {
    let span = spec
        .silhouette_span()
        .ok_or(MeshError::OutsideSilhouette { y })?;
    let ay = y.abs();
    if ay > span {
        return Err(MeshError::OutsideSilhouette { y });
    }
    let gap = spec.coalescence_gap();
    let rim_x = |y: f64| (spec.rim_radius * spec.rim_radius - y * y).max(0.0).sqrt();
    let separated = |y: f64| silhouette_root(spec, y).filter(|&x| rim_x(y) - x >= gap);
    if let Some(x) = separated(ay) {
        return Ok(x);
    }
    if separated(0.0).is_none() {
        // The whole silhouette hugs the rim; bisection is all we have.
        return silhouette_root(spec, ay).ok_or(MeshError::OutsideSilhouette { y });
    }
    // Largest |y| with well separated roots.
    let (mut lo, mut hi) = (0.0, ay);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if separated(mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let step = (0.5 * spec.edge_length).min(lo / 8.0).max(f64::EPSILON);
    let samples: Vec<(f64, f64)> = (0..4)
        .map(|k| {
            let ys = (lo - k as f64 * step).max(0.0);
            (ys, silhouette_root(spec, ys).expect("inside separated zone"))
        })
        .collect();
    let (slope, intercept) = fit_line(&samples);
    Ok((slope * ay + intercept).min(rim_x(ay)))
}

fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Discretized shadow line from `(x, -y_p)` to `(x, +y_p)`.
#[derive(Debug, Clone)]
pub struct Silhouette {
    pub span: f64,
    /// Polyline vertices (x, y); first and last lie on the rim.
    pub points: Vec<[f64; 2]>,
}

impl Silhouette {
    /// Samples the silhouette with segments of length about `spacing`.
    pub fn discretize(spec: &CapCraterSpec, spacing: f64) -> Option<Self> {
        let span = spec.silhouette_span()?;
        let end_x = spec.sun_elevation_deg.to_radians().tan() * spec.center_height();
        let dense_n = 2000;
        let dense: Vec<[f64; 2]> = (0..=dense_n)
            .map(|k| {
                let y = -span + 2.0 * span * k as f64 / dense_n as f64;
                if k == 0 || k == dense_n {
                    [end_x, y]
                } else {
                    [silhouette_x(y, spec).unwrap_or(end_x), y]
                }
            })
            .collect();
        let mut arc = vec![0.0];
        for w in dense.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            arc.push(arc.last().unwrap() + d);
        }
        let total = *arc.last().unwrap();
        let segments = (total / spacing).ceil().max(2.0) as usize;
        let mut points = vec![dense[0]];
        let mut k = 0;
        for s in 1..segments {
            let target = total * s as f64 / segments as f64;
            while arc[k + 1] < target {
                k += 1;
            }
            let f = (target - arc[k]) / (arc[k + 1] - arc[k]).max(f64::MIN_POSITIVE);
            let y = dense[k][1] + f * (dense[k + 1][1] - dense[k][1]);
            let x = silhouette_x(y, spec).unwrap_or(end_x);
            // Keep interior vertices clear of the rim to avoid slivers.
            let rho = (x * x + y * y).sqrt();
            if spec.rim_radius - rho > 0.3 * spacing {
                points.push([x, y]);
            }
        }
        points.push(*dense.last().unwrap());
        Some(Self { span, points })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Ground,
    /// Crater interior when the shadow line is not contoured.
    Crater,
    CraterLit,
    CraterShadow,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::Ground => "ground",
            Region::Crater => "crater",
            Region::CraterLit => "crater-lit",
            Region::CraterShadow => "crater-shadow",
        }
    }

    pub fn is_crater(&self) -> bool {
        !matches!(self, Region::Ground)
    }
}

/// A generated crater mesh with per-face region labels.
#[derive(Debug, Clone)]
pub struct CraterMesh {
    pub mesh: TriangleMesh,
    pub labels: Vec<Region>,
    pub spec: CapCraterSpec,
    pub silhouette: Option<Silhouette>,
    /// Mesh vertex ids of the contoured silhouette polyline (empty when the
    /// shadow line is not contoured).
    pub silhouette_vertices: Vec<usize>,
}

impl CraterMesh {
    pub fn touches_silhouette(&self, face: usize) -> bool {
        self.mesh.faces()[face]
            .iter()
            .any(|v| self.silhouette_vertices.binary_search(v).is_ok())
    }

    pub fn faces_in(&self, region: Region) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == region)
            .collect()
    }
}

pub fn make_cap_crater_mesh(spec: &CapCraterSpec) -> Result<CraterMesh, MeshError> {
    spec.validate()?;
    let h = spec.edge_length;
    let rc = spec.rim_radius;
    let g = spec.ground_extent;
    let max_area = 2.0 / 3.0 * h * h;
    // Seed lattice sized so that lifted faces on the steepest wall still
    // meet the area bound.
    let spacing = planar::spacing_for_area(0.9 * max_area * spec.beta().cos());

    let silhouette = if spec.contour_shadow {
        Silhouette::discretize(spec, spacing)
    } else {
        None
    };

    let mut domain = PlanarDomain::default();

    // Outer square, counterclockwise.
    let corners = [[-g, -g], [g, -g], [g, g], [-g, g]];
    let mut square = Vec::new();
    for k in 0..4 {
        for p in planar::subdivide(corners[k], corners[(k + 1) % 4], spacing) {
            square.push(Vec3::new(p[0], p[1], 0.0));
        }
    }
    domain.add_polyline(&square, true);

    // Rim, counterclockwise, split at the silhouette end points if present.
    let rim_point = |theta: f64| Vec3::new(rc * theta.cos(), rc * theta.sin(), 0.0);
    let arc = |from: f64, to: f64| -> Vec<f64> {
        let n = ((to - from) * rc / spacing).ceil().max(1.0) as usize;
        (0..n)
            .map(|k| from + (to - from) * k as f64 / n as f64)
            .collect()
    };
    let (rim_angles, end_angle) = match &silhouette {
        Some(s) => {
            let end = s.points.last().unwrap();
            let theta = end[1].atan2(end[0]);
            let mut a = arc(-theta, theta);
            a.extend(arc(theta, 2.0 * PI - theta));
            (a, Some(theta))
        }
        None => (arc(0.0, 2.0 * PI), None),
    };
    let rim_points: Vec<Vec3> = rim_angles.iter().map(|&t| rim_point(t)).collect();
    let rim_ids = domain.add_polyline(&rim_points, true);
    let rim_polygon: Vec<[f64; 2]> = rim_points.iter().map(|p| [p.x, p.y]).collect();

    // Silhouette: its end points are rim vertices.
    let mut silhouette_ids = Vec::new();
    let mut shadow_polygon = Vec::new();
    if let (Some(s), Some(theta)) = (&silhouette, end_angle) {
        let n_shadow_arc = rim_angles.iter().filter(|&&a| a < theta).count();
        let first = rim_ids[0];
        let last = rim_ids[n_shadow_arc];
        let mut ids = vec![first];
        for p in &s.points[1..s.points.len() - 1] {
            ids.push(domain.add_fixed(Vec3::new(p[0], p[1], spec.surface_z(p[0], p[1]))));
        }
        ids.push(last);
        domain.connect(&ids, false);
        silhouette_ids = ids;
        // Silhouette from -y_p to +y_p, then the rim arc back to -y_p.
        shadow_polygon = s.points.clone();
        for k in (1..n_shadow_arc).rev() {
            shadow_polygon.push(rim_polygon[k]);
        }
    }

    let sil_segments: Vec<([f64; 2], [f64; 2])> = silhouette
        .as_ref()
        .map(|s| s.points.windows(2).map(|w| (w[0], w[1])).collect())
        .unwrap_or_default();
    let clearance = 0.5 * spacing;
    domain.seeds = planar::lattice(-g, g, -g, g, spacing, |x, y| {
        if g - x.abs() < clearance || g - y.abs() < clearance {
            return false;
        }
        if ((x * x + y * y).sqrt() - rc).abs() < clearance {
            return false;
        }
        sil_segments
            .iter()
            .all(|(a, b)| planar::segment_distance([x, y], *a, *b) >= clearance)
    });

    let lift = |x: f64, y: f64| {
        if planar::point_in_polygon([x, y], &rim_polygon) {
            spec.surface_z(x, y)
        } else {
            0.0
        }
    };
    let planar_mesh = planar::triangulate(&domain, lift, |_, _| max_area)?;
    let mesh = TriangleMesh::new(planar_mesh.vertices, planar_mesh.faces)?.orient_upward();

    let labels = mesh
        .faces()
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|v| mesh.vertices()[v]);
            let p = [(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0];
            if !planar::point_in_polygon(p, &rim_polygon) {
                Region::Ground
            } else if !spec.contour_shadow {
                Region::Crater
            } else if !shadow_polygon.is_empty() && planar::point_in_polygon(p, &shadow_polygon) {
                Region::CraterShadow
            } else {
                Region::CraterLit
            }
        })
        .collect();

    silhouette_ids.sort_unstable();
    Ok(CraterMesh {
        mesh,
        labels,
        spec: *spec,
        silhouette,
        silhouette_vertices: silhouette_ids,
    })
}
