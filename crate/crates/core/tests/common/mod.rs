//! Brute-force oracles shared by the integration tests. Nothing here uses
//! the library's geometry helpers beyond reading vertices and faces.
#![allow(dead_code)]

use std::f64::consts::PI;

use hvf::mesh::{make_cap_crater_mesh, CapCraterSpec, CraterMesh};
use hvf::{TriangleMesh, Vec3};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tri(mesh: &TriangleMesh, i: usize) -> [Vec3; 3] {
    let f = mesh.faces()[i];
    let v = mesh.vertices();
    [v[f[0]], v[f[1]], v[f[2]]]
}

pub fn centroid(t: &[Vec3; 3]) -> Vec3 {
    (t[0] + t[1] + t[2]) / 3.0
}

/// Unit normal and area.
pub fn normal_area(t: &[Vec3; 3]) -> (Vec3, f64) {
    let c = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let len = c.norm();
    (c / len, 0.5 * len)
}

/// Moller-Trumbore ray/triangle test with inclusive edges; returns the ray
/// parameter.
pub fn moller_trumbore(org: Vec3, dir: Vec3, t: &[Vec3; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = org - t[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Mutual visibility by culling and testing every other triangle against
/// the centroid segment.
pub fn brute_visible(mesh: &TriangleMesh, i: usize, j: usize) -> bool {
    let (ti, tj) = (tri(mesh, i), tri(mesh, j));
    let (ci, cj) = (centroid(&ti), centroid(&tj));
    let d = cj - ci;
    if normal_area(&ti).0.dot(&d) <= 0.0 || normal_area(&tj).0.dot(&d) >= 0.0 {
        return false;
    }
    !(0..mesh.num_faces()).any(|k| {
        k != i
            && k != j
            && moller_trumbore(ci, d, &tri(mesh, k)).is_some_and(|t| t > 1e-5 && t < 1.0 - 1e-5)
    })
}

/// Dense row-major view-factor matrix from the brute-force visibility.
pub fn brute_view_factors(mesh: &TriangleMesh) -> Vec<f64> {
    let n = mesh.num_faces();
    let geo: Vec<(Vec3, Vec3, f64)> = (0..n)
        .map(|i| {
            let t = tri(mesh, i);
            let (nrm, a) = normal_area(&t);
            (centroid(&t), nrm, a)
        })
        .collect();
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !brute_visible(mesh, i, j) {
                continue;
            }
            let d = geo[j].0 - geo[i].0;
            let r2 = d.norm_squared();
            f[i * n + j] = geo[i].1.dot(&d) * -geo[j].1.dot(&d) / (PI * r2 * r2) * geo[j].2;
        }
    }
    f
}

/// The crater test problem at edge length `h`.
pub fn crater(h: f64) -> CraterMesh {
    let rc = 0.8;
    make_cap_crater_mesh(&CapCraterSpec {
        beta_deg: 40.0,
        rim_radius: rc,
        edge_length: h,
        sun_elevation_deg: 15.0,
        contour_shadow: true,
        ground_extent: (1.25 * rc).max(rc + h),
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform(rng)).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}
