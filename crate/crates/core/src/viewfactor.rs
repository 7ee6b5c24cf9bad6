//! Centroid-rule view factors and CSR assembly of view-factor blocks.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::linalg::SparseCsr;
use crate::mesh::TriangleMesh;
use crate::raytrace::{self, Bvh};

/// Unoccluded kernel `[n_i . d][n_j . (-d)] / (pi |d|^4) A_j` with
/// `d = x_j - x_i`.
pub fn kernel(mesh: &TriangleMesh, i: usize, j: usize) -> f64 {
    let d = mesh.centroid(j) - mesh.centroid(i);
    let r2 = d.norm_squared();
    let ci = mesh.normal(i).dot(&d);
    let cj = -mesh.normal(j).dot(&d);
    ci * cj / (PI * r2 * r2) * mesh.area(j)
}

/// View factor `F_ij` given the visibility of the pair (`i != j`).
pub fn vf_entry(mesh: &TriangleMesh, i: usize, j: usize, visible: bool) -> f64 {
    if visible {
        kernel(mesh, i, j).max(0.0)
    } else {
        0.0
    }
}

/// Assembles the block of `F` with rows `rows` and columns `cols` (global
/// face ids), in the given local orders. Rows are processed in parallel.
/// Pairs failing the culling test cost no ray.
pub fn assemble_block(mesh: &TriangleMesh, bvh: &Bvh, rows: &[usize], cols: &[usize]) -> SparseCsr {
    let entries: Vec<Vec<(u32, f32)>> = rows
        .par_iter()
        .map(|&i| {
            let mut row = Vec::new();
            for (c, &j) in cols.iter().enumerate() {
                if i == j || !raytrace::facing(mesh, i, j) {
                    continue;
                }
                if bvh.occluded(mesh.centroid(i), mesh.centroid(j), [i, j]) {
                    continue;
                }
                let v = kernel(mesh, i, j) as f32;
                if v > 0.0 {
                    row.push((c as u32, v));
                }
            }
            row
        })
        .collect();
    SparseCsr::from_rows(cols.len(), entries)
}

/// The full `N x N` view-factor matrix.
pub fn assemble_full(mesh: &TriangleMesh, bvh: &Bvh) -> SparseCsr {
    let all: Vec<usize> = (0..mesh.num_faces()).collect();
    assemble_block(mesh, bvh, &all, &all)
}
