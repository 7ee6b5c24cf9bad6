//! Triangle meshes: representation, generators and file formats.

mod crater;
mod dem;
mod obj;
mod planar;
pub mod shapes;

pub use crater::{
    make_cap_crater_mesh, silhouette_x, CapCraterSpec, CraterMesh, Region, Silhouette,
};
pub use dem::{dem_to_mesh, read_dem, Dem};
pub use obj::{read_obj, write_obj};

use std::collections::HashMap;

use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },
    #[error("face {face} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        count: usize,
    },
    #[error("no faces")]
    NoFaces,
    #[error("line {line}: non-triangular face")]
    NonTriangularFace { line: usize },
    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("invalid crater spec: {0}")]
    InvalidSpec(String),
    #[error("y = {y} is outside silhouette span")]
    OutsideSilhouette { y: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A triangle mesh with per-face centroid, unit normal and area.
///
/// Immutable once built; all derived data is computed by [`TriangleMesh::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    centroids: Vec<Vec3>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
}

impl TriangleMesh {
    /// Builds a mesh and derives face data. Normals follow the right-hand
    /// rule of the given winding.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::NoFaces);
        }
        let count = vertices.len();
        let mut centroids = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (face, tri) in faces.iter().enumerate() {
            if let Some(&vertex) = tri.iter().find(|&&v| v >= count) {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    vertex,
                    count,
                });
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            if !(norm > 0.0) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace { face });
            }
            centroids.push((a + b + c) / 3.0);
            normals.push(cross / norm);
            areas.push(0.5 * norm);
        }
        Ok(Self {
            vertices,
            faces,
            centroids,
            normals,
            areas,
        })
    }

    /// Flips faces so that every normal has a nonnegative z-component.
    /// Used for graph-surface meshes (craters, DEMs).
    pub fn orient_upward(mut self) -> Self {
        for f in 0..self.faces.len() {
            if self.normals[f].z < 0.0 {
                self.flip_face(f);
            }
        }
        self
    }

    /// Orients a closed surface outward: if the signed volume is negative,
    /// every face is flipped.
    pub fn orient_outward(mut self) -> Self {
        if self.signed_volume() < 0.0 {
            for f in 0..self.faces.len() {
                self.flip_face(f);
            }
        }
        self
    }

    fn flip_face(&mut self, f: usize) {
        self.faces[f].swap(1, 2);
        self.normals[f] = -self.normals[f];
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.vertices[v]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn centroid(&self, i: usize) -> Vec3 {
        self.centroids[i]
    }

    pub fn normal(&self, i: usize) -> Vec3 {
        self.normals[i]
    }

    pub fn area(&self, i: usize) -> f64 {
        self.areas[i]
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        self.faces[i].map(|v| self.vertices[v])
    }

    /// Axis-aligned bounds of all vertices as (min, max).
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Number of faces sharing each undirected edge.
    pub fn edge_valence(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::with_capacity(self.faces.len() * 2);
        for t in &self.faces {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_right_triangle() {
        let m = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.area(0), 0.5);
        assert_eq!(m.normal(0), Vec3::new(0.0, 0.0, 1.0));
        let c = m.centroid(0);
        assert!((c - Vec3::new(1.0 / 3.0, 1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn equilateral_area() {
        let m = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(1.0, 3f64.sqrt(), 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((m.area(0) - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn repeated_vertex_is_degenerate() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let err = TriangleMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { face: 1 }));
        // Coincident positions under distinct indices too.
        let mut w = v;
        w.push(Vec3::x());
        let err = TriangleMesh::new(w, vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateFace { face: 0 }));
    }

    #[test]
    fn out_of_range_index() {
        let err = TriangleMesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 7]]).unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { vertex: 7, .. }));
    }

    #[test]
    fn orientation_rules() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let m = TriangleMesh::new(v, vec![[0, 2, 1]]).unwrap();
        assert!(m.normal(0).z < 0.0);
        let m = m.orient_upward();
        assert_eq!(m.normal(0), Vec3::z());
        assert_eq!(m.faces()[0], [0, 1, 2]);

        let s = shapes::icosphere(1.0, 1);
        let inward = TriangleMesh::new(
            s.vertices().to_vec(),
            s.faces().iter().map(|t| [t[0], t[2], t[1]]).collect(),
        )
        .unwrap();
        assert!(inward.signed_volume() < 0.0);
        let out = inward.orient_outward();
        assert!(out.signed_volume() > 0.0);
        for i in 0..out.num_faces() {
            assert!(out.normal(i).dot(&out.centroid(i)) > 0.0);
        }
    }
}
