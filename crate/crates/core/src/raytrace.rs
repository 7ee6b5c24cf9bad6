//! Bounding volume hierarchy over mesh triangles and the visibility queries
//! built on it.
//!
//! Intersections use the watertight ray/triangle test of Woop, Benthin and
//! Wald in double precision, so rays through shared edges or vertices cannot
//! slip between adjacent triangles.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::mesh::TriangleMesh;
use crate::Vec3;

/// Relative parametric margin excluding the segment end points.
pub const T_EPS: f64 = 1e-5;

const MAX_LEAF: usize = 4;
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct BvhNode {
    pub lo: Vec3,
    pub hi: Vec3,
    /// Leaf: first slot into the triangle order. Inner: index of the right
    /// child (the left child immediately follows its parent).
    pub first_or_right: u32,
    /// Number of triangles; zero for inner nodes.
    pub count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    /// Triangle ids in leaf order.
    order: Vec<u32>,
    /// Triangle vertices in leaf order.
    tris: Vec<[Vec3; 3]>,
    depth: usize,
    scale: f64,
    rays: AtomicU64,
}

struct Prim {
    id: u32,
    lo: Vec3,
    hi: Vec3,
    center: Vec3,
}

impl Bvh {
    /// Median split on the longest axis of each node's bounding box.
    pub fn build(mesh: &TriangleMesh) -> Self {
        let mut prims: Vec<Prim> = (0..mesh.num_faces())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                let lo = a.inf(&b).inf(&c);
                let hi = a.sup(&b).sup(&c);
                Prim {
                    id: f as u32,
                    lo,
                    hi,
                    center: (lo + hi) / 2.0,
                }
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * prims.len().max(1)),
            order: Vec::with_capacity(prims.len()),
            tris: Vec::with_capacity(prims.len()),
            depth: 0,
            scale: 0.0,
            rays: AtomicU64::new(0),
        };
        if !prims.is_empty() {
            bvh.build_node(mesh, &mut prims, 0);
            let root = bvh.nodes[0];
            bvh.scale = (root.hi - root.lo).norm();
        }
        bvh
    }

    fn build_node(&mut self, mesh: &TriangleMesh, prims: &mut [Prim], depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in prims.iter() {
            lo = lo.inf(&p.lo);
            hi = hi.sup(&p.hi);
        }
        // Padding keeps the slab test conservative for grazing rays.
        let pad = 1e-9 * (hi - lo).amax() + 1e-300;
        lo.add_scalar_mut(-pad);
        hi.add_scalar_mut(pad);
        let index = self.nodes.len();
        self.nodes.push(BvhNode {
            lo,
            hi,
            first_or_right: 0,
            count: 0,
        });
        if prims.len() <= MAX_LEAF || depth >= MAX_DEPTH {
            self.nodes[index].first_or_right = self.order.len() as u32;
            self.nodes[index].count = prims.len() as u32;
            for p in prims.iter() {
                self.order.push(p.id);
                self.tris.push(mesh.triangle(p.id as usize));
            }
            return index;
        }
        let axis = (hi - lo).imax();
        let mid = prims.len() / 2;
        prims.select_nth_unstable_by(mid, |a, b| a.center[axis].total_cmp(&b.center[axis]));
        let (left, right) = prims.split_at_mut(mid);
        self.build_node(mesh, left, depth + 1);
        let r = self.build_node(mesh, right, depth + 1);
        self.nodes[index].first_or_right = r as u32;
        index
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Triangle ids stored in a leaf node.
    pub fn leaf_triangles(&self, node: usize) -> &[u32] {
        let n = &self.nodes[node];
        let start = n.first_or_right as usize;
        &self.order[start..start + n.count as usize]
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of occlusion rays cast since construction or the last reset.
    pub fn ray_count(&self) -> u64 {
        self.rays.load(Ordering::Relaxed)
    }

    pub fn reset_ray_count(&self) {
        self.rays.store(0, Ordering::Relaxed);
    }

    /// True iff a triangle other than those in `skip` intersects the open
    /// segment from `origin` to `target`, shrunk by `T_EPS` at both ends.
    pub fn occluded(&self, origin: Vec3, target: Vec3, skip: [usize; 2]) -> bool {
        self.rays.fetch_add(1, Ordering::Relaxed);
        self.any_hit(origin, target - origin, T_EPS, 1.0 - T_EPS, skip)
    }

    /// Any-hit query along `origin + t dir` for `t` strictly inside `(tmin, tmax)`.
    pub fn any_hit(&self, origin: Vec3, dir: Vec3, tmin: f64, tmax: f64, skip: [usize; 2]) -> bool {
        if self.nodes.is_empty() || !(tmax > tmin) {
            return false;
        }
        let ray = Ray::new(origin, dir);
        let mut stack = [0u32; 2 * MAX_DEPTH + 2];
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let index = stack[top] as usize;
            let node = &self.nodes[index];
            if !ray.hits_box(node.lo, node.hi, tmin, tmax) {
                continue;
            }
            if node.is_leaf() {
                let start = node.first_or_right as usize;
                for slot in start..start + node.count as usize {
                    let id = self.order[slot] as usize;
                    if id == skip[0] || id == skip[1] {
                        continue;
                    }
                    if let Some(t) = ray.intersect(&self.tris[slot]) {
                        if t > tmin && t < tmax {
                            return true;
                        }
                    }
                }
            } else {
                stack[top] = node.first_or_right;
                stack[top + 1] = (index + 1) as u32;
                top += 2;
            }
        }
        false
    }
}

struct Ray {
    org: Vec3,
    inv: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Ray {
    fn new(org: Vec3, dir: Vec3) -> Self {
        let kz = dir.iamax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        Self {
            org,
            inv: dir.map(|d| 1.0 / d),
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        }
    }

    fn hits_box(&self, lo: Vec3, hi: Vec3, tmin: f64, tmax: f64) -> bool {
        let (mut t0, mut t1) = (tmin, tmax);
        for a in 0..3 {
            let mut near = (lo[a] - self.org[a]) * self.inv[a];
            let mut far = (hi[a] - self.org[a]) * self.inv[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf (ray in a slab plane) keeps the current bounds.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        t0 <= t1
    }

    /// Ray parameter of the intersection with a triangle, if any.
    fn intersect(&self, tri: &[Vec3; 3]) -> Option<f64> {
        let a = tri[0] - self.org;
        let b = tri[1] - self.org;
        let c = tri[2] - self.org;
        let (ax, ay) = (a[self.kx] - self.sx * a[self.kz], a[self.ky] - self.sy * a[self.kz]);
        let (bx, by) = (b[self.kx] - self.sx * b[self.kz], b[self.ky] - self.sy * b[self.kz]);
        let (cx, cy) = (c[self.kx] - self.sx * c[self.kz], c[self.ky] - self.sy * c[self.kz]);
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t = u * (self.sz * a[self.kz]) + v * (self.sz * b[self.kz]) + w * (self.sz * c[self.kz]);
        Some(t / det)
    }
}

/// Both faces lie in front of each other: `n_i . (x_j - x_i) > 0` and
/// `n_j . (x_i - x_j) > 0`.
pub fn facing(mesh: &TriangleMesh, i: usize, j: usize) -> bool {
    let d = mesh.centroid(j) - mesh.centroid(i);
    mesh.normal(i).dot(&d) > 0.0 && mesh.normal(j).dot(&d) < 0.0
}

/// Mutual visibility of faces `i` and `j` (`i != j`): culling test first,
/// then one occlusion ray between the centroids.
pub fn visible(mesh: &TriangleMesh, bvh: &Bvh, i: usize, j: usize) -> bool {
    facing(mesh, i, j) && !bvh.occluded(mesh.centroid(i), mesh.centroid(j), [i, j])
}

/// Whether the sun in direction `sun_dir` (unit) is visible from the
/// centroid of face `i`.
pub fn sun_visible(mesh: &TriangleMesh, bvh: &Bvh, i: usize, sun_dir: &Vec3) -> bool {
    let n = mesh.normal(i);
    if n.dot(sun_dir) <= 0.0 {
        return false;
    }
    let offset = T_EPS * bvh.scale;
    let origin = mesh.centroid(i) + offset * n;
    !bvh.any_hit(origin, *sun_dir, 0.0, f64::INFINITY, [i, i])
}
