//! Area-bounded triangulation of a planar domain lifted to a height field.
//!
//! The domain is a convex outer boundary plus constraint polylines. Interior
//! seed points are inserted into a constrained Delaunay triangulation, then
//! faces whose lifted (3D) area exceeds the local bound are split by
//! inserting their centroid until every face satisfies the bound.

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::MeshError;
use crate::Vec3;

const MAX_REFINEMENT_ROUNDS: usize = 200;

#[derive(Debug, Default)]
pub(crate) struct PlanarDomain {
    /// Fixed vertices with their prescribed 3D positions.
    pub fixed: Vec<Vec3>,
    /// Constraint segments between fixed vertices.
    pub segments: Vec<(usize, usize)>,
    /// Interior seed points in the plane.
    pub seeds: Vec<[f64; 2]>,
}

impl PlanarDomain {
    pub fn add_fixed(&mut self, p: Vec3) -> usize {
        self.fixed.push(p);
        self.fixed.len() - 1
    }

    /// Adds a polyline of fixed points joined by constraint segments and
    /// returns the vertex ids.
    pub fn add_polyline(&mut self, points: &[Vec3], closed: bool) -> Vec<usize> {
        let ids: Vec<usize> = points.iter().map(|p| self.add_fixed(*p)).collect();
        self.connect(&ids, closed);
        ids
    }

    pub fn connect(&mut self, ids: &[usize], closed: bool) {
        for w in ids.windows(2) {
            self.segments.push((w[0], w[1]));
        }
        if closed && ids.len() > 2 {
            self.segments.push((ids[ids.len() - 1], ids[0]));
        }
    }
}

pub(crate) struct PlanarMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

/// Triangulates `domain`. Fixed vertices keep their ids. Non-fixed vertices get height `lift(x, y)`; faces
/// are refined until their 3D area is at most `max_area(cx, cy)` evaluated
/// at the planar centroid.
pub(crate) fn triangulate<L, A>(
    domain: &PlanarDomain,
    lift: L,
    max_area: A,
) -> Result<PlanarMesh, MeshError>
where
    L: Fn(f64, f64) -> f64,
    A: Fn(f64, f64) -> f64,
{
    let err = |e: spade::InsertionError| MeshError::Triangulation(format!("{e:?}"));
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut heights: Vec<f64> = Vec::new();
    let set_height = |heights: &mut Vec<f64>, idx: usize, z: f64| {
        if idx >= heights.len() {
            heights.resize(idx + 1, f64::NAN);
        }
        if heights[idx].is_nan() {
            heights[idx] = z;
        }
    };

    let mut handles = Vec::with_capacity(domain.fixed.len());
    for p in &domain.fixed {
        let h = cdt.insert(Point2::new(p.x, p.y)).map_err(err)?;
        set_height(&mut heights, h.index(), p.z);
        handles.push(h);
    }
    if handles.iter().enumerate().any(|(i, h)| h.index() != i) {
        return Err(MeshError::Triangulation("duplicate fixed vertex".into()));
    }
    for &(a, b) in &domain.segments {
        if a == b {
            continue;
        }
        if !cdt.can_add_constraint(handles[a], handles[b]) {
            return Err(MeshError::Triangulation(format!(
                "constraint {a}-{b} intersects another constraint"
            )));
        }
        cdt.add_constraint(handles[a], handles[b]);
    }
    for s in &domain.seeds {
        let h = cdt.insert(Point2::new(s[0], s[1])).map_err(err)?;
        set_height(&mut heights, h.index(), lift(s[0], s[1]));
    }

    for round in 0.. {
        if round == MAX_REFINEMENT_ROUNDS {
            return Err(MeshError::Triangulation(
                "area refinement did not terminate".into(),
            ));
        }
        let mut splits = Vec::new();
        for face in cdt.inner_faces() {
            let vs = face.vertices();
            let p = vs.map(|v| {
                let q = v.position();
                Vec3::new(q.x, q.y, heights[v.fix().index()])
            });
            let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            let cx = (p[0].x + p[1].x + p[2].x) / 3.0;
            let cy = (p[0].y + p[1].y + p[2].y) / 3.0;
            if area > max_area(cx, cy) {
                splits.push([cx, cy]);
            }
        }
        if splits.is_empty() {
            break;
        }
        for s in splits {
            let h = cdt.insert(Point2::new(s[0], s[1])).map_err(err)?;
            set_height(&mut heights, h.index(), lift(s[0], s[1]));
        }
    }

    let vertices: Vec<Vec3> = cdt
        .vertices()
        .map(|v| {
            let q = v.position();
            Vec3::new(q.x, q.y, heights[v.fix().index()])
        })
        .collect();
    let faces = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    Ok(PlanarMesh { vertices, faces })
}

/// Triangular lattice of points with spacing `s` covering the rectangle
/// `[x0, x1] x [y0, y1]`, keeping those accepted by `keep`.
pub(crate) fn lattice(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    s: f64,
    mut keep: impl FnMut(f64, f64) -> bool,
) -> Vec<[f64; 2]> {
    let dy = s * 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    let rows = ((y1 - y0) / dy).floor() as usize;
    for r in 0..=rows {
        let y = y0 + r as f64 * dy;
        let offset = if r % 2 == 1 { 0.5 * s } else { 0.0 };
        let mut x = x0 + offset;
        while x <= x1 {
            if keep(x, y) {
                pts.push([x, y]);
            }
            x += s;
        }
    }
    pts
}

/// Lattice spacing whose equilateral triangles have the given area.
pub(crate) fn spacing_for_area(area: f64) -> f64 {
    (4.0 * area / 3f64.sqrt()).sqrt()
}

/// Points along the segment `a`-`b` (excluding `a`, including `b`) with
/// spacing at most `s`.
pub(crate) fn subdivide(a: [f64; 2], b: [f64; 2], s: f64) -> Vec<[f64; 2]> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let n = (len / s).ceil().max(1.0) as usize;
    (1..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Distance from `p` to the segment `a`-`b`.
pub(crate) fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Even-odd point-in-polygon test.
pub(crate) fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
