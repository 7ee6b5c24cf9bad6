//! Plain-text elevation grids and their graded triangulation.
//!
//! File layout: a header line `nx ny dx dy x0 y0` followed by `nx * ny`
//! whitespace-separated elevations in row-major order (row index along y).
//! Sample (i, j) sits at `(x0 + i dx, y0 + j dy)`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::planar::{self, PlanarDomain};
use super::{MeshError, TriangleMesh};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Dem {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
    /// Row-major elevations, `z[j * nx + i]`.
    pub z: Vec<f64>,
}

pub fn read_dem(path: impl AsRef<Path>) -> Result<Dem, MeshError> {
    Dem::parse(&fs::read_to_string(path)?)
}

impl Dem {
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let malformed = |line: usize, msg: &str| MeshError::Malformed {
            line,
            msg: msg.to_string(),
        };
        let (hline, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(malformed(hline + 1, "header must be `nx ny dx dy x0 y0`"));
        }
        let nx: usize = fields[0]
            .parse()
            .map_err(|_| malformed(hline + 1, "bad nx"))?;
        let ny: usize = fields[1]
            .parse()
            .map_err(|_| malformed(hline + 1, "bad ny"))?;
        let mut g = [0.0; 4];
        for (k, slot) in g.iter_mut().enumerate() {
            *slot = fields[2 + k]
                .parse()
                .map_err(|_| malformed(hline + 1, "bad grid spacing or origin"))?;
        }
        if nx < 2 || ny < 2 || !(g[0] > 0.0) || !(g[1] > 0.0) {
            return Err(malformed(hline + 1, "need nx, ny >= 2 and positive spacing"));
        }
        let mut z = Vec::with_capacity(nx * ny);
        for (n, l) in lines {
            for tok in l.split_whitespace() {
                z.push(
                    tok.parse::<f64>()
                        .map_err(|_| malformed(n + 1, "bad elevation"))?,
                );
            }
        }
        if z.len() != nx * ny {
            return Err(MeshError::Malformed {
                line: hline + 1,
                msg: format!("expected {} elevations, found {}", nx * ny, z.len()),
            });
        }
        Ok(Self {
            nx,
            ny,
            dx: g[0],
            dy: g[1],
            x0: g[2],
            y0: g[3],
            z,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(
            out,
            "{} {} {} {} {} {}",
            self.nx, self.ny, self.dx, self.dy, self.x0, self.y0
        )?;
        for row in self.z.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Samples `height(x, y)` on an `nx x ny` grid.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        x0: f64,
        y0: f64,
        height: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let z = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, j)| height(x0 + i as f64 * dx, y0 + j as f64 * dy))
            .collect();
        Self {
            nx,
            ny,
            dx,
            dy,
            x0,
            y0,
            z,
        }
    }

    pub fn x1(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }

    pub fn y1(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.dy
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1()), 0.5 * (self.y0 + self.y1())]
    }

    /// Bilinear interpolation, clamped to the grid extent.
    pub fn elevation(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.x0) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y - self.y0) / self.dy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (u, v) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| self.z[j * self.nx + i];
        (1.0 - u) * (1.0 - v) * at(i, j)
            + u * (1.0 - v) * at(i + 1, j)
            + (1.0 - u) * v * at(i, j + 1)
            + u * v * at(i + 1, j + 1)
    }
}

/// Triangulates the grid extent with face areas at most `max_area_inner`
/// inside the circle of radius `roi_radius` about the grid center and at
/// most `max_area_outer` elsewhere. Heights come from bilinear interpolation.
pub fn dem_to_mesh(
    dem: &Dem,
    max_area_inner: f64,
    max_area_outer: f64,
    roi_radius: f64,
) -> Result<TriangleMesh, MeshError> {
    if !(max_area_inner > 0.0 && max_area_outer > 0.0) || roi_radius < 0.0 {
        return Err(MeshError::InvalidSpec(
            "area bounds must be positive and the ROI radius nonnegative".into(),
        ));
    }
    let (x0, x1, y0, y1) = (dem.x0, dem.x1(), dem.y0, dem.y1());
    let c = dem.center();
    let in_roi = |x: f64, y: f64| (x - c[0]).hypot(y - c[1]) < roi_radius;
    let bound = |x: f64, y: f64| {
        if in_roi(x, y) {
            max_area_inner
        } else {
            max_area_outer
        }
    };
    let s_out = planar::spacing_for_area(0.9 * max_area_outer);
    let s_in = planar::spacing_for_area(0.9 * max_area_inner);
    let s_edge = s_out.min(if roi_radius > 0.0 { s_in } else { s_out });

    let mut domain = PlanarDomain::default();
    let corners = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let mut boundary = Vec::new();
    for k in 0..4 {
        for p in planar::subdivide(corners[k], corners[(k + 1) % 4], s_edge) {
            boundary.push(Vec3::new(p[0], p[1], dem.elevation(p[0], p[1])));
        }
    }
    domain.add_polyline(&boundary, true);

    let clear = |x: f64, y: f64, s: f64| {
        x - x0 >= 0.5 * s && x1 - x >= 0.5 * s && y - y0 >= 0.5 * s && y1 - y >= 0.5 * s
    };
    let mut seeds = planar::lattice(x0, x1, y0, y1, s_out, |x, y| {
        clear(x, y, s_out) && (x - c[0]).hypot(y - c[1]) >= roi_radius + 0.5 * s_out
    });
    if roi_radius > 0.0 {
        seeds.extend(planar::lattice(
            c[0] - roi_radius,
            c[0] + roi_radius,
            c[1] - roi_radius,
            c[1] + roi_radius,
            s_in,
            |x, y| clear(x, y, s_in) && in_roi(x, y),
        ));
    }
    domain.seeds = seeds;

    let m = planar::triangulate(&domain, |x, y| dem.elevation(x, y), bound)?;
    Ok(TriangleMesh::new(m.vertices, m.faces)?.orient_upward())
}
