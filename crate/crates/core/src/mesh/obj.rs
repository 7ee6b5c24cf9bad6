//! ASCII OBJ subset: `v x y z` and triangular `f a b c` records.
//!
//! Face records may carry `/vt/vn` suffixes, which are ignored. Other record
//! types (`vn`, `vt`, `o`, `g`, `s`, `usemtl`, ...) are skipped.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{MeshError, TriangleMesh};
use crate::Vec3;

pub fn read_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    parse_obj(&fs::read_to_string(path)?)
}

pub(crate) fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Malformed {
                        line,
                        msg: e.to_string(),
                    })?;
                if coords.len() != 3 {
                    return Err(MeshError::Malformed {
                        line,
                        msg: "vertex needs three coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = tokens.collect();
                if idx.len() != 3 {
                    return Err(MeshError::NonTriangularFace { line });
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(&idx) {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| MeshError::Malformed {
                        line,
                        msg: format!("bad vertex index {tok:?}"),
                    })?;
                    // Negative indices are relative to the current vertex count.
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 {
                        return Err(MeshError::Malformed {
                            line,
                            msg: format!("bad vertex index {tok:?}"),
                        });
                    }
                    *slot = resolved as usize;
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(MeshError::NoFaces);
    }
    TriangleMesh::new(vertices, faces)
}

/// Writes vertices with 9 significant digits and 1-based face indices.
pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for v in mesh.vertices() {
        writeln!(out, "v {:.8e} {:.8e} {:.8e}", v.x, v.y, v.z)?;
    }
    for t in mesh.faces() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}
