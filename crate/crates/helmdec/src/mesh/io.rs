//! Line-based text format for meshes and trace tags.
//!
//! ```text
//! helmdec-mesh 1
//! # comment lines are skipped
//! geometry unit_cube
//! h 0.25
//! counts 125 384
//! v 0 0 0 0
//! t 0 0 1 6 31 0
//! trace z0
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use super::catalog::{Geometry, GeometryId};
use super::{level_of, TetMesh};
use crate::error::{Error, Result};

/// Serialize a mesh and optional trace tags. Coordinates are dyadic
/// rationals and print exactly with the shortest round-trip formatting.
pub fn write_mesh(mesh: &TetMesh, trace: &[String]) -> String {
    let mut s = String::new();
    let geometry = mesh.geometry.map(|g| g.as_str()).unwrap_or("none");
    let _ = writeln!(s, "helmdec-mesh 1");
    let _ = writeln!(s, "geometry {geometry}");
    let _ = writeln!(s, "h {}", mesh.h);
    let _ = writeln!(s, "counts {} {}", mesh.n_vertices(), mesh.n_tets());
    for (i, x) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "v {i} {} {} {}", x[0], x[1], x[2]);
    }
    for (i, t) in mesh.tets.iter().enumerate() {
        let _ = writeln!(s, "t {i} {} {} {} {} {}", t[0], t[1], t[2], t[3], mesh.block_of_tet[i]);
    }
    for name in trace {
        let _ = writeln!(s, "trace {name}");
    }
    s
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse { line, msg: format!("expected {what}") })
}

/// Parse the text format back into a mesh (catalog geometries only) and the
/// list of trace tags.
pub fn read_mesh(text: &str) -> Result<(TetMesh, Vec<String>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
    if first.trim() != "helmdec-mesh 1" {
        return Err(Error::Parse { line: n, msg: "bad header".into() });
    }
    let mut geometry: Option<GeometryId> = None;
    let mut h = 0.0;
    let mut counts = (0usize, 0usize);
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let mut blocks = Vec::new();
    let mut trace = Vec::new();
    for (n, line) in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some(t) if t.starts_with('#') => continue,
            Some("geometry") => geometry = Some(parse::<String>(tok.next(), n, "geometry id")?.parse()?),
            Some("h") => h = parse(tok.next(), n, "h")?,
            Some("counts") => counts = (parse(tok.next(), n, "vertex count")?, parse(tok.next(), n, "tet count")?),
            Some("v") => {
                let id: usize = parse(tok.next(), n, "vertex id")?;
                if id != vertices.len() {
                    return Err(Error::Parse { line: n, msg: "vertex ids must be consecutive".into() });
                }
                vertices.push([
                    parse(tok.next(), n, "x")?,
                    parse(tok.next(), n, "y")?,
                    parse(tok.next(), n, "z")?,
                ]);
            }
            Some("t") => {
                let id: usize = parse(tok.next(), n, "tet id")?;
                if id != tets.len() {
                    return Err(Error::Parse { line: n, msg: "tet ids must be consecutive".into() });
                }
                let mut t = [0usize; 4];
                for v in &mut t {
                    *v = parse(tok.next(), n, "vertex index")?;
                    if *v >= vertices.len() {
                        return Err(Error::Parse { line: n, msg: "vertex index out of range".into() });
                    }
                }
                tets.push(t);
                blocks.push(parse(tok.next(), n, "block label")?);
            }
            Some("trace") => trace.push(parse::<String>(tok.next(), n, "entity name")?),
            Some(other) => return Err(Error::Parse { line: n, msg: format!("unknown record `{other}`") }),
        }
    }
    if counts != (vertices.len(), tets.len()) {
        return Err(Error::Parse { line: 0, msg: "counts do not match records".into() });
    }
    let geometry = geometry.ok_or(Error::Parse { line: 0, msg: "missing geometry".into() })?;
    let level = level_of(h).ok_or(Error::InvalidMeshSize(h))?;
    let complex = Arc::new(Geometry::get(geometry).complex);
    Ok((TetMesh::from_parts(complex, Some(geometry), h, level, vertices, tets, blocks), trace))
}
