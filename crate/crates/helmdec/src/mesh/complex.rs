//! Polyhedral block complexes and their named coarse faces, edges and vertices.

use super::geom::{self, Point};

/// Tolerance for coarse geometric predicates in mesh units.
pub const GEOM_TOL: f64 = 1e-9;

/// Canonical order of block side names; edge and vertex names concatenate
/// the names of the incident sides in this order.
pub const SIDE_ORDER: [&str; 9] = ["x0", "x1", "y0", "y1", "z0", "z1", "xz", "yz", "base"];

/// Signed permutation plus translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    pub m: [[f64; 3]; 3],
    pub t: Point,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            t: [0.0; 3],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let mut out = self.t;
        for (r, row) in self.m.iter().enumerate() {
            out[r] += row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
        }
        out
    }
}

/// Convex block shapes. The pyramid is `{0 <= x <= z, 0 <= y <= z <= 1}` in
/// local coordinates: apex at the origin, unit square base on `z = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Brick { lo: Point, hi: Point },
    Pyramid { iso: Isometry },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub shape: Shape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JunctionKind {
    Face,
    Edge,
    Vertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Junction {
    pub a: usize,
    pub b: usize,
    pub kind: JunctionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoarseGeom {
    /// Convex planar polygon, corners counterclockwise about the outward normal.
    Face { corners: Vec<Point>, normal: Point },
    Edge { a: Point, b: Point },
    Vertex { x: Point },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseEntity {
    pub name: String,
    pub block: usize,
    pub geom: CoarseGeom,
}

impl CoarseEntity {
    pub fn is_face(&self) -> bool {
        matches!(self.geom, CoarseGeom::Face { .. })
    }
    pub fn is_edge(&self) -> bool {
        matches!(self.geom, CoarseGeom::Edge { .. })
    }
    pub fn is_vertex(&self) -> bool {
        matches!(self.geom, CoarseGeom::Vertex { .. })
    }

    /// Whether the point lies in the closed entity.
    pub fn contains(&self, x: Point) -> bool {
        match &self.geom {
            CoarseGeom::Face { corners, normal } => geom::in_polygon(x, corners, *normal, GEOM_TOL),
            CoarseGeom::Edge { a, b } => geom::segment_distance(x, *a, *b) <= GEOM_TOL,
            CoarseGeom::Vertex { x: v } => geom::norm(geom::sub(x, *v)) <= GEOM_TOL,
        }
    }

    /// Corner points (face corners, edge endpoints or the vertex itself).
    pub fn corners(&self) -> Vec<Point> {
        match &self.geom {
            CoarseGeom::Face { corners, .. } => corners.clone(),
            CoarseGeom::Edge { a, b } => vec![*a, *b],
            CoarseGeom::Vertex { x } => vec![*x],
        }
    }

    /// Polygon sides of a face as segments.
    pub fn sides(&self) -> Vec<(Point, Point)> {
        match &self.geom {
            CoarseGeom::Face { corners, .. } => (0..corners.len())
                .map(|i| (corners[i], corners[(i + 1) % corners.len()]))
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn same_point(a: Point, b: Point) -> bool {
    geom::norm(geom::sub(a, b)) <= GEOM_TOL
}

fn same_point_set(a: &[Point], b: &[Point]) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| same_point(*p, *q)))
}

fn side_rank(s: &str) -> usize {
    SIDE_ORDER.iter().position(|x| *x == s).unwrap_or(SIDE_ORDER.len())
}

fn join_sides(sides: &mut [&str]) -> String {
    sides.sort_by_key(|s| side_rank(s));
    sides.concat()
}

impl Block {
    pub fn brick(name: &str, lo: Point, hi: Point) -> Self {
        Block { name: name.to_string(), shape: Shape::Brick { lo, hi } }
    }

    pub fn pyramid(name: &str, iso: Isometry) -> Self {
        Block { name: name.to_string(), shape: Shape::Pyramid { iso } }
    }

    /// Corner points of the block.
    pub fn corners(&self) -> Vec<Point> {
        match &self.shape {
            Shape::Brick { lo, hi } => {
                let mut out = Vec::with_capacity(8);
                for i in 0..8 {
                    out.push([
                        if i & 1 == 0 { lo[0] } else { hi[0] },
                        if i & 2 == 0 { lo[1] } else { hi[1] },
                        if i & 4 == 0 { lo[2] } else { hi[2] },
                    ]);
                }
                out
            }
            Shape::Pyramid { iso } => [
                [0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 1.0],
            ]
            .iter()
            .map(|p| iso.apply(*p))
            .collect(),
        }
    }

    /// Whether a point lies in the closed block.
    pub fn contains(&self, x: Point) -> bool {
        let t = GEOM_TOL;
        match &self.shape {
            Shape::Brick { lo, hi } => (0..3).all(|i| x[i] >= lo[i] - t && x[i] <= hi[i] + t),
            Shape::Pyramid { .. } => self
                .faces()
                .iter()
                .all(|(_, c, n)| geom::dot(geom::sub(x, c[0]), *n) <= t),
        }
    }

    /// Named sides: (side name, corners counterclockwise about the outward
    /// normal, outward unit normal).
    pub fn faces(&self) -> Vec<(&'static str, Vec<Point>, Point)> {
        let raw: Vec<(&'static str, Vec<Point>)> = match &self.shape {
            Shape::Brick { lo, hi } => {
                let c = |x: usize, y: usize, z: usize| -> Point {
                    [[lo[0], hi[0]][x], [lo[1], hi[1]][y], [lo[2], hi[2]][z]]
                };
                vec![
                    ("x0", vec![c(0, 0, 0), c(0, 1, 0), c(0, 1, 1), c(0, 0, 1)]),
                    ("x1", vec![c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)]),
                    ("y0", vec![c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)]),
                    ("y1", vec![c(0, 1, 0), c(1, 1, 0), c(1, 1, 1), c(0, 1, 1)]),
                    ("z0", vec![c(0, 0, 0), c(1, 0, 0), c(1, 1, 0), c(0, 1, 0)]),
                    ("z1", vec![c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)]),
                ]
            }
            Shape::Pyramid { iso } => {
                let o = [0.0, 0.0, 0.0];
                let a = [0.0, 0.0, 1.0];
                let b = [1.0, 0.0, 1.0];
                let c = [1.0, 1.0, 1.0];
                let d = [0.0, 1.0, 1.0];
                vec![
                    ("x0", vec![o, a, d]),
                    ("y0", vec![o, a, b]),
                    ("xz", vec![o, b, c]),
                    ("yz", vec![o, c, d]),
                    ("base", vec![a, b, c, d]),
                ]
                .into_iter()
                .map(|(n, pts)| (n, pts.into_iter().map(|p| iso.apply(p)).collect()))
                .collect()
            }
        };
        let center = geom::centroid(&self.corners());
        raw.into_iter()
            .map(|(name, pts)| {
                let fc = geom::centroid(&pts);
                let mut n = geom::cross(geom::sub(pts[1], pts[0]), geom::sub(pts[2], pts[0]));
                if geom::dot(n, geom::sub(fc, center)) < 0.0 {
                    n = geom::scale(n, -1.0);
                }
                let n = geom::scale(n, 1.0 / geom::norm(n));
                // order counterclockwise about n
                let u = geom::sub(pts[0], fc);
                let v = geom::cross(n, u);
                let mut ordered = pts.clone();
                ordered.sort_by(|p, q| {
                    let ang = |x: &Point| {
                        let d = geom::sub(*x, fc);
                        geom::dot(d, v).atan2(geom::dot(d, u))
                    };
                    ang(p).partial_cmp(&ang(q)).unwrap()
                });
                (name, ordered, n)
            })
            .collect()
    }

    /// All block-local coarse entities (faces, edges, vertices) with local names.
    pub fn local_entities(&self) -> Vec<(String, CoarseGeom)> {
        let faces = self.faces();
        let mut out: Vec<(String, CoarseGeom)> = faces
            .iter()
            .map(|(n, c, nn)| (n.to_string(), CoarseGeom::Face { corners: c.clone(), normal: *nn }))
            .collect();
        for i in 0..faces.len() {
            for j in i + 1..faces.len() {
                let shared: Vec<Point> = faces[i]
                    .1
                    .iter()
                    .filter(|p| faces[j].1.iter().any(|q| same_point(**p, *q)))
                    .copied()
                    .collect();
                if shared.len() == 2 {
                    let name = join_sides(&mut [faces[i].0, faces[j].0]);
                    out.push((name, CoarseGeom::Edge { a: shared[0], b: shared[1] }));
                }
            }
        }
        for x in self.corners() {
            let mut sides: Vec<&str> = faces
                .iter()
                .filter(|(_, c, _)| c.iter().any(|q| same_point(x, *q)))
                .map(|(n, _, _)| *n)
                .collect();
            out.push((join_sides(&mut sides), CoarseGeom::Vertex { x }));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockComplex {
    pub name: String,
    pub blocks: Vec<Block>,
    pub junctions: Vec<Junction>,
}

impl BlockComplex {
    pub fn new(name: &str, blocks: Vec<Block>, junctions: Vec<Junction>) -> Self {
        BlockComplex { name: name.to_string(), blocks, junctions }
    }

    fn qualify(&self, block: usize, local: &str) -> String {
        if self.blocks.len() == 1 {
            local.to_string()
        } else {
            format!("{}.{}", self.blocks[block].name, local)
        }
    }

    /// Every coarse entity of every block, with qualified names.
    pub fn entities(&self) -> Vec<CoarseEntity> {
        let mut out = Vec::new();
        for (b, blk) in self.blocks.iter().enumerate() {
            for (name, geom) in blk.local_entities() {
                out.push(CoarseEntity { name: self.qualify(b, &name), block: b, geom });
            }
        }
        out
    }

    /// Resolve a qualified entity name (`apex` is accepted for pyramid apices).
    pub fn entity(&self, name: &str) -> Option<CoarseEntity> {
        let (prefix, local) = match name.rsplit_once('.') {
            Some((p, l)) => (Some(p), l),
            None => (None, name),
        };
        let local = if local == "apex" { "x0y0xzyz" } else { local };
        for (b, blk) in self.blocks.iter().enumerate() {
            let matches_block = match prefix {
                Some(p) => blk.name == p,
                None => self.blocks.len() == 1,
            };
            if !matches_block {
                continue;
            }
            for (n, geom) in blk.local_entities() {
                if n == local {
                    return Some(CoarseEntity { name: self.qualify(b, &n), block: b, geom });
                }
            }
        }
        None
    }

    /// Whether a face entity is shared by two blocks.
    pub fn is_interface_face(&self, e: &CoarseEntity) -> bool {
        let CoarseGeom::Face { corners, .. } = &e.geom else {
            return false;
        };
        self.blocks.iter().enumerate().any(|(b, blk)| {
            b != e.block && blk.faces().iter().any(|(_, c, _)| same_point_set(c, corners))
        })
    }

    /// Boundary faces of the complex.
    pub fn boundary_faces(&self) -> Vec<CoarseEntity> {
        self.entities()
            .into_iter()
            .filter(|e| e.is_face() && !self.is_interface_face(e))
            .collect()
    }

    /// Interface faces shared by two blocks (listed once per owning block).
    pub fn interface_faces(&self) -> Vec<CoarseEntity> {
        self.entities()
            .into_iter()
            .filter(|e| e.is_face() && self.is_interface_face(e))
            .collect()
    }

    /// Whether the closed entity lies on the boundary of the complex.
    pub fn on_boundary(&self, e: &CoarseEntity) -> bool {
        match &e.geom {
            CoarseGeom::Face { .. } => !self.is_interface_face(e),
            _ => {
                let pts = e.corners();
                self.boundary_faces().iter().any(|f| pts.iter().all(|p| f.contains(*p)))
            }
        }
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// The complex formed by a subset of blocks, in the given order.
    pub fn subcomplex(&self, ids: &[usize]) -> BlockComplex {
        let blocks = ids.iter().map(|&i| self.blocks[i].clone()).collect();
        let junctions = self
            .junctions
            .iter()
            .filter_map(|j| {
                let a = ids.iter().position(|&i| i == j.a)?;
                let b = ids.iter().position(|&i| i == j.b)?;
                Some(Junction { a, b, kind: j.kind })
            })
            .collect();
        let name = format!(
            "{}[{}]",
            self.name,
            ids.iter().map(|&i| self.blocks[i].name.as_str()).collect::<Vec<_>>().join(",")
        );
        BlockComplex { name, blocks, junctions }
    }

    /// Translate a qualified name of this complex into the name of the same
    /// entity in `sub` (a subcomplex built from this one).
    pub fn name_in(&self, name: &str, sub: &BlockComplex) -> String {
        if sub.blocks.len() == 1 {
            match name.rsplit_once('.') {
                Some((_, l)) => l.to_string(),
                None => name.to_string(),
            }
        } else if self.blocks.len() == 1 {
            format!("{}.{}", sub.blocks[0].name, name)
        } else {
            name.to_string()
        }
    }

    pub fn has_junction(&self, kind: JunctionKind) -> bool {
        self.junctions.iter().any(|j| j.kind == kind)
    }
}
