//! The closed geometry catalog and its named trace specifications.

use std::fmt;
use std::str::FromStr;

use super::complex::{Block, BlockComplex, Isometry, Junction, JunctionKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeometryId {
    UnitCube,
    ThreeCubeL,
    Pyramid,
    CubeInBox,
    FourEdgeCube,
    EdgeJunctionPair,
    VertexJunctionPair,
    VertexJunctionStar,
}

impl GeometryId {
    pub const ALL: [GeometryId; 8] = [
        GeometryId::UnitCube,
        GeometryId::ThreeCubeL,
        GeometryId::Pyramid,
        GeometryId::CubeInBox,
        GeometryId::FourEdgeCube,
        GeometryId::EdgeJunctionPair,
        GeometryId::VertexJunctionPair,
        GeometryId::VertexJunctionStar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeometryId::UnitCube => "unit_cube",
            GeometryId::ThreeCubeL => "three_cube_L",
            GeometryId::Pyramid => "pyramid",
            GeometryId::CubeInBox => "cube_in_box",
            GeometryId::FourEdgeCube => "four_edge_cube",
            GeometryId::EdgeJunctionPair => "edge_junction_pair",
            GeometryId::VertexJunctionPair => "vertex_junction_pair",
            GeometryId::VertexJunctionStar => "vertex_junction_star",
        }
    }
}

impl fmt::Display for GeometryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GeometryId::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::UnknownGeometry(s.to_string()))
    }
}

/// A named trace set of a catalog geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSpec {
    pub name: &'static str,
    pub entities: Vec<&'static str>,
    /// Disjoint edges that need the subdomain-splitting route.
    pub split_edges: bool,
}

fn spec(name: &'static str, entities: &[&'static str]) -> GammaSpec {
    GammaSpec { name, entities: entities.to_vec(), split_edges: false }
}

#[derive(Clone, Debug)]
pub struct Geometry {
    pub id: GeometryId,
    pub complex: BlockComplex,
    /// The closed domain is convex.
    pub convex: bool,
    /// Faces whose planes cut into the domain; covering all of them makes the
    /// extended domain convex.
    pub concave_faces: Vec<&'static str>,
    /// Block ordering for the multi-block face-trace construction: the first
    /// group is decomposed directly, the second through interface extensions.
    pub sigma: Option<(Vec<usize>, Vec<usize>)>,
    /// Meshed extended complex; block 0 coincides with the geometry.
    pub extended: Option<BlockComplex>,
    /// Blocks forming the central subdomain of the edge-splitting route; the
    /// remaining blocks are one subdomain each.
    pub central_blocks: Option<Vec<usize>>,
    pub gamma_specs: Vec<GammaSpec>,
}

fn unit(name: &str, lo: [f64; 3]) -> Block {
    Block::brick(name, lo, [lo[0] + 1.0, lo[1] + 1.0, lo[2] + 1.0])
}

impl Geometry {
    pub fn get(id: GeometryId) -> Geometry {
        use GeometryId::*;
        let name = id.as_str();
        let mut g = Geometry {
            id,
            complex: BlockComplex::new(name, vec![], vec![]),
            convex: false,
            concave_faces: vec![],
            sigma: None,
            extended: None,
            central_blocks: None,
            gamma_specs: vec![],
        };
        match id {
            UnitCube => {
                g.complex = BlockComplex::new(name, vec![unit("G", [0.0; 3])], vec![]);
                g.convex = true;
                g.gamma_specs = vec![
                    spec("face", &["z0"]),
                    spec("boundary", &["x0", "x1", "y0", "y1", "z0", "z1"]),
                    spec("two_faces", &["z0", "z1"]),
                    spec("edge", &["x1y1"]),
                    spec("loop", &["x0z1", "x1z1", "y0z1", "y1z1"]),
                    spec("face_edge_touch", &["z0", "x1y1"]),
                    spec("face_edge_far", &["z0", "y1z1"]),
                    spec("none", &[]),
                ];
            }
            ThreeCubeL => {
                g.complex = BlockComplex::new(
                    name,
                    vec![
                        Block::brick("D1", [0.0, 0.0, 0.0], [0.5, 0.5, 0.5]),
                        Block::brick("D2", [0.5, 0.0, 0.0], [1.0, 0.5, 0.5]),
                        Block::brick("D3", [0.0, 0.5, 0.0], [0.5, 1.0, 0.5]),
                    ],
                    vec![
                        Junction { a: 0, b: 1, kind: JunctionKind::Face },
                        Junction { a: 0, b: 2, kind: JunctionKind::Face },
                        Junction { a: 1, b: 2, kind: JunctionKind::Edge },
                    ],
                );
                g.concave_faces = vec!["D2.y1", "D3.x1"];
                g.sigma = Some((vec![0], vec![1, 2]));
                g.gamma_specs = vec![
                    spec("concave", &["D2.y1", "D3.x1"]),
                    spec("outer", &["D1.x0"]),
                    spec("bottom", &["D1.z0", "D2.z0", "D3.z0"]),
                ];
            }
            Pyramid => {
                g.complex =
                    BlockComplex::new(name, vec![Block::pyramid("P", Isometry::identity())], vec![]);
                g.convex = true;
                g.gamma_specs = vec![spec("opposite", &["x0", "xz"]), spec("base", &["base"])];
            }
            CubeInBox => {
                g.complex = BlockComplex::new(name, vec![unit("G", [0.0; 3])], vec![]);
                g.convex = true;
                g.extended = Some(BlockComplex::new(
                    "cube_in_box_extended",
                    vec![
                        unit("G", [0.0, 0.0, 0.0]),
                        unit("D1", [-1.0, 0.0, 0.0]),
                        unit("D2", [0.0, -1.0, 0.0]),
                        unit("D3", [-1.0, -1.0, 0.0]),
                    ],
                    vec![
                        Junction { a: 0, b: 1, kind: JunctionKind::Face },
                        Junction { a: 0, b: 2, kind: JunctionKind::Face },
                        Junction { a: 1, b: 3, kind: JunctionKind::Face },
                        Junction { a: 2, b: 3, kind: JunctionKind::Face },
                        Junction { a: 0, b: 3, kind: JunctionKind::Edge },
                        Junction { a: 1, b: 2, kind: JunctionKind::Edge },
                    ],
                ));
                g.gamma_specs = vec![spec("shaded", &["x0", "y0"]), spec("shaded_edge", &["x0", "y0", "x1y1"])];
            }
            FourEdgeCube => {
                let mut blocks = Vec::new();
                for j in 0..3 {
                    for i in 0..3 {
                        let lo = [0.5 * i as f64, 0.5 * j as f64, 0.0];
                        blocks.push(Block::brick(
                            &format!("c{i}{j}"),
                            lo,
                            [lo[0] + 0.5, lo[1] + 0.5, 1.5],
                        ));
                    }
                }
                let mut junctions = Vec::new();
                for a in 0usize..9 {
                    for b in a + 1..9 {
                        let (ia, ja, ib, jb) = (a % 3, a / 3, b % 3, b / 3);
                        let di = ia.abs_diff(ib);
                        let dj = ja.abs_diff(jb);
                        let kind = match (di, dj) {
                            (1, 0) | (0, 1) => JunctionKind::Face,
                            (1, 1) => JunctionKind::Edge,
                            _ => continue,
                        };
                        junctions.push(Junction { a, b, kind });
                    }
                }
                g.complex = BlockComplex::new(name, blocks, junctions);
                g.convex = true;
                g.central_blocks = Some(vec![1, 3, 4, 5, 7]);
                g.gamma_specs = vec![
                    GammaSpec {
                        name: "four_edges",
                        entities: vec!["c00.x0y0", "c20.x1y0", "c02.x0y1", "c22.x1y1"],
                        split_edges: true,
                    },
                    spec("one_edge", &["c00.x0y0"]),
                    spec("two_edges", &["c00.x0y0", "c22.x1y1"]),
                ];
            }
            EdgeJunctionPair => {
                g.complex = BlockComplex::new(
                    name,
                    vec![unit("G1", [0.0, 0.0, 0.0]), unit("G2", [1.0, 1.0, 0.0])],
                    vec![Junction { a: 0, b: 1, kind: JunctionKind::Edge }],
                );
                g.gamma_specs = vec![
                    spec("both", &["G1.x1", "G2.x0"]),
                    spec("one_side", &["G1.x1"]),
                    spec("far", &["G1.x0"]),
                ];
            }
            VertexJunctionPair => {
                g.complex = BlockComplex::new(
                    name,
                    vec![unit("G1", [0.0, 0.0, 0.0]), unit("G2", [-1.0, -1.0, -1.0])],
                    vec![Junction { a: 0, b: 1, kind: JunctionKind::Vertex }],
                );
                g.gamma_specs = vec![spec("corner", &["G1.x0", "G2.x1"]), spec("far", &["G1.x1", "G2.x0"])];
            }
            VertexJunctionStar => {
                let p2 = Isometry {
                    m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
                    t: [0.0; 3],
                };
                let p3 = Isometry {
                    m: [[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                    t: [0.0; 3],
                };
                g.complex = BlockComplex::new(
                    name,
                    vec![
                        Block::pyramid("P1", Isometry::identity()),
                        Block::pyramid("P2", p2),
                        Block::pyramid("P3", p3),
                    ],
                    vec![
                        Junction { a: 0, b: 1, kind: JunctionKind::Vertex },
                        Junction { a: 0, b: 2, kind: JunctionKind::Vertex },
                        Junction { a: 1, b: 2, kind: JunctionKind::Vertex },
                    ],
                );
                g.gamma_specs = vec![
                    spec("bases", &["P1.base", "P2.base", "P3.base"]),
                    spec("apex_faces", &["P1.x0", "P2.x0", "P3.x0"]),
                ];
            }
        }
        g
    }

    pub fn gamma_spec(&self, name: &str) -> Option<&GammaSpec> {
        self.gamma_specs.iter().find(|s| s.name == name)
    }

    /// The catalog spec whose entity set equals `names` (order-insensitive).
    pub fn spec_for_entities(&self, names: &[String]) -> Option<&GammaSpec> {
        let mut want: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        want.sort_unstable();
        self.gamma_specs.iter().find(|s| {
            let mut have = s.entities.clone();
            have.sort_unstable();
            have == want
        })
    }
}

/// Resolve a trace description: either a catalog spec name or a
/// comma-separated list of coarse entity names (empty for no trace).
pub fn resolve_gamma(geometry: &Geometry, text: &str) -> Vec<String> {
    if let Some(s) = geometry.gamma_spec(text) {
        return s.entities.iter().map(|e| e.to_string()).collect();
    }
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}
