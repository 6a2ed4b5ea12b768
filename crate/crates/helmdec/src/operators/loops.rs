//! Boundary loops of coarse faces and the trace functions built on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{geom, TetMesh};

/// Closed fine-edge cycle bounding a union of fine faces, traversed
/// counterclockwise with respect to the outward normal.
#[derive(Clone, Debug)]
pub struct BoundaryLoop {
    /// Loop nodes; `nodes[0]` is the start vertex (`t = 0`).
    pub nodes: Vec<usize>,
    /// `edges[i]` joins `nodes[i]` to `nodes[i + 1]` (cyclically).
    pub edges: Vec<usize>,
    /// +1 where the global edge orientation agrees with the traversal.
    pub signs: Vec<f64>,
    /// Arc length at each node.
    pub t: Vec<f64>,
    pub length: f64,
    /// Fine faces enclosed by the loop and their orientation relative to the
    /// traversal (+1 when the global face normal is the outward one).
    pub faces: Vec<(usize, f64)>,
}

impl BoundaryLoop {
    /// Loop around the fine faces flagged in `faces`. Starts at `start`
    /// (default: the lowest vertex id on the loop).
    pub fn of_faces(mesh: &TetMesh, faces: &[bool], start: Option<usize>) -> Result<Self> {
        let mut count = vec![0u8; mesh.n_edges()];
        let mut face_list = Vec::new();
        for (f, tri) in mesh.faces.iter().enumerate() {
            if faces[f] {
                face_list.push(f);
                for i in 0..3 {
                    count[mesh.edge_id(tri[i], tri[(i + 1) % 3]).unwrap()] += 1;
                }
            }
        }
        let rim: Vec<usize> = (0..mesh.n_edges()).filter(|&e| count[e] == 1).collect();
        if rim.is_empty() {
            return Err(Error::OpenLoop("no rim edges".into()));
        }
        let mut adj: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &e in &rim {
            let [a, b] = mesh.edges[e];
            adj.entry(a).or_default().push(e);
            adj.entry(b).or_default().push(e);
        }
        if adj.values().any(|v| v.len() != 2) {
            return Err(Error::OpenLoop("a rim node does not have two rim edges".into()));
        }
        let s0 = match start {
            Some(s) if adj.contains_key(&s) => s,
            Some(_) => return Err(Error::OpenLoop("start vertex not on the loop".into())),
            None => *adj.keys().next().unwrap(),
        };
        // Orientation: the enclosed face on the first edge must be
        // counterclockwise when traversed start -> next.
        let first = adj[&s0][0].min(adj[&s0][1]);
        let w = other(mesh, first, s0);
        let f = face_list
            .iter()
            .copied()
            .find(|&f| mesh.faces[f].contains(&s0) && mesh.faces[f].contains(&w))
            .unwrap();
        let first = if outward_orientation(mesh, f, s0, w) > 0.0 {
            first
        } else {
            adj[&s0].iter().copied().find(|&e| e != first).unwrap()
        };
        let mut nodes = vec![s0];
        let mut edges = vec![first];
        let mut cur = other(mesh, first, s0);
        let mut prev = first;
        while cur != s0 {
            nodes.push(cur);
            let next = adj[&cur].iter().copied().find(|&e| e != prev).unwrap();
            edges.push(next);
            prev = next;
            cur = other(mesh, next, cur);
            if nodes.len() > rim.len() {
                return Err(Error::OpenLoop("traversal did not close".into()));
            }
        }
        if edges.len() != rim.len() {
            return Err(Error::OpenLoop("rim is not a single cycle".into()));
        }
        let signs: Vec<f64> =
            edges.iter().zip(&nodes).map(|(&e, &a)| if mesh.edges[e][0] == a { 1.0 } else { -1.0 }).collect();
        let mut t = vec![0.0];
        for &e in &edges[..edges.len() - 1] {
            t.push(t.last().unwrap() + mesh.edge_length(e));
        }
        let length = t.last().unwrap() + mesh.edge_length(*edges.last().unwrap());
        let faces = face_list.iter().map(|&f| (f, face_sign(mesh, f))).collect();
        Ok(BoundaryLoop { nodes, edges, signs, t, length, faces })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&n| n == node)
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let next = if i + 1 == self.nodes.len() { self.length } else { self.t[i + 1] };
        next - self.t[i]
    }

    /// Moments of `v` in the traversal direction.
    pub fn moments(&self, v: &[f64]) -> Vec<f64> {
        self.edges.iter().zip(&self.signs).map(|(&e, s)| s * v[e]).collect()
    }

    /// Loop edges with both ends flagged in `nodes`.
    pub fn edges_within(&self, nodes: &[bool]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| nodes[self.nodes[i]] && nodes[self.nodes[(i + 1) % self.len()]])
            .collect()
    }

    /// Flux of `curl v` through the enclosed faces, with the outward normal.
    pub fn flux(&self, mesh: &TetMesh, v: &[f64]) -> f64 {
        let c = mesh.ops().curl.matvec(v);
        self.faces.iter().map(|(f, s)| s * c[*f]).sum()
    }
}

fn other(mesh: &TetMesh, e: usize, v: usize) -> usize {
    let [a, b] = mesh.edges[e];
    if a == v {
        b
    } else {
        a
    }
}

/// Point on the domain side of fine face `f`.
fn inside_point(mesh: &TetMesh, f: usize) -> geom::Point {
    let t = mesh.face_tets[f][0];
    let opp = mesh.tets[t].iter().copied().find(|v| !mesh.faces[f].contains(v)).unwrap();
    mesh.vertices[opp]
}

/// Sign of `(x_b - x_a) × (x_c - x_a)` against the outward normal, where
/// `c` is the third vertex of face `f`.
fn outward_orientation(mesh: &TetMesh, f: usize, a: usize, b: usize) -> f64 {
    let c = mesh.faces[f].iter().copied().find(|&x| x != a && x != b).unwrap();
    let [xa, xb, xc] = [a, b, c].map(|i| mesh.vertices[i]);
    let n = geom::cross(geom::sub(xb, xa), geom::sub(xc, xa));
    geom::dot(n, geom::sub(xa, inside_point(mesh, f))).signum()
}

fn face_sign(mesh: &TetMesh, f: usize) -> f64 {
    let [a, b, _] = mesh.faces[f];
    outward_orientation(mesh, f, a, b)
}

/// `λ_e(v) = φ(head) - φ(tail) + C|e|` along a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopDecomposition {
    pub c: f64,
    /// Values at the loop nodes, in loop order.
    pub phi: Vec<f64>,
    pub c_shift: f64,
}

/// Split the loop moments of `v` into a constant rate and a potential.
///
/// `active` selects the loop edges carrying the constant (all edges by
/// default); `zero_mean` lists loop edges over which the trapezoid mean of
/// `φ` is shifted to zero.
pub fn loop_decompose(
    v: &[f64],
    lp: &BoundaryLoop,
    active: Option<&[bool]>,
    zero_mean: Option<&[usize]>,
) -> Result<LoopDecomposition> {
    if lp.nodes.len() < 3 || lp.nodes.len() != lp.edges.len() {
        return Err(Error::OpenLoop("fewer than three loop nodes".into()));
    }
    let lam = lp.moments(v);
    let is_active = |i: usize| active.map(|a| a[i]).unwrap_or(true);
    let l_active: f64 = (0..lp.len()).filter(|&i| is_active(i)).map(|i| lp.edge_length(i)).sum();
    let c = lam.iter().sum::<f64>() / l_active;
    let mut phi = Vec::with_capacity(lp.len());
    let mut acc = 0.0;
    for i in 0..lp.len() {
        phi.push(acc);
        acc += lam[i] - if is_active(i) { c * lp.edge_length(i) } else { 0.0 };
    }
    let mut c_shift = 0.0;
    if let Some(e) = zero_mean {
        let n = lp.len();
        let len: f64 = e.iter().map(|&i| lp.edge_length(i)).sum();
        let mean = e.iter().map(|&i| lp.edge_length(i) * (phi[i] + phi[(i + 1) % n]) / 2.0).sum::<f64>() / len;
        for p in &mut phi {
            *p -= mean;
        }
        c_shift = -mean;
    }
    Ok(LoopDecomposition { c, phi, c_shift })
}

/// Minimum-norm nodal vector field along the loop whose edge interpolant
/// carries the tangential rate `rate[i]` on each active loop edge.
///
/// The unknowns are the loop nodes touched by active edges and not
/// `pinned`; the norm is `L²` over the active edges. Constraints hold per
/// active edge, or per group of loop edges when `groups` is given. Returns
/// a full-length nodal vector field.
pub fn loop_constant_extension(
    mesh: &TetMesh,
    lp: &BoundaryLoop,
    rate: &[f64],
    active: &[bool],
    pinned: &[bool],
    groups: Option<&[Vec<usize>]>,
) -> Result<Vec<f64>> {
    let n = lp.len();
    let mut out = vec![0.0; 3 * mesh.n_vertices()];
    if (0..n).all(|i| !active[i] || rate[i] == 0.0) {
        return Ok(out);
    }
    let mut slot = vec![usize::MAX; mesh.n_vertices()];
    let mut unknowns = Vec::new();
    for i in (0..n).filter(|&i| active[i]) {
        for node in [lp.nodes[i], lp.nodes[(i + 1) % n]] {
            if !pinned[node] && slot[node] == usize::MAX {
                slot[node] = unknowns.len();
                unknowns.push(node);
            }
        }
    }
    let m = 3 * unknowns.len();
    if m == 0 {
        return Err(Error::Infeasible(f64::INFINITY));
    }
    let mut mass = DMatrix::<f64>::zeros(m, m);
    for i in (0..n).filter(|&i| active[i]) {
        let l = lp.edge_length(i);
        let (a, b) = (slot[lp.nodes[i]], slot[lp.nodes[(i + 1) % n]]);
        for (p, q, w) in [(a, a, 2.0), (b, b, 2.0), (a, b, 1.0), (b, a, 1.0)] {
            if p != usize::MAX && q != usize::MAX {
                for c in 0..3 {
                    mass[(3 * p + c, 3 * q + c)] += w * l / 6.0;
                }
            }
        }
    }
    let default_groups: Vec<Vec<usize>>;
    let groups = match groups {
        Some(g) => g,
        None => {
            default_groups = (0..n).filter(|&i| active[i]).map(|i| vec![i]).collect();
            &default_groups
        }
    };
    let mut a = DMatrix::<f64>::zeros(groups.len(), m);
    let mut b = DVector::<f64>::zeros(groups.len());
    for (r, g) in groups.iter().enumerate() {
        for &i in g {
            let (na, nb) = (lp.nodes[i], lp.nodes[(i + 1) % n]);
            let d = geom::sub(mesh.vertices[nb], mesh.vertices[na]);
            for node in [na, nb] {
                if slot[node] != usize::MAX {
                    for c in 0..3 {
                        a[(r, 3 * slot[node] + c)] += 0.5 * d[c];
                    }
                }
            }
            b[r] += rate[i] * lp.edge_length(i);
        }
    }
    let l = mass.cholesky().ok_or_else(|| Error::Solver("loop mass not definite".into()))?.l();
    let l_inv_t = l.transpose().try_inverse().ok_or_else(|| Error::Solver("singular loop mass".into()))?;
    let bmat = &a * &l_inv_t;
    let svd = bmat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let y = svd.solve(&b, 1e-12 * smax).map_err(|e| Error::Solver(e.to_string()))?;
    let w = &l_inv_t * y;
    let resid = (&a * &w - &b).amax();
    if resid > 1e-9 * b.amax().max(1.0) {
        return Err(Error::Infeasible(resid));
    }
    for (k, &node) in unknowns.iter().enumerate() {
        out[3 * node..3 * node + 3].copy_from_slice(&[w[3 * k], w[3 * k + 1], w[3 * k + 2]]);
    }
    Ok(out)
}

/// Piecewise constant correction on the loop: `-c` on `e`, and
/// `|e| c / (2|e_k|)` on the two neighbouring segments; zero elsewhere.
pub fn epsilon_correction(lp: &BoundaryLoop, e: &[usize], e1: &[usize], e2: &[usize], c: f64) -> Result<Vec<f64>> {
    let n = lp.len();
    let ends = |s: &[usize]| -> Vec<usize> {
        s.iter().flat_map(|&i| [lp.nodes[i], lp.nodes[(i + 1) % n]]).collect()
    };
    let touches = |s: &[usize]| ends(s).iter().any(|x| ends(e).contains(x));
    if e.is_empty() || e1.is_empty() || e2.is_empty() || !touches(e1) || !touches(e2) {
        return Err(Error::Unsupported("segments adjacent to the edge are required".into()));
    }
    let len = |s: &[usize]| s.iter().map(|&i| lp.edge_length(i)).sum::<f64>();
    let (le, l1, l2) = (len(e), len(e1), len(e2));
    let mut eps = vec![0.0; n];
    for &i in e {
        eps[i] = -c;
    }
    for &i in e1 {
        eps[i] = le / (2.0 * l1) * c;
    }
    for &i in e2 {
        eps[i] = le / (2.0 * l2) * c;
    }
    Ok(eps)
}

/// Compatibility functionals `F_i = φ_{i+1}(v₀) - φ_i(v₀)` from the loop
/// potentials of consecutive blocks evaluated at the junction vertex.
pub fn junction_functionals(phi_at_vertex: &[f64]) -> Vec<f64> {
    phi_at_vertex.windows(2).map(|w| w[1] - w[0]).collect()
}
