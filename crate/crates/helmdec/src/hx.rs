//! Curl-curl model problem with per-block coefficients and the auxiliary
//! space preconditioner built from nodal Poisson solves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{self, Kind, Space};
use crate::mesh::{FineTrace, TetMesh};
use crate::solve::Cholesky;
use crate::sparse::{dot, SparseOperator};

/// `(α curl u, curl v) + (β u, v)` restricted to the edges off the essential
/// trace.
#[derive(Debug)]
pub struct HxSystem {
    pub a: SparseOperator,
    pub rhs: Vec<f64>,
    /// Parent edge id of each unknown.
    pub free_edges: Vec<usize>,
    g: SparseOperator,
    pi: SparseOperator,
    free_comp: Vec<usize>,
}

impl HxSystem {
    /// `rhs` is a full-length edge field; its entries on the trace are dropped.
    pub fn assemble(mesh: &TetMesh, alpha: &[f64], beta: &[f64], trace: &FineTrace, rhs: &[f64]) -> Result<Self> {
        let nb = mesh.complex.blocks.len();
        for c in alpha.iter().chain(beta) {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("coefficient {c} is not positive")));
            }
        }
        if alpha.len() != nb || beta.len() != nb {
            return Err(Error::Dimension { expected: nb, got: alpha.len().min(beta.len()) });
        }
        if rhs.len() != mesh.n_edges() {
            return Err(Error::Dimension { expected: mesh.n_edges(), got: rhs.len() });
        }
        let k = fem::assemble_weighted(mesh, Space::V, Kind::Stiffness, alpha);
        let m = fem::assemble_weighted(mesh, Space::V, Kind::Mass, beta);
        let full = k.lincomb(1.0, &m, 1.0);
        let free_edges: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !trace.edges[e]).collect();
        let mut fixed_nodes = trace.nodes.clone();
        if !fixed_nodes.iter().any(|x| *x) {
            // constants are in the kernel of the scalar auxiliary form
            fixed_nodes[0] = true;
        }
        let free_nodes: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| !fixed_nodes[i]).collect();
        let free_comp: Vec<usize> =
            (0..3 * mesh.n_vertices()).filter(|&i| !trace.nodes[i / 3]).collect();
        let ops = mesh.ops();
        Ok(HxSystem {
            a: full.submatrix(&free_edges, &free_edges),
            rhs: free_edges.iter().map(|&e| rhs[e]).collect(),
            g: ops.grad.submatrix(&free_edges, &free_nodes),
            pi: ops.rh.submatrix(&free_edges, &free_comp),
            free_edges,
            free_comp,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows
    }

    /// Scatter a solution back to a full edge field (zero on the trace).
    pub fn expand(&self, x: &[f64], n_edges: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_edges];
        for (k, &e) in self.free_edges.iter().enumerate() {
            out[e] = x[k];
        }
        out
    }
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

/// `B r = D⁻¹ r + G A_s⁻¹ Gᵀ r + Π A_v⁻¹ Πᵀ r` with the Galerkin auxiliary
/// forms `A_s = Gᵀ A G` and the vector Laplacian-plus-mass form `A_v`.
pub struct HxPreconditioner {
    inv_diag: Vec<f64>,
    g: SparseOperator,
    pi: SparseOperator,
    scalar: Cholesky,
    vector: Cholesky,
}

impl std::fmt::Debug for HxPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HxPreconditioner(edges = {}, nodes = {})", self.g.nrows, self.g.ncols)
    }
}

impl HxPreconditioner {
    pub fn new(mesh: &TetMesh, sys: &HxSystem, alpha: &[f64], beta: &[f64]) -> Result<Self> {
        let inv_diag = sys.a.diagonal().iter().map(|d| 1.0 / d).collect();
        let a_s = sys.g.transpose().mul(&sys.a).mul(&sys.g);
        let lap = fem::assemble_weighted(mesh, Space::Z, Kind::Stiffness, alpha)
            .lincomb(1.0, &fem::assemble_weighted(mesh, Space::Z, Kind::Mass, beta), 1.0);
        let lap3 = fem::kron3(&lap);
        let a_v = lap3.submatrix(&sys.free_comp, &sys.free_comp);
        Ok(HxPreconditioner {
            inv_diag,
            g: sys.g.clone(),
            pi: sys.pi.clone(),
            scalar: Cholesky::new(&a_s)?,
            vector: Cholesky::new(&a_v)?,
        })
    }
}

impl Preconditioner for HxPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let s = self.g.matvec(&self.scalar.solve(&self.g.matvec_t(r)));
        let v = self.pi.matvec(&self.vector.solve(&self.pi.matvec_t(r)));
        for i in 0..out.len() {
            out[i] += s[i] + v[i];
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative preconditioned residual `√(rᵀBr) / √(r₀ᵀBr₀)` per iteration,
    /// starting with 1.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg_solve(a: &SparseOperator, b: &[f64], pre: &dyn Preconditioner, tol: f64, maxit: usize) -> PcgOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = pre.apply(&r);
    let mut rz = dot(&r, &z);
    let r0 = rz.max(0.0).sqrt();
    let mut history = vec![1.0];
    if r0 == 0.0 {
        return PcgOutcome { x, iterations: 0, history, converged: true };
    }
    let mut p = z.clone();
    for it in 1..=maxit {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        let rel = rz_new.max(0.0).sqrt() / r0;
        history.push(rel);
        if rel <= tol {
            return PcgOutcome { x, iterations: it, history, converged: true };
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    PcgOutcome { x, iterations: maxit, history, converged: false }
}

/// Assemble the model problem and solve it by PCG with the HX preconditioner
/// and by plain CG.
pub fn solve_both(
    mesh: &TetMesh,
    alpha: &[f64],
    beta: &[f64],
    trace: &FineTrace,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(PcgOutcome, PcgOutcome)> {
    let sys = HxSystem::assemble(mesh, alpha, beta, trace, rhs)?;
    let pre = HxPreconditioner::new(mesh, &sys, alpha, beta)?;
    Ok((pcg_solve(&sys.a, &sys.rhs, &pre, tol, maxit), pcg_solve(&sys.a, &sys.rhs, &Identity, tol, maxit)))
}

/// One solve of the HX study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HxRow {
    pub level: u32,
    pub h: f64,
    /// Coefficient on the jump block (`1` elsewhere).
    pub alpha: f64,
    pub unknowns: usize,
    pub pcg_iterations: usize,
    pub pcg_residual: f64,
    pub pcg_converged: bool,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub cg_converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HxReport {
    pub geometry: String,
    pub gamma: Vec<String>,
    pub seed: u64,
    /// `α = β = 1` across the levels.
    pub levels: Vec<HxRow>,
    /// Fit of the preconditioned iteration counts against `log(1/h)`.
    pub fit: crate::verify::GrowthFit,
    pub fit_pass: bool,
    /// Jump sweep on the finest level.
    pub jumps: Vec<HxRow>,
}

impl HxReport {
    pub fn csv(rows: &[HxRow]) -> String {
        let mut s = String::from(
            "level,h,alpha,unknowns,pcg_iterations,pcg_residual,pcg_converged,cg_iterations,cg_residual,cg_converged\n",
        );
        for r in rows {
            s.push_str(&format!(
                "{},{},{:e},{},{},{:e},{},{},{:e},{}\n",
                r.level,
                r.h,
                r.alpha,
                r.unknowns,
                r.pcg_iterations,
                r.pcg_residual,
                r.pcg_converged,
                r.cg_iterations,
                r.cg_residual,
                r.cg_converged
            ));
        }
        s
    }
}

fn study_row(
    mesh: &TetMesh,
    level: u32,
    trace: &FineTrace,
    jump: (usize, f64),
    beta: f64,
    tol: f64,
    maxit: usize,
    seed: u64,
) -> Result<HxRow> {
    let nb = mesh.complex.blocks.len();
    if jump.0 >= nb {
        return Err(Error::Config(format!("jump block {} out of range ({nb} blocks)", jump.0)));
    }
    let mut alpha = vec![1.0; nb];
    alpha[jump.0] = jump.1;
    let beta = vec![beta; nb];
    let mut rng = crate::decompose::random::rng(seed);
    let rhs: Vec<f64> = (0..mesh.n_edges()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
    let (p, c) = solve_both(mesh, &alpha, &beta, trace, &rhs, tol, maxit)?;
    Ok(HxRow {
        level,
        h: mesh.h,
        alpha: jump.1,
        unknowns: p.x.len(),
        pcg_iterations: p.iterations,
        pcg_residual: *p.history.last().unwrap(),
        pcg_converged: p.converged,
        cg_iterations: c.iterations,
        cg_residual: *c.history.last().unwrap(),
        cg_converged: c.converged,
    })
}

/// `α = β = 1` solves across `levels`, then the jump sweep `alphas` on
/// `jump_block` at the finest level. The right-hand side is a seeded random
/// edge field.
#[allow(clippy::too_many_arguments)]
pub fn hx_study(
    geometry: crate::mesh::GeometryId,
    gamma: &[String],
    levels: &[u32],
    alphas: &[f64],
    jump_block: usize,
    beta: f64,
    tol: f64,
    maxit: usize,
    seed: u64,
) -> Result<HxReport> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    let mut rows = Vec::new();
    let mut finest = None;
    for &k in levels {
        let mesh = TetMesh::catalog(geometry, crate::verify::level_h(k))?;
        let trace = crate::mesh::TraceSet::tag(&mesh, gamma)?;
        rows.push(study_row(&mesh, k, &trace.fine, (jump_block, 1.0), beta, tol, maxit, seed)?);
        finest = Some((k, mesh, trace));
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let its: Vec<f64> = rows.iter().map(|r| r.pcg_iterations as f64).collect();
    let fit = crate::verify::fit_log_growth(&hs, &its)?;
    let (k, mesh, trace) = finest.expect("levels nonempty");
    let jumps = alphas
        .iter()
        .map(|&a| study_row(&mesh, k, &trace.fine, (jump_block, a), beta, tol, maxit, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(HxReport {
        geometry: geometry.as_str().into(),
        gamma: gamma.to_vec(),
        seed,
        fit_pass: crate::verify::verdict(&fit, true),
        fit,
        levels: rows,
        jumps,
    })
}
