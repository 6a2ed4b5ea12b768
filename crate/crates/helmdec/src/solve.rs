//! Sparse Cholesky factorizations and Dirichlet-constrained solves.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

static SEQUENTIAL: Once = Once::new();

/// Factorizations run sequentially so that roundoff is reproducible.
fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Cholesky factor of a symmetric positive definite sparse matrix.
pub struct Cholesky {
    n: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Cholesky(n = {})", self.n)
    }
}

impl Cholesky {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        ensure_sequential();
        let n = a.nrows;
        let mut t = Vec::with_capacity(a.nnz());
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    t.push(Triplet::new(r, c, v));
                }
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let llt = m.sp_cholesky(Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
        Ok(Cholesky { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    /// Solve for several right-hand sides at once.
    pub fn solve_many(&self, bs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if bs.is_empty() {
            return vec![];
        }
        let mut m = Mat::<f64>::from_fn(self.n, bs.len(), |i, j| bs[j][i]);
        self.llt.solve_in_place(m.as_mut());
        (0..bs.len()).map(|j| (0..self.n).map(|i| m[(i, j)]).collect()).collect()
    }
}

/// A symmetric operator with a fixed set of constrained (Dirichlet) indices,
/// factored on the free indices.
#[derive(Debug)]
pub struct ConstrainedSolver {
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    chol: Option<Cholesky>,
    coupling: SparseOperator,
}

impl ConstrainedSolver {
    pub fn new(a: &SparseOperator, constrained: &[bool]) -> Result<Self> {
        let free: Vec<usize> = (0..a.nrows).filter(|&i| !constrained[i]).collect();
        let fixed: Vec<usize> = (0..a.nrows).filter(|&i| constrained[i]).collect();
        let chol = if free.is_empty() { None } else { Some(Cholesky::new(&a.submatrix(&free, &free))?) };
        let coupling = a.submatrix(&free, &fixed);
        Ok(ConstrainedSolver { free, fixed, chol, coupling })
    }

    /// Solve `A x = b` on the free indices with `x = g` on the constrained
    /// ones (`b` is a full-length right-hand side; its constrained rows are
    /// ignored).
    pub fn solve(&self, b: &[f64], g: &[f64]) -> Vec<f64> {
        self.solve_many(&[b.to_vec()], &[g.to_vec()]).pop().unwrap()
    }

    pub fn solve_many(&self, bs: &[Vec<f64>], gs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs: Vec<Vec<f64>> = bs
            .iter()
            .zip(gs)
            .map(|(b, g)| {
                let gf: Vec<f64> = self.fixed.iter().map(|&i| g[i]).collect();
                let cg = self.coupling.matvec(&gf);
                self.free.iter().enumerate().map(|(k, &i)| b[i] - cg[k]).collect()
            })
            .collect();
        let sol = match &self.chol {
            Some(c) => c.solve_many(&rhs),
            None => rhs.iter().map(|_| vec![]).collect(),
        };
        sol.into_iter()
            .zip(gs)
            .map(|(xf, g)| {
                let mut x = g.clone();
                for (k, &i) in self.free.iter().enumerate() {
                    x[i] = xf[k];
                }
                for &i in &self.fixed {
                    x[i] = g[i];
                }
                x
            })
            .collect()
    }
}
