use super::{amd_ordering, ichol0, IncompleteCholesky, SparseCsr};
use crate::error::{invalid, Result};

/// Permuted, truncated ichol(0) factorization of a Gauss–Newton matrix.
///
/// Built once per optimization run: AMD moves the structurally nonzero
/// rows/columns to the leading block, the empty rest is dropped, and the
/// leading `ñ × ñ` block is factored with zero fill-in.
#[derive(Debug, Clone)]
pub struct GnFactorization {
    n: usize,
    perm: Vec<usize>,
    active_dim: usize,
    chol: IncompleteCholesky,
}

impl GnFactorization {
    pub fn new(h: &SparseCsr) -> Result<Self> {
        if h.n_rows() != h.n_cols() {
            return invalid("Gauss-Newton matrix must be square");
        }
        let n = h.n_rows();
        let perm = amd_ordering(h);
        let active_dim = (0..n).filter(|&i| !h.row_is_empty(i)).count();
        let block = h.permute_symmetric(&perm).leading_block(active_dim);
        let chol = ichol0(&block)?;
        Ok(Self { n, perm, active_dim, chol })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Size `ñ` of the factored block.
    pub fn active_dim(&self) -> usize {
        self.active_dim
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn cholesky(&self) -> &IncompleteCholesky {
        &self.chol
    }

    /// Approximately solves `H x = rhs`. Entries outside the factored block are zero.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "rhs dimension mismatch");
        let b: Vec<f64> = self.perm[..self.active_dim].iter().map(|&p| rhs[p]).collect();
        let y = self.chol.solve(&b);
        let mut x = vec![0.0; self.n];
        for (k, &p) in self.perm[..self.active_dim].iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Applies the stored factorization to a right-hand side.
pub fn solve_gn_step(fact: &GnFactorization, rhs: &[f64]) -> Vec<f64> {
    fact.solve(rhs)
}
