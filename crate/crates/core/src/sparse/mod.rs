//! Sparse kernels behind the Gauss–Newton step: CSR storage, the weighted
//! normal matrix, AMD ordering, ichol(0), triangular solves and CG.

mod amd;
mod cg;
mod csr;
mod factor;
mod ichol;

pub use amd::{amd_ordering, symbolic_cholesky_nnz};
pub use cg::{cg_solve, CgOutcome};
#[allow(unused_imports)]
pub(crate) use cg::dot;
pub use csr::{form_normal_matrix, SparseCsr};
pub use factor::{solve_gn_step, GnFactorization};
pub use ichol::{backward_substitute, forward_substitute, ichol0, pattern_residual, IncompleteCholesky};
