//! Weighted least-squares objectives over phases or pixels, with gradients
//! and Gauss–Newton Hessian actions.

mod image;
mod jacobian;
mod phase;
mod regularizers;

pub use image::{eval_e1_image, eval_e2_image, ImageProblem};
pub use jacobian::{dphi_do_adjoint, dphi_do_forward, phase_of_object, PhaseJacobian};
pub use phase::{eval_e1_phase, eval_e2_phase, PhaseProblem};
pub use regularizers::{reg_discrete_gradient, reg_penalty, reg_tv, RegTerm, Regularizer};

use crate::sparse::SparseCsr;

/// Which residual the objective measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    /// Wrapped phase residual.
    E1,
    /// Residual of the unit phasors `e^{iβ}` and `e^{iAφ}`.
    E2,
}

/// Gauss–Newton Hessian, either assembled or as a matrix-free action.
pub enum Hessian<'a> {
    Sparse(&'a SparseCsr),
    Operator(Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>),
}

impl Hessian<'_> {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Hessian::Sparse(h) => h.spmv(v),
            Hessian::Operator(f) => f(v),
        }
    }

    pub fn as_sparse(&self) -> Option<&SparseCsr> {
        match self {
            Hessian::Sparse(h) => Some(h),
            Hessian::Operator(_) => None,
        }
    }
}

impl std::fmt::Debug for Hessian<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hessian::Sparse(h) => write!(f, "Hessian::Sparse({}x{})", h.n_rows(), h.n_cols()),
            Hessian::Operator(_) => write!(f, "Hessian::Operator"),
        }
    }
}

/// Value, gradient and curvature of an objective at one point.
#[derive(Debug)]
pub struct ObjEval<'a> {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Hessian<'a>,
    /// `cos β ⊙ sin Aφ − sin β ⊙ cos Aφ` (E2 only).
    pub d1: Option<Vec<f64>>,
    /// `cos β ⊙ cos Aφ + sin β ⊙ sin Aφ` (E2 only).
    pub d2: Option<Vec<f64>>,
}

/// A smooth (or almost everywhere smooth) function to minimize.
pub trait Objective {
    /// Number of unknowns.
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> f64;

    fn eval(&self, y: &[f64]) -> ObjEval<'_>;
}

/// Residual weights applied by the data term: `w ⊙ d` for `E1`, or the
/// same scaled by `d2` when the second-order diagonal is kept.
pub(crate) fn weighted(w: &[f64], r: &[f64]) -> Vec<f64> {
    w.iter().zip(r).map(|(a, b)| a * b).collect()
}
