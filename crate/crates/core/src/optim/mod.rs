//! Gauss–Newton, projected Gauss–Newton, gradient descent, projected
//! gradient descent and L-BFGS with backtracking Armijo line searches.

mod config;
mod driver;
mod line_search;
mod report;

pub use config::{Bounds, GnSolver, Method, OptimizerConfig};
pub use driver::{
    gauss_newton, gradient_descent, lbfgs, minimize, projected_gauss_newton, projected_gradient, projected_gradient_descent,
    ActiveSetState, Monitor,
};
pub use line_search::{adaptive_eta0, armijo_search, newton_decrement, projected_armijo_search, LineSearchResult};
pub use report::{IterRecord, RunReport, Termination};

#[cfg(test)]
mod tests;
