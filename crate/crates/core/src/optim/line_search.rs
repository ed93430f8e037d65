use super::{Bounds, OptimizerConfig};
use crate::error::{invalid, Error, Result};
use crate::sparse::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub eta: f64,
    pub backtracks: usize,
    /// Accepted point.
    pub point: Vec<f64>,
    pub value: f64,
}

/// Backtracking search for `E(y + ηp) ≤ E(y) + c η ∇Eᵀp`.
pub fn armijo_search(
    f: &dyn Fn(&[f64]) -> f64,
    y: &[f64],
    p: &[f64],
    grad: &[f64],
    eta0: f64,
    cfg: &OptimizerConfig,
) -> Result<LineSearchResult> {
    search(f, y, f(y), p, dot(grad, p), eta0, None, cfg)
}

/// As [`armijo_search`] with trial points projected onto `bounds` and the
/// projected gradient in the sufficient-decrease term.
#[allow(clippy::too_many_arguments)]
pub fn projected_armijo_search(
    f: &dyn Fn(&[f64]) -> f64,
    y: &[f64],
    p: &[f64],
    proj_grad: &[f64],
    bounds: &Bounds,
    eta0: f64,
    cfg: &OptimizerConfig,
) -> Result<LineSearchResult> {
    search(f, y, f(y), p, dot(proj_grad, p), eta0, Some(bounds), cfg)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn search(
    f: &dyn Fn(&[f64]) -> f64,
    y: &[f64],
    value: f64,
    p: &[f64],
    slope: f64,
    eta0: f64,
    bounds: Option<&Bounds>,
    cfg: &OptimizerConfig,
) -> Result<LineSearchResult> {
    if !(slope < 0.0) {
        return invalid(format!("not a descent direction (slope {slope})"));
    }
    if !(eta0 > 0.0 && eta0.is_finite()) {
        return invalid(format!("initial step must be positive, got {eta0}"));
    }
    let mut eta = eta0;
    let mut trial = vec![0.0; y.len()];
    for backtracks in 0..=cfg.armijo_max_backtracks {
        for ((t, &yi), &pi) in trial.iter_mut().zip(y).zip(p) {
            let x = yi + eta * pi;
            *t = match bounds {
                Some(b) => b.project(x),
                None => x,
            };
        }
        let v = f(&trial);
        if v.is_finite() && v <= value + cfg.armijo_c * eta * slope {
            return Ok(LineSearchResult { eta, backtracks, point: trial, value: v });
        }
        eta *= cfg.armijo_shrink;
    }
    Err(Error::LineSearchFailure(cfg.armijo_max_backtracks))
}

/// Initial step for the next search: doubles after an unshortened step,
/// otherwise keeps the accepted one. `None` on the first iteration gives 1.
pub fn adaptive_eta0(prev: Option<(f64, usize)>) -> f64 {
    match prev {
        None => 1.0,
        Some((eta, 0)) => 2.0 * eta,
        Some((eta, _)) => eta,
    }
}

/// `sqrt(-∇Eᵀp)`.
pub fn newton_decrement(grad: &[f64], p: &[f64]) -> f64 {
    (-dot(grad, p)).max(0.0).sqrt()
}
