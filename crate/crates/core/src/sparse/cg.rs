use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − Hx‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on a symmetric positive semi-definite operator.
///
/// Stops when `‖r‖ ≤ rel_tol·‖b‖` or after `max_iter` iterations; the latter is
/// reported through `converged = false`, not as an error. A direction of zero
/// curvature on the first iteration returns `b` itself (steepest descent).
pub fn cg_solve<F>(op: F, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    let bnorm = dot(rhs, rhs).sqrt();
    if !bnorm.is_finite() {
        return Err(Error::NumericalBreakdown("non-finite right-hand side".into()));
    }
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = bnorm * bnorm;
    let target = rel_tol * bnorm;
    let mut iterations = 0;
    while iterations < max_iter {
        let hp = op(&p);
        let curv = dot(&p, &hp);
        if !curv.is_finite() {
            return Err(Error::NumericalBreakdown("non-finite curvature in CG".into()));
        }
        if curv <= 0.0 {
            if iterations == 0 {
                return Ok(CgOutcome { x: rhs.to_vec(), iterations: 0, relative_residual: 1.0, converged: false });
            }
            break;
        }
        let alpha = rr / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        iterations += 1;
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(Error::NumericalBreakdown("non-finite residual in CG".into()));
        }
        if rr_new.sqrt() <= target {
            return Ok(CgOutcome { x, iterations, relative_residual: rr_new.sqrt() / bnorm, converged: true });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(CgOutcome { x, iterations, relative_residual: rr.sqrt() / bnorm, converged: false })
}
