use std::time::Instant;

use super::line_search::{adaptive_eta0, search};
use super::{Bounds, GnSolver, IterRecord, Method, OptimizerConfig, RunReport, Termination};
use crate::error::{invalid, Error, Result};
use crate::objectives::{Hessian, Objective};
use crate::sparse::{cg_solve, dot, GnFactorization};

/// Called on every iterate, e.g. to track the relative error against a known truth.
pub type Monitor<'m> = &'m dyn Fn(&[f64]) -> f64;

/// Variables on a bound, the rest, and the scale applied to the bound step.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetState {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub gamma: f64,
}

/// Gradient with components that point out of the box at an active bound zeroed.
pub fn projected_gradient(g: &[f64], y: &[f64], bounds: &Bounds) -> Vec<f64> {
    g.iter()
        .zip(y)
        .map(|(&gi, &yi)| {
            if bounds.at_lower(yi) {
                gi.min(0.0)
            } else if bounds.at_upper(yi) {
                gi.max(0.0)
            } else {
                gi
            }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Projected Gauss–Newton direction: CG on the inactive block, projected
/// gradient on the active one, the latter rescaled by `γ = ‖p_𝓘‖∞ / ‖p_𝒜‖∞`.
pub(crate) fn pgn_direction(
    hessian: &Hessian<'_>,
    g: &[f64],
    pg: &[f64],
    y: &[f64],
    bounds: &Bounds,
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, ActiveSetState, usize)> {
    let is_active: Vec<bool> = y.iter().map(|&x| bounds.at_lower(x) || bounds.at_upper(x)).collect();
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(&is_active).map(|(&x, &a)| if a { 0.0 } else { x }).collect() };
    let rhs: Vec<f64> = mask(g).into_iter().map(|x| -x).collect();
    let (p_i, cg_iters) = if rhs.iter().all(|&x| x == 0.0) {
        (vec![0.0; y.len()], 0)
    } else {
        let out = cg_solve(|v| mask(&hessian.apply(&mask(v))), &rhs, cfg.cg_rel_tol, cfg.cg_max_iter)?;
        (out.x, out.iterations)
    };
    let p_a: Vec<f64> = pg.iter().zip(&is_active).map(|(&x, &a)| if a { -x } else { 0.0 }).collect();
    let (ni, na) = (norm_inf(&p_i), norm_inf(&p_a));
    let gamma = if na == 0.0 {
        0.0
    } else if ni == 0.0 {
        1.0
    } else {
        ni / na
    };
    let p: Vec<f64> = p_i.iter().zip(&p_a).map(|(a, b)| a + gamma * b).collect();
    let active = (0..y.len()).filter(|&i| is_active[i]).collect();
    let inactive = (0..y.len()).filter(|&i| !is_active[i]).collect();
    Ok((p, ActiveSetState { active, inactive, gamma }, cg_iters))
}

struct Lbfgs {
    memory: usize,
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Lbfgs {
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let scale = self.pairs.back().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|x| *x *= scale);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.into_iter().map(|x| -x).collect()
    }

    fn update(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.memory == 0 {
            return;
        }
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }
}

/// Runs `cfg.method` from `y0`.
pub fn minimize(obj: &dyn Objective, y0: &[f64], cfg: &OptimizerConfig, monitor: Option<Monitor>) -> Result<(Vec<f64>, RunReport)> {
    cfg.validate()?;
    let n = obj.dim();
    if y0.len() != n {
        return invalid(format!("initial point has {} entries, expected {n}", y0.len()));
    }
    let bounds = if cfg.method.is_projected() { cfg.bounds } else { None };
    if let Some(b) = &bounds {
        if let Some(x) = y0.iter().find(|&&x| !b.contains(x)) {
            return invalid(format!("initial point infeasible: {x} outside [{}, {}]", b.lower, b.upper));
        }
    }
    let start = Instant::now();
    let mut y = y0.to_vec();
    let mut ev = obj.eval(&y);
    if !ev.value.is_finite() || ev.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalBreakdown("objective not finite at the initial point".into()));
    }
    let e0 = ev.value;
    let rof = |v: f64| if e0 != 0.0 { v / e0 } else { 1.0 };
    let mut records = vec![IterRecord {
        iter: 0,
        objective: e0,
        rof: 1.0,
        re: monitor.map(|m| m(&y)),
        step_norm: 0.0,
        ls_iters: 0,
        cum_seconds: start.elapsed().as_secs_f64(),
    }];

    let mut factorization: Option<GnFactorization> = None;
    let mut factorizations = 0;
    let mut cg_iterations = 0;
    let mut lbfgs = Lbfgs { memory: cfg.lbfgs_memory, pairs: Default::default() };
    let mut prev_step: Option<(f64, usize)> = None;

    let termination = loop {
        if records.len() > cfg.max_iter {
            break Termination::MaxIter;
        }
        let g = &ev.gradient;
        let pg = match &bounds {
            Some(b) => projected_gradient(g, &y, b),
            None => g.clone(),
        };
        let mut any_active = false;
        let mut p = match cfg.method {
            Method::GD | Method::PGD => pg.iter().map(|x| -x).collect(),
            Method::LBFGS => lbfgs.direction(g),
            Method::GN => match (cfg.gn_solver, ev.hessian.as_sparse()) {
                (GnSolver::Auto, Some(h)) => {
                    if factorization.is_none() {
                        factorization = Some(GnFactorization::new(h)?);
                        factorizations += 1;
                    }
                    let x = factorization.as_ref().expect("factored above").solve(g);
                    x.into_iter().map(|v| -v).collect()
                }
                _ => {
                    let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
                    let out = cg_solve(|v| ev.hessian.apply(v), &rhs, cfg.cg_rel_tol, cfg.cg_max_iter)?;
                    cg_iterations += out.iterations;
                    out.x
                }
            },
            Method::PGN => {
                let b = bounds.as_ref().expect("validated");
                let (p, state, it) = pgn_direction(&ev.hessian, g, &pg, &y, b, cfg)?;
                any_active = !state.active.is_empty();
                cg_iterations += it;
                p
            }
        };
        let mut slope = dot(&pg, &p);
        if !(slope < 0.0) {
            // inexact curvature can fail to give descent; fall back to steepest descent
            p = pg.iter().map(|x| -x).collect();
            slope = -dot(&pg, &pg);
            if !(slope < 0.0) {
                break Termination::ObjAndStep;
            }
        }
        let newton_type = matches!(cfg.method, Method::GN | Method::PGN);
        if newton_type && (-slope).sqrt() <= cfg.tol_newton_decrement * e0.abs().sqrt() {
            break Termination::Decrement;
        }
        let first_cauchy = !newton_type && !(cfg.method == Method::LBFGS && !lbfgs.pairs.is_empty()) && prev_step.is_none();
        let eta0 = if first_cauchy {
            cauchy_step(&ev.hessian, &p, slope)
        } else if newton_type || (cfg.method == Method::LBFGS && !lbfgs.pairs.is_empty()) {
            1.0
        } else {
            adaptive_eta0(prev_step)
        };
        let f = |x: &[f64]| obj.value(x);
        let mut ls = search(&f, &y, ev.value, &p, slope, eta0, bounds.as_ref(), cfg);
        if first_cauchy {
            // the quadratic model can badly underestimate the first step; expand while it pays
            let single = OptimizerConfig { armijo_max_backtracks: 0, ..cfg.clone() };
            while let Ok(best) = &ls {
                if best.backtracks > 0 || best.eta > 1e30 {
                    break;
                }
                match search(&f, &y, ev.value, &p, slope, 2.0 * best.eta, bounds.as_ref(), &single) {
                    Ok(t) if t.value < best.value => ls = Ok(t),
                    _ => break,
                }
            }
        }
        let clipped = |pt: &[f64], eta: f64| pt.iter().zip(&y).zip(&p).any(|((a, b), d)| *a != b + eta * d);
        let ls = if cfg.method == Method::PGN && (any_active || ls.as_ref().map_or(true, |r| clipped(&r.point, r.eta))) {
            // with bounds in play the γ-scaled step can be poor; keep the projected Cauchy point if it does better
            let q: Vec<f64> = pg.iter().map(|x| -x).collect();
            let qslope = -dot(&pg, &pg);
            let eta_c = cauchy_step(&ev.hessian, &q, qslope);
            let cauchy = search(&f, &y, ev.value, &q, qslope, eta_c, bounds.as_ref(), cfg);
            match (ls, cauchy) {
                (Ok(a), Ok(b)) => Ok(if b.value < a.value { b } else { a }),
                (Ok(a), Err(_)) => Ok(a),
                (Err(_), Ok(b)) => Ok(b),
                (Err(e), Err(_)) => Err(e),
            }
        } else {
            ls
        };
        let ls = match ls {
            Ok(r) => r,
            Err(Error::LineSearchFailure(_)) => break Termination::LineSearchFailure,
            Err(e) => return Err(e),
        };
        prev_step = Some((ls.eta, ls.backtracks));
        let diff: Vec<f64> = ls.point.iter().zip(&y).map(|(a, b)| a - b).collect();
        let step_norm = norm(&diff);
        let y_norm = norm(&y);
        let decrease = ev.value - ls.value;
        let new_ev = obj.eval(&ls.point);
        if new_ev.gradient.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("non-finite gradient at iteration {}", records.len())));
        }
        if cfg.method == Method::LBFGS {
            let dg = new_ev.gradient.iter().zip(&ev.gradient).map(|(a, b)| a - b).collect();
            lbfgs.update(diff, dg);
        }
        y = ls.point;
        ev = new_ev;
        records.push(IterRecord {
            iter: records.len(),
            objective: ev.value,
            rof: rof(ev.value),
            re: monitor.map(|m| m(&y)),
            step_norm,
            ls_iters: ls.backtracks,
            cum_seconds: start.elapsed().as_secs_f64(),
        });
        if decrease.abs() <= cfg.tol_obj_change * e0.abs() && step_norm <= cfg.tol_step_norm * (1.0 + y_norm) {
            break Termination::ObjAndStep;
        }
    };
    let kkt = match &bounds {
        Some(b) => norm_inf(&projected_gradient(&ev.gradient, &y, b)),
        None => norm_inf(&ev.gradient),
    };
    drop(ev);
    let report = RunReport { records, termination, factorizations, cg_iterations, final_kkt_residual: kkt };
    Ok((y, report))
}

/// Minimizer of the quadratic model along `p`, or 1 without positive curvature.
fn cauchy_step(h: &Hessian<'_>, p: &[f64], slope: f64) -> f64 {
    let curv = dot(p, &h.apply(p));
    let eta = -slope / curv;
    if curv > 0.0 && eta.is_finite() && eta > 0.0 {
        eta
    } else {
        1.0
    }
}

fn with_method(cfg: &OptimizerConfig, method: Method) -> OptimizerConfig {
    OptimizerConfig { method, ..cfg.clone() }
}

pub fn gradient_descent(obj: &dyn Objective, y0: &[f64], cfg: &OptimizerConfig, monitor: Option<Monitor>) -> Result<(Vec<f64>, RunReport)> {
    minimize(obj, y0, &with_method(cfg, Method::GD), monitor)
}

pub fn projected_gradient_descent(
    obj: &dyn Objective,
    bounds: Bounds,
    y0: &[f64],
    cfg: &OptimizerConfig,
    monitor: Option<Monitor>,
) -> Result<(Vec<f64>, RunReport)> {
    let cfg = OptimizerConfig { bounds: Some(bounds), ..with_method(cfg, Method::PGD) };
    minimize(obj, y0, &cfg, monitor)
}

pub fn lbfgs(obj: &dyn Objective, y0: &[f64], cfg: &OptimizerConfig, monitor: Option<Monitor>) -> Result<(Vec<f64>, RunReport)> {
    minimize(obj, y0, &with_method(cfg, Method::LBFGS), monitor)
}

pub fn gauss_newton(obj: &dyn Objective, y0: &[f64], cfg: &OptimizerConfig, monitor: Option<Monitor>) -> Result<(Vec<f64>, RunReport)> {
    minimize(obj, y0, &with_method(cfg, Method::GN), monitor)
}

pub fn projected_gauss_newton(
    obj: &dyn Objective,
    bounds: Bounds,
    y0: &[f64],
    cfg: &OptimizerConfig,
    monitor: Option<Monitor>,
) -> Result<(Vec<f64>, RunReport)> {
    let cfg = OptimizerConfig { bounds: Some(bounds), ..with_method(cfg, Method::PGN) };
    minimize(obj, y0, &cfg, monitor)
}
