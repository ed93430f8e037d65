use super::driver::pgn_direction;
use super::*;
use crate::objectives::{Hessian, ObjEval, Objective};
use crate::sparse::{form_normal_matrix, SparseCsr};
use crate::testutil::{dot, rand_vec};

/// `½ yᵀHy − bᵀy`.
struct Quadratic {
    h: SparseCsr,
    b: Vec<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        0.5 * dot(y, &self.h.spmv(y)) - dot(&self.b, y)
    }
    fn eval(&self, y: &[f64]) -> ObjEval<'_> {
        let hy = self.h.spmv(y);
        let gradient = hy.iter().zip(&self.b).map(|(a, b)| a - b).collect();
        ObjEval { value: self.value(y), gradient, hessian: Hessian::Sparse(&self.h), d1: None, d2: None }
    }
}

/// `½‖My − b‖²`.
struct LinearResidual {
    m: SparseCsr,
    b: Vec<f64>,
    normal: SparseCsr,
}

impl LinearResidual {
    fn new(m: SparseCsr, b: Vec<f64>) -> Self {
        let normal = form_normal_matrix(&m, &vec![1.0; m.n_rows()]).unwrap();
        Self { m, b, normal }
    }
}

impl Objective for LinearResidual {
    fn dim(&self) -> usize {
        self.m.n_cols()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let r: Vec<f64> = self.m.spmv(y).iter().zip(&self.b).map(|(a, b)| a - b).collect();
        0.5 * dot(&r, &r)
    }
    fn eval(&self, y: &[f64]) -> ObjEval<'_> {
        let r: Vec<f64> = self.m.spmv(y).iter().zip(&self.b).map(|(a, b)| a - b).collect();
        ObjEval { value: 0.5 * dot(&r, &r), gradient: self.m.spmv_transpose(&r), hessian: Hessian::Sparse(&self.normal), d1: None, d2: None }
    }
}

fn dense(rows: &[Vec<f64>]) -> SparseCsr {
    let n_cols = rows[0].len();
    let e = rows.iter().enumerate().flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v)));
    SparseCsr::from_triplets(rows.len(), n_cols, e).unwrap()
}

fn random_spd(n: usize, seed: u64, shift: f64) -> SparseCsr {
    let g = rand_vec(n * n, seed, 1.0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>() + if i == j { shift } else { 0.0 }).collect())
        .collect();
    dense(&rows)
}

fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| r.iter().copied().chain([bi]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (m[r][n] - (r + 1..n).map(|k| m[r][k] * x[k]).sum::<f64>()) / m[r][r];
    }
    x
}

/// Minimizer of `½yᵀHy − bᵀy` over `y ≥ 0`, by enumerating every free set.
fn exhaustive_qp(h: &SparseCsr, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let hd = h.to_dense();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let mut y = vec![0.0; n];
        if !free.is_empty() {
            let sub: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| hd[i][j]).collect()).collect();
            let rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
            for (k, v) in solve_dense(&sub, &rhs).into_iter().enumerate() {
                y[free[k]] = v;
            }
        }
        if y.iter().any(|&v| v < 0.0) {
            continue;
        }
        let g: Vec<f64> = h.spmv(&y).iter().zip(b).map(|(a, c)| a - c).collect();
        if (0..n).any(|i| !free.contains(&i) && g[i] < -1e-12) {
            continue;
        }
        let val = 0.5 * dot(&y, &h.spmv(&y)) - dot(b, &y);
        if best.as_ref().is_none_or(|(v, _)| val < *v) {
            best = Some((val, y));
        }
    }
    best.unwrap().1
}

fn tight(method: Method) -> OptimizerConfig {
    OptimizerConfig {
        max_iter: 500,
        tol_obj_change: 0.0,
        tol_step_norm: 0.0,
        tol_newton_decrement: 1e-14,
        cg_rel_tol: 1e-12,
        cg_max_iter: 200,
        ..OptimizerConfig::for_method(method)
    }
}

#[test]
fn gn_solves_linear_residual_in_one_step() {
    let m = dense(&[vec![2.0, 1.0, 0.0], vec![0.0, 1.0, -1.0], vec![1.0, 0.0, 3.0], vec![1.0, 1.0, 1.0]]);
    let prob = LinearResidual::new(m, vec![1.0, -2.0, 0.5, 3.0]);
    let (y, rep) = gauss_newton(&prob, &[0.0; 3], &tight(Method::GN), None).unwrap();
    assert_eq!(rep.iterations(), 1);
    assert_eq!(rep.factorizations, 1);
    assert_eq!(rep.termination, Termination::Decrement);
    let normal = prob.normal.to_dense();
    let rhs = prob.m.spmv_transpose(&prob.b);
    let exact = solve_dense(&normal, &rhs);
    assert!(y.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn decrement_squared_is_inverse_hessian_norm() {
    let h = random_spd(6, 1, 1.0);
    let g = rand_vec(6, 2, 1.0);
    let hinv_g = solve_dense(&h.to_dense(), &g);
    let p: Vec<f64> = hinv_g.iter().map(|x| -x).collect();
    let lam = newton_decrement(&g, &p);
    assert!((lam * lam - dot(&g, &hinv_g)).abs() < 1e-12 * dot(&g, &hinv_g));
}

#[test]
fn pgn_matches_exhaustive_qp() {
    for seed in 0..8 {
        let n = 4 + (seed as usize % 7);
        let h = random_spd(n, 100 + seed, 0.5);
        let b = rand_vec(n, 200 + seed, 2.0);
        let prob = Quadratic { h: h.clone(), b: b.clone() };
        let (y, rep) = projected_gauss_newton(&prob, Bounds::NONNEGATIVE, &vec![1.0; n], &tight(Method::PGN), None).unwrap();
        let oracle = exhaustive_qp(&h, &b);
        let err = y.iter().zip(&oracle).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        assert!(err < 1e-6, "seed {seed}: {y:?} vs {oracle:?} ({:?})", rep.termination);
        assert!(rep.final_kkt_residual < 1e-6);
    }
}

#[test]
fn pgn_without_active_bounds_is_gauss_newton_with_cg() {
    let h = random_spd(8, 7, 2.0);
    let x_star = vec![5.0; 8];
    let b = h.spmv(&x_star);
    let prob = Quadratic { h, b };
    let y0: Vec<f64> = rand_vec(8, 8, 1.0).iter().map(|v| 5.0 + v).collect();
    let cfg = OptimizerConfig { cg_rel_tol: 0.3, cg_max_iter: 2, gn_solver: GnSolver::Cg, ..tight(Method::GN) };
    let (ya, ra) = gauss_newton(&prob, &y0, &cfg, None).unwrap();
    let (yb, rb) = projected_gauss_newton(&prob, Bounds::NONNEGATIVE, &y0, &cfg, None).unwrap();
    assert_eq!(ya, yb);
    let objs = |r: &RunReport| r.records.iter().map(|x| x.objective).collect::<Vec<_>>();
    assert_eq!(objs(&ra), objs(&rb));
    assert!(ra.iterations() > 1);
}

#[test]
fn pinned_variables_take_projected_gradient_step() {
    let h = random_spd(5, 9, 1.0);
    let prob = Quadratic { h, b: vec![3.0; 5] };
    let y = vec![0.0; 5];
    let ev = prob.eval(&y);
    let b = Bounds::NONNEGATIVE;
    let pg = projected_gradient(&ev.gradient, &y, &b);
    assert!(ev.gradient.iter().all(|&g| g < 0.0));
    let (p, state, _) = pgn_direction(&ev.hessian, &ev.gradient, &pg, &y, &b, &OptimizerConfig::for_method(Method::PGN)).unwrap();
    assert_eq!(state.active.len(), 5);
    assert!(state.inactive.is_empty());
    assert_eq!(state.gamma, 1.0);
    assert_eq!(p, pg.iter().map(|x| -x).collect::<Vec<_>>());
}

#[test]
fn projected_methods_stay_feasible() {
    let h = random_spd(10, 11, 0.5);
    let b = rand_vec(10, 12, 3.0);
    let prob = Quadratic { h, b };
    let check = |y: &[f64]| {
        assert!(y.iter().all(|&v| v >= 0.0));
        0.0
    };
    for method in [Method::PGD, Method::PGN] {
        let cfg = OptimizerConfig { max_iter: 60, ..tight(method) };
        let (y, _) = minimize(&prob, &[0.5; 10], &cfg, Some(&check)).unwrap();
        assert!(y.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let prob = Quadratic { h: SparseCsr::identity(2), b: vec![1.0, 1.0] };
    assert!(projected_gauss_newton(&prob, Bounds::NONNEGATIVE, &[-1.0, 1.0], &OptimizerConfig::default(), None).is_err());
    assert!(gauss_newton(&prob, &[1.0], &OptimizerConfig::default(), None).is_err());
}

#[test]
fn all_methods_decrease_monotonically_and_agree() {
    let h = random_spd(6, 13, 1.0);
    let b = rand_vec(6, 14, 1.0);
    let prob = Quadratic { h: h.clone(), b: b.clone() };
    let exact = solve_dense(&h.to_dense(), &b);
    for method in [Method::GD, Method::LBFGS, Method::GN] {
        let cfg = OptimizerConfig { max_iter: 5000, ..tight(method) };
        let (y, rep) = minimize(&prob, &[0.0; 6], &cfg, None).unwrap();
        assert!(rep.records.windows(2).all(|w| w[1].objective <= w[0].objective), "{method}");
        let err = y.iter().zip(&exact).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        assert!(err < 1e-4, "{method}: {err}");
    }
}

#[test]
fn lbfgs_beats_gradient_descent_on_ill_conditioned_quadratic() {
    let diag: Vec<(usize, usize, f64)> = (0..20).map(|i| (i, i, 1.0 + 10.0 * i as f64)).collect();
    let prob = Quadratic { h: SparseCsr::from_triplets(20, 20, diag).unwrap(), b: vec![1.0; 20] };
    let cfg = OptimizerConfig { max_iter: 2000, tol_obj_change: 1e-12, tol_step_norm: 1e-10, ..OptimizerConfig::default() };
    let (_, gd) = gradient_descent(&prob, &[0.0; 20], &cfg, None).unwrap();
    let (_, lb) = lbfgs(&prob, &[0.0; 20], &cfg, None).unwrap();
    assert!(lb.iterations() < gd.iterations(), "{} vs {}", lb.iterations(), gd.iterations());
}

#[test]
fn lbfgs_without_memory_is_gradient_descent() {
    let prob = Quadratic { h: random_spd(5, 15, 1.0), b: rand_vec(5, 16, 1.0) };
    let cfg = OptimizerConfig { max_iter: 30, lbfgs_memory: 0, ..tight(Method::LBFGS) };
    let (ya, _) = gradient_descent(&prob, &[0.0; 5], &cfg, None).unwrap();
    let (yb, _) = lbfgs(&prob, &[0.0; 5], &cfg, None).unwrap();
    assert_eq!(ya, yb);
}

#[test]
fn runs_are_deterministic() {
    let prob = Quadratic { h: random_spd(7, 17, 1.0), b: rand_vec(7, 18, 1.0) };
    for method in Method::ALL {
        let cfg = OptimizerConfig { max_iter: 20, ..OptimizerConfig::for_method(method) };
        let (ya, ra) = minimize(&prob, &[0.5; 7], &cfg, None).unwrap();
        let (yb, rb) = minimize(&prob, &[0.5; 7], &cfg, None).unwrap();
        assert_eq!(ya, yb);
        let strip = |r: &RunReport| r.records.iter().map(|x| (x.objective, x.step_norm, x.ls_iters)).collect::<Vec<_>>();
        assert_eq!(strip(&ra), strip(&rb));
        assert_eq!(ra.termination, rb.termination);
    }
}

#[test]
fn rof_starts_at_one_and_monitor_is_recorded() {
    let prob = Quadratic { h: random_spd(4, 19, 1.0), b: rand_vec(4, 20, 1.0) };
    let mon = |y: &[f64]| y[0];
    let (_, rep) = lbfgs(&prob, &[1.0; 4], &OptimizerConfig::default(), Some(&mon)).unwrap();
    assert_eq!(rep.records[0].rof, 1.0);
    assert_eq!(rep.records[0].re, Some(1.0));
    assert!(rep.records.iter().all(|r| r.re.is_some()));
}
