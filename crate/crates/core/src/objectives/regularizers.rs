use crate::error::{invalid, Result};

/// Image prior added to the data term with weight `α`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Regularizer {
    None,
    /// `½ Σ min(o, 0)²`.
    Penalty,
    /// `½ ‖∇_h o‖²`.
    DiscreteGradient,
    /// `Σ sqrt(|∇_h o|² + eps²)`.
    TotalVariation { eps: f64 },
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::None => "none",
            Regularizer::Penalty => "penalty",
            Regularizer::DiscreteGradient => "grad",
            Regularizer::TotalVariation { .. } => "tv",
        }
    }

    pub fn evaluate(&self, o: &[f64], alpha: f64, rows: usize, cols: usize) -> Result<RegTerm> {
        match *self {
            Regularizer::None => Ok(RegTerm { value: 0.0, gradient: vec![0.0; o.len()], hess: RegHess::Zero }),
            Regularizer::Penalty => Ok(reg_penalty(o, alpha)),
            Regularizer::DiscreteGradient => Ok(reg_discrete_gradient(o, alpha, rows, cols)),
            Regularizer::TotalVariation { eps } => reg_tv(o, alpha, eps, rows, cols),
        }
    }

    pub fn value(&self, o: &[f64], alpha: f64, rows: usize, cols: usize) -> f64 {
        match *self {
            Regularizer::None => 0.0,
            Regularizer::Penalty => 0.5 * alpha * o.iter().map(|&x| x.min(0.0).powi(2)).sum::<f64>(),
            Regularizer::DiscreteGradient => {
                let (gx, gy) = grad_h(o, rows, cols);
                0.5 * alpha * (gx.iter().map(|g| g * g).sum::<f64>() + gy.iter().map(|g| g * g).sum::<f64>())
            }
            Regularizer::TotalVariation { eps } => {
                let (gx, gy) = grad_h(o, rows, cols);
                alpha * gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b + eps * eps).sqrt()).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone)]
enum RegHess {
    Zero,
    Diagonal(Vec<f64>),
    /// `α ∇_hᵀ diag(d) ∇_h`; `d = 1` for the quadratic prior.
    Diffusion { alpha: f64, rows: usize, cols: usize, d: Option<Vec<f64>> },
}

/// Regularizer value, gradient and (approximate) Hessian at one image.
#[derive(Debug, Clone)]
pub struct RegTerm {
    pub value: f64,
    pub gradient: Vec<f64>,
    hess: RegHess,
}

impl RegTerm {
    pub fn hess_action(&self, v: &[f64]) -> Vec<f64> {
        match &self.hess {
            RegHess::Zero => vec![0.0; v.len()],
            RegHess::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
            RegHess::Diffusion { alpha, rows, cols, d } => {
                let (mut gx, mut gy) = grad_h(v, *rows, *cols);
                if let Some(d) = d {
                    gx.iter_mut().zip(d).for_each(|(g, s)| *g *= s);
                    gy.iter_mut().zip(d).for_each(|(g, s)| *g *= s);
                }
                let mut out = grad_h_adjoint(&gx, &gy, *rows, *cols);
                out.iter_mut().for_each(|x| *x *= alpha);
                out
            }
        }
    }
}

/// Forward differences along columns (`gx`) and rows (`gy`); the last
/// difference in each direction is zero.
pub(crate) fn grad_h(o: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(o.len(), rows * cols, "image size mismatch");
    let mut gx = vec![0.0; o.len()];
    let mut gy = vec![0.0; o.len()];
    for r in 0..rows {
        for c in 0..cols {
            let p = r * cols + c;
            if c + 1 < cols {
                gx[p] = o[p + 1] - o[p];
            }
            if r + 1 < rows {
                gy[p] = o[p + cols] - o[p];
            }
        }
    }
    (gx, gy)
}

pub(crate) fn grad_h_adjoint(gx: &[f64], gy: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let p = r * cols + c;
            if c + 1 < cols {
                out[p] -= gx[p];
                out[p + 1] += gx[p];
            }
            if r + 1 < rows {
                out[p] -= gy[p];
                out[p + cols] += gy[p];
            }
        }
    }
    out
}

/// One-sided quadratic penalty on negative pixels.
pub fn reg_penalty(o: &[f64], alpha: f64) -> RegTerm {
    let value = 0.5 * alpha * o.iter().map(|&x| x.min(0.0).powi(2)).sum::<f64>();
    let gradient = o.iter().map(|&x| alpha * x.min(0.0)).collect();
    let diag = o.iter().map(|&x| if x < 0.0 { alpha } else { 0.0 }).collect();
    RegTerm { value, gradient, hess: RegHess::Diagonal(diag) }
}

/// Quadratic smoothness prior with Neumann boundary.
pub fn reg_discrete_gradient(o: &[f64], alpha: f64, rows: usize, cols: usize) -> RegTerm {
    let (gx, gy) = grad_h(o, rows, cols);
    let value = 0.5 * alpha * (gx.iter().map(|g| g * g).sum::<f64>() + gy.iter().map(|g| g * g).sum::<f64>());
    let mut gradient = grad_h_adjoint(&gx, &gy, rows, cols);
    gradient.iter_mut().for_each(|g| *g *= alpha);
    RegTerm { value, gradient, hess: RegHess::Diffusion { alpha, rows, cols, d: None } }
}

/// Smoothed total variation. The Hessian freezes the diffusivity
/// `1/sqrt(|∇_h o|² + eps²)` at `o`.
pub fn reg_tv(o: &[f64], alpha: f64, eps: f64, rows: usize, cols: usize) -> Result<RegTerm> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("TV smoothing must be positive, got {eps}"));
    }
    let (mut gx, mut gy) = grad_h(o, rows, cols);
    let mags: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b + eps * eps).sqrt()).collect();
    let value = alpha * mags.iter().sum::<f64>();
    let d: Vec<f64> = mags.iter().map(|m| 1.0 / m).collect();
    gx.iter_mut().zip(&d).for_each(|(g, s)| *g *= s);
    gy.iter_mut().zip(&d).for_each(|(g, s)| *g *= s);
    let mut gradient = grad_h_adjoint(&gx, &gy, rows, cols);
    gradient.iter_mut().for_each(|g| *g *= alpha);
    Ok(RegTerm { value, gradient, hess: RegHess::Diffusion { alpha, rows, cols, d: Some(d) } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dot, fd_directional, rand_vec};

    #[test]
    fn penalty_examples() {
        let t = reg_penalty(&[1.0, 0.0, 4.0], 3.0);
        assert_eq!(t.value, 0.0);
        assert!(t.gradient.iter().all(|&g| g == 0.0));
        let t = reg_penalty(&[-2.0, 3.0], 5.0);
        assert_eq!(t.value, 10.0);
        assert_eq!(t.gradient, vec![-10.0, 0.0]);
        assert_eq!(t.hess_action(&[1.0, 1.0]), vec![5.0, 0.0]);
    }

    #[test]
    fn discrete_gradient_examples() {
        let t = reg_discrete_gradient(&[4.0; 12], 2.0, 3, 4);
        assert_eq!(t.value, 0.0);
        assert!(t.gradient.iter().all(|&g| g == 0.0));
        let t = reg_discrete_gradient(&[0.0, 1.0], 3.0, 1, 2);
        assert_eq!(t.value, 1.5);
    }

    #[test]
    fn discrete_gradient_hessian_is_five_point_laplacian_inside() {
        let (rows, cols) = (6, 7);
        let v = rand_vec(rows * cols, 1, 1.0);
        let t = reg_discrete_gradient(&vec![0.0; rows * cols], 1.0, rows, cols);
        let hv = t.hess_action(&v);
        for r in 1..rows - 1 {
            for c in 1..cols - 1 {
                let p = r * cols + c;
                let stencil = 4.0 * v[p] - v[p - 1] - v[p + 1] - v[p - cols] - v[p + cols];
                assert!((hv[p] - stencil).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tv_examples() {
        let t = reg_tv(&[2.0; 20], 0.5, 1e-2, 4, 5).unwrap();
        assert!((t.value - 0.5 * 1e-2 * 20.0).abs() < 1e-15);
        assert!(t.gradient.iter().all(|&g| g == 0.0));
        assert!(reg_tv(&[0.0; 4], 1.0, 0.0, 2, 2).is_err());
        assert!(reg_tv(&[0.0; 4], 1.0, -1.0, 2, 2).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (rows, cols) = (5, 6);
        let o = rand_vec(rows * cols, 2, 1.0);
        let dir = rand_vec(rows * cols, 3, 1.0);
        for reg in [Regularizer::Penalty, Regularizer::DiscreteGradient, Regularizer::TotalVariation { eps: 0.1 }] {
            let t = reg.evaluate(&o, 1.7, rows, cols).unwrap();
            assert!((t.value - reg.value(&o, 1.7, rows, cols)).abs() < 1e-12);
            let exact = dot(&t.gradient, &dir);
            let fd = fd_directional(|y| reg.value(y, 1.7, rows, cols), &o, &dir, 1e-6);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{reg:?}: {fd} vs {exact}");
        }
    }

    #[test]
    fn hessians_are_symmetric_psd() {
        let (rows, cols) = (5, 6);
        let o = rand_vec(rows * cols, 4, 1.0);
        for reg in [Regularizer::Penalty, Regularizer::DiscreteGradient, Regularizer::TotalVariation { eps: 0.05 }] {
            let t = reg.evaluate(&o, 2.0, rows, cols).unwrap();
            for s in 0..20 {
                let v = rand_vec(rows * cols, 10 + s, 1.0);
                let w = rand_vec(rows * cols, 50 + s, 1.0);
                assert!((dot(&t.hess_action(&v), &w) - dot(&v, &t.hess_action(&w))).abs() < 1e-10);
                assert!(dot(&v, &t.hess_action(&v)) >= -1e-12);
            }
        }
    }
}
