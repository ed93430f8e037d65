use super::{weighted, Hessian, ObjEval, Objective, Variant};
use crate::bispectrum::{wrap, BispectrumData, BispectrumIndex};
use crate::error::{invalid, Result};
use crate::sparse::{form_normal_matrix, SparseCsr};

/// Objective over the phase unknowns `φ`.
#[derive(Debug, Clone)]
pub struct PhaseProblem<'a> {
    a: &'a SparseCsr,
    beta: &'a [f64],
    weights: &'a [f64],
    variant: Variant,
    include_d2: bool,
    normal: SparseCsr,
}

impl<'a> PhaseProblem<'a> {
    pub fn new(index: &'a BispectrumIndex, data: &'a BispectrumData, variant: Variant) -> Result<Self> {
        Self::from_operator(index.operator(), &data.beta, &data.weights, variant)
    }

    /// Problem for an arbitrary operator `a` with data `beta` and weights.
    pub fn from_operator(a: &'a SparseCsr, beta: &'a [f64], weights: &'a [f64], variant: Variant) -> Result<Self> {
        if beta.len() != a.n_rows() || weights.len() != a.n_rows() {
            return invalid(format!(
                "data has {} phases and {} weights for {} rows",
                beta.len(),
                weights.len(),
                a.n_rows()
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return invalid("weights must be positive and finite");
        }
        let normal = form_normal_matrix(a, weights)?;
        Ok(Self { a, beta, weights, variant, include_d2: false, normal })
    }

    /// Keeps the `D2` diagonal in the E2 Gauss–Newton matrix. Off by default.
    pub fn with_d2(mut self, include: bool) -> Self {
        self.include_d2 = include;
        self
    }

    pub fn operator(&self) -> &'a SparseCsr {
        self.a
    }

    pub fn beta(&self) -> &'a [f64] {
        self.beta
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn include_d2(&self) -> bool {
        self.include_d2
    }

    /// `AᵀWA`.
    pub fn normal_matrix(&self) -> &SparseCsr {
        &self.normal
    }

    /// Value and `∂E/∂(Aφ)` given `θ = Aφ`, plus `d1`, `d2` for E2.
    pub(crate) fn residual_terms(&self, theta: &[f64]) -> (f64, Vec<f64>, Option<(Vec<f64>, Vec<f64>)>) {
        let (beta, w) = (self.beta, self.weights);
        match self.variant {
            Variant::E1 => {
                let r: Vec<f64> = beta.iter().zip(theta).map(|(b, t)| wrap(b - t)).collect();
                let value = 0.5 * r.iter().zip(w).map(|(r, w)| w * r * r).sum::<f64>();
                let dtheta = r.iter().zip(w).map(|(r, w)| -w * r).collect();
                (value, dtheta, None)
            }
            Variant::E2 => {
                let mut value = 0.0;
                let mut d1 = Vec::with_capacity(theta.len());
                let mut d2 = Vec::with_capacity(theta.len());
                for ((&b, &t), &wk) in beta.iter().zip(theta).zip(w) {
                    let (sb, cb) = b.sin_cos();
                    let (st, ct) = t.sin_cos();
                    value += 0.5 * wk * ((cb - ct).powi(2) + (sb - st).powi(2));
                    d1.push(cb * st - sb * ct);
                    d2.push(cb * ct + sb * st);
                }
                let dtheta = weighted(w, &d1);
                (value, dtheta, Some((d1, d2)))
            }
        }
    }

    pub(crate) fn value_at_theta(&self, theta: &[f64]) -> f64 {
        let (beta, w) = (self.beta, self.weights);
        match self.variant {
            Variant::E1 => 0.5 * beta.iter().zip(theta).zip(w).map(|((b, t), w)| w * wrap(b - t).powi(2)).sum::<f64>(),
            Variant::E2 => {
                0.5 * beta
                    .iter()
                    .zip(theta)
                    .zip(w)
                    .map(|((b, t), w)| w * ((b.cos() - t.cos()).powi(2) + (b.sin() - t.sin()).powi(2)))
                    .sum::<f64>()
            }
        }
    }

    /// `Aᵀ W' A v` where `W'` is `W`, or `W D2` when requested.
    pub(crate) fn gn_apply(&self, v: &[f64], d2: Option<&[f64]>) -> Vec<f64> {
        match d2 {
            Some(d2) if self.include_d2 => {
                let a = self.a;
                let av = a.spmv(v);
                let scaled: Vec<f64> = av.iter().zip(self.weights).zip(d2).map(|((x, w), d)| x * w * d).collect();
                a.spmv_transpose(&scaled)
            }
            _ => self.normal.spmv(v),
        }
    }
}

impl Objective for PhaseProblem<'_> {
    fn dim(&self) -> usize {
        self.a.n_cols()
    }

    fn value(&self, phi: &[f64]) -> f64 {
        self.value_at_theta(&self.a.spmv(phi))
    }

    fn eval(&self, phi: &[f64]) -> ObjEval<'_> {
        let a = self.a;
        let theta = a.spmv(phi);
        let (value, dtheta, diag) = self.residual_terms(&theta);
        let gradient = a.spmv_transpose(&dtheta);
        let (d1, d2) = match diag {
            Some((d1, d2)) => (Some(d1), Some(d2)),
            None => (None, None),
        };
        let hessian = match (&d2, self.include_d2) {
            (Some(d2), true) => {
                let d2 = d2.clone();
                Hessian::Operator(Box::new(move |v| self.gn_apply(v, Some(&d2))))
            }
            _ => Hessian::Sparse(&self.normal),
        };
        ObjEval { value, gradient, hessian, d1, d2 }
    }
}

/// E1 at `phi`; `prob` must carry [`Variant::E1`].
pub fn eval_e1_phase<'a>(phi: &[f64], prob: &'a PhaseProblem<'_>) -> ObjEval<'a> {
    debug_assert_eq!(prob.variant(), Variant::E1);
    prob.eval(phi)
}

/// E2 at `phi`; `prob` must carry [`Variant::E2`].
pub fn eval_e2_phase<'a>(phi: &[f64], prob: &'a PhaseProblem<'_>) -> ObjEval<'a> {
    debug_assert_eq!(prob.variant(), Variant::E2);
    prob.eval(phi)
}
