use super::jacobian::{phase_of_object, PhaseJacobian};
use super::phase::PhaseProblem;
use super::regularizers::Regularizer;
use super::{Hessian, ObjEval, Objective, Variant};
use crate::bispectrum::{BispectrumData, BispectrumIndex, PhaseIndexMap};
use crate::error::{invalid, Result};
use crate::fft::Fft2;

/// Objective over the pixels `o`: `E(φ(o)) + α R(o)`.
#[derive(Debug, Clone)]
pub struct ImageProblem<'a> {
    phase: PhaseProblem<'a>,
    map: &'a PhaseIndexMap,
    modulus: &'a [f64],
    fft: Fft2,
    regularizer: Regularizer,
    alpha: f64,
}

impl<'a> ImageProblem<'a> {
    pub fn new(
        index: &'a BispectrumIndex,
        data: &'a BispectrumData,
        variant: Variant,
        regularizer: Regularizer,
        alpha: f64,
    ) -> Result<Self> {
        Self::from_phase_problem(PhaseProblem::new(index, data, variant)?, index.map(), &data.modulus, regularizer, alpha)
    }

    pub fn from_phase_problem(
        phase: PhaseProblem<'a>,
        map: &'a PhaseIndexMap,
        modulus: &'a [f64],
        regularizer: Regularizer,
        alpha: f64,
    ) -> Result<Self> {
        if phase.operator().n_cols() != map.len() {
            return invalid("operator columns do not match the phase map");
        }
        let side = map.image_side();
        if modulus.len() != side * side || modulus.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return invalid("modulus must be a nonnegative N x N grid");
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return invalid(format!("regularization weight must be nonnegative, got {alpha}"));
        }
        if let Regularizer::TotalVariation { eps } = regularizer {
            if !(eps > 0.0 && eps.is_finite()) {
                return invalid(format!("TV smoothing must be positive, got {eps}"));
            }
        }
        Ok(Self { phase, map, modulus, fft: Fft2::new(side), regularizer, alpha })
    }

    pub fn phase_problem(&self) -> &PhaseProblem<'a> {
        &self.phase
    }

    pub fn modulus(&self) -> &'a [f64] {
        self.modulus
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn image_side(&self) -> usize {
        self.map.image_side()
    }

    /// Data term only, without the regularizer.
    pub fn data_value(&self, o: &[f64]) -> f64 {
        let phi = phase_of_object(o, self.map, &self.fft);
        self.phase.value_at_theta(&self.phase.operator().spmv(&phi))
    }
}

impl Objective for ImageProblem<'_> {
    fn dim(&self) -> usize {
        let n = self.map.image_side();
        n * n
    }

    fn value(&self, o: &[f64]) -> f64 {
        let n = self.map.image_side();
        self.data_value(o) + self.regularizer.value(o, self.alpha, n, n)
    }

    fn eval(&self, o: &[f64]) -> ObjEval<'_> {
        let n = self.map.image_side();
        let jac = PhaseJacobian::new(o, self.map, &self.fft);
        let a = self.phase.operator();
        let theta = a.spmv(jac.phases());
        let (data_value, dtheta, diag) = self.phase.residual_terms(&theta);
        let reg = self
            .regularizer
            .evaluate(o, self.alpha, n, n)
            .expect("regularizer parameters validated at construction");
        let mut gradient = jac.adjoint(&a.spmv_transpose(&dtheta));
        gradient.iter_mut().zip(&reg.gradient).for_each(|(g, r)| *g += r);
        let value = data_value + reg.value;
        let (d1, d2) = match diag {
            Some((d1, d2)) => (Some(d1), Some(d2)),
            None => (None, None),
        };
        let d2_hess = if self.phase.include_d2() { d2.clone() } else { None };
        let phase = &self.phase;
        let hessian = Hessian::Operator(Box::new(move |v: &[f64]| {
            let mut out = jac.adjoint(&phase.gn_apply(&jac.forward(v), d2_hess.as_deref()));
            out.iter_mut().zip(reg.hess_action(v)).for_each(|(x, r)| *x += r);
            out
        }));
        ObjEval { value, gradient, hessian, d1, d2 }
    }
}

/// E1 image objective at `o`; `prob` must carry [`Variant::E1`].
pub fn eval_e1_image<'a>(o: &[f64], prob: &'a ImageProblem<'_>) -> ObjEval<'a> {
    debug_assert_eq!(prob.phase_problem().variant(), Variant::E1);
    prob.eval(o)
}

/// E2 image objective at `o`; `prob` must carry [`Variant::E2`].
pub fn eval_e2_image<'a>(o: &[f64], prob: &'a ImageProblem<'_>) -> ObjEval<'a> {
    debug_assert_eq!(prob.phase_problem().variant(), Variant::E2);
    prob.eval(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bispectrum::{accumulate_bispectrum, build_index, build_phase_map, wrap};
    use crate::testutil::{dot, fd_directional, rand_vec};

    const SIDE: usize = 16;

    fn setup(seed: u64) -> (BispectrumIndex, Vec<f64>) {
        let idx = build_index(build_phase_map(SIDE, 6.0).unwrap(), 3.0).unwrap();
        let o: Vec<f64> = rand_vec(SIDE * SIDE, seed, 1.0).iter().map(|x| 2.0 + x).collect();
        (idx, o)
    }

    fn data_for(idx: &BispectrumIndex, o: &[f64]) -> BispectrumData {
        let fft = Fft2::new(SIDE);
        accumulate_bispectrum(&[fft.forward_real(o)], idx).unwrap()
    }

    #[test]
    fn zero_residual_at_true_object() {
        let (idx, o) = setup(1);
        let data = data_for(&idx, &o);
        for variant in [Variant::E1, Variant::E2] {
            let p = ImageProblem::new(&idx, &data, variant, Regularizer::None, 0.0).unwrap();
            let e = p.eval(&o);
            assert!(e.value < 1e-20, "{variant:?}: {}", e.value);
            assert!(e.gradient.iter().all(|g| g.abs() < 1e-9));
        }
    }

    #[test]
    fn hessian_action_is_symmetric() {
        let (idx, o) = setup(2);
        let (_, other) = setup(3);
        let data = data_for(&idx, &other);
        for (variant, reg) in [
            (Variant::E1, Regularizer::Penalty),
            (Variant::E2, Regularizer::TotalVariation { eps: 0.01 }),
            (Variant::E2, Regularizer::DiscreteGradient),
        ] {
            let p = ImageProblem::new(&idx, &data, variant, reg, 0.3).unwrap();
            let e = p.eval(&o);
            for s in 0..5 {
                let v = rand_vec(SIDE * SIDE, 10 + s, 1.0);
                let w = rand_vec(SIDE * SIDE, 20 + s, 1.0);
                let (hv, hw) = (e.hessian.apply(&v), e.hessian.apply(&w));
                let scale = dot(&hv, &hv).sqrt() * dot(&w, &w).sqrt();
                assert!((dot(&hv, &w) - dot(&v, &hw)).abs() <= 1e-10 * scale);
                assert!(dot(&v, &hv) >= -1e-10 * scale);
            }
        }
    }

    #[test]
    fn e2_gradient_matches_finite_differences() {
        let (idx, o) = setup(4);
        let (_, other) = setup(5);
        let data = data_for(&idx, &other);
        let p = ImageProblem::new(&idx, &data, Variant::E2, Regularizer::TotalVariation { eps: 0.05 }, 0.2).unwrap();
        let dir = rand_vec(SIDE * SIDE, 6, 1.0);
        let exact = dot(&p.eval(&o).gradient, &dir);
        let e1 = (fd_directional(|y| p.value(y), &o, &dir, 1e-3) - exact).abs();
        let e2 = (fd_directional(|y| p.value(y), &o, &dir, 1e-4) - exact).abs();
        assert!(e2 < 1e-6 * exact.abs().max(1.0), "{e2} vs {exact}");
        assert!(e2 < e1 * 0.05 || e2 < 1e-9);
    }

    #[test]
    fn e1_gradient_matches_finite_differences_off_wraps() {
        let (idx, o) = setup(7);
        let fft = Fft2::new(SIDE);
        let theta = idx.operator().spmv(&phase_of_object(&o, idx.map(), &fft));
        let offs = rand_vec(idx.len(), 8, 2.0);
        let beta: Vec<f64> = theta.iter().zip(&offs).map(|(t, d)| wrap(t + d)).collect();
        let mut data = data_for(&idx, &o);
        data.beta = beta;
        let p = ImageProblem::new(&idx, &data, Variant::E1, Regularizer::DiscreteGradient, 0.1).unwrap();
        let dir = rand_vec(SIDE * SIDE, 9, 1.0);
        let exact = dot(&p.eval(&o).gradient, &dir);
        let fd = fd_directional(|y| p.value(y), &o, &dir, 1e-6);
        assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let (idx, o) = setup(10);
        let data = data_for(&idx, &o);
        assert!(ImageProblem::new(&idx, &data, Variant::E1, Regularizer::Penalty, -1.0).is_err());
        assert!(ImageProblem::new(&idx, &data, Variant::E1, Regularizer::TotalVariation { eps: 0.0 }, 1.0).is_err());
    }
}
