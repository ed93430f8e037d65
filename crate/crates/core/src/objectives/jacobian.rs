use num_complex::Complex64;

use crate::bispectrum::PhaseIndexMap;
use crate::fft::Fft2;

/// Fourier phase of `o` at each unknown of `map`; zero where the transform vanishes.
pub fn phase_of_object(o: &[f64], map: &PhaseIndexMap, fft: &Fft2) -> Vec<f64> {
    let f = fft.forward_real(o);
    (0..map.len())
        .map(|k| {
            let z = f[map.position(k)];
            if z == Complex64::new(0.0, 0.0) { 0.0 } else { z.arg() }
        })
        .collect()
}

/// Linearization of `o ↦ φ(o)` at a fixed image.
///
/// Forward: `(Jq)_k = Im(F(q)_k / F(o)_k)`. Adjoint: `Jᵀr = Im(F(z))` with
/// `z` holding `r_k / F(o)_k` at the frequency of unknown `k` and zero
/// elsewhere. Both use the unnormalized forward transform, so they are exact
/// transposes of each other.
#[derive(Debug, Clone)]
pub struct PhaseJacobian<'a> {
    fft: &'a Fft2,
    positions: Vec<usize>,
    inv: Vec<Complex64>,
    phases: Vec<f64>,
}

impl<'a> PhaseJacobian<'a> {
    pub fn new(o: &[f64], map: &PhaseIndexMap, fft: &'a Fft2) -> Self {
        let f = fft.forward_real(o);
        let positions: Vec<usize> = (0..map.len()).map(|k| map.position(k)).collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut inv = Vec::with_capacity(positions.len());
        let mut phases = Vec::with_capacity(positions.len());
        for &p in &positions {
            let z = f[p];
            if z == zero {
                inv.push(zero);
                phases.push(0.0);
            } else {
                inv.push(z.inv());
                phases.push(z.arg());
            }
        }
        Self { fft, positions, inv, phases }
    }

    /// `φ(o)` at the linearization point.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn n_pixels(&self) -> usize {
        self.fft.side() * self.fft.side()
    }

    pub fn forward(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.n_pixels(), "image size mismatch");
        let fq = self.fft.forward_real(q);
        self.positions.iter().zip(&self.inv).map(|(&p, g)| (fq[p] * g).im).collect()
    }

    pub fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.positions.len(), "phase vector size mismatch");
        let mut z = vec![Complex64::new(0.0, 0.0); self.n_pixels()];
        for ((&p, g), &rk) in self.positions.iter().zip(&self.inv).zip(r) {
            z[p] = g * rk;
        }
        self.fft.forward(&mut z);
        z.into_iter().map(|c| c.im).collect()
    }
}

/// `∂φ/∂o` applied to `q`.
pub fn dphi_do_forward(o: &[f64], q: &[f64], map: &PhaseIndexMap) -> Vec<f64> {
    let fft = Fft2::new(map.image_side());
    PhaseJacobian::new(o, map, &fft).forward(q)
}

/// Transpose of `∂φ/∂o` applied to `r`.
pub fn dphi_do_adjoint(o: &[f64], r: &[f64], map: &PhaseIndexMap) -> Vec<f64> {
    let fft = Fft2::new(map.image_side());
    PhaseJacobian::new(o, map, &fft).adjoint(r)
}
