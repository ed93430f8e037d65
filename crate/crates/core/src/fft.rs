//! Square 2-D FFTs on row-major grids.
//!
//! Forward transforms are unnormalized; inverse transforms carry the `1/N²`
//! factor so that `inverse(forward(x)) == x`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("side", &self.side).finish()
    }
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(&*self.forward, data);
    }

    /// In-place inverse transform scaled by `1/N²`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(&*self.inverse, data);
        let scale = 1.0 / (self.side * self.side) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn apply(&self, plan: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.side;
        assert_eq!(data.len(), n * n, "grid size mismatch");
        plan.process(data);
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            plan.process(&mut column);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }
}

/// Grid position of integer frequency `(i, j)` (row frequency, column frequency).
#[inline]
pub fn freq_to_pos(i: i32, j: i32, side: usize) -> usize {
    let n = side as i32;
    (i.rem_euclid(n) as usize) * side + j.rem_euclid(n) as usize
}

/// Signed frequency pair of a grid position, in `[-N/2, N/2)`.
#[inline]
pub fn pos_to_freq(pos: usize, side: usize) -> (i32, i32) {
    let n = side as i32;
    let half = n / 2;
    let r = (pos / side) as i32;
    let c = (pos % side) as i32;
    let wrap = |x: i32| if x >= half { x - n } else { x };
    (wrap(r), wrap(c))
}

/// Circular 2-D convolution of two real grids via the FFT.
pub fn convolve(fft: &Fft2, a: &[f64], b: &[f64]) -> Vec<f64> {
    let fa = fft.forward_real(a);
    let mut fb = fft.forward_real(b);
    fb.iter_mut().zip(&fa).for_each(|(x, y)| *x *= y);
    fft.inverse(&mut fb);
    fb.into_iter().map(|z| z.re).collect()
}
