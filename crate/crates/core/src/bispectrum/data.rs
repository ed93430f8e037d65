use num_complex::Complex64;

use super::index::{wrap, BispectrumIndex};
use crate::error::{invalid, Result};

const SNR_DELTA: f64 = 1e-8;
const WEIGHT_FLOOR: f64 = 1e-8;

/// Data bispectrum phases, SNR weights and Fourier modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct BispectrumData {
    /// Wrapped phases in `[-π, π)`, one per triplet.
    pub beta: Vec<f64>,
    /// Positive weights, the diagonal of `W`.
    pub weights: Vec<f64>,
    /// Fourier modulus on the full `N × N` grid in FFT layout.
    pub modulus: Vec<f64>,
}

impl BispectrumData {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Replaces the modulus, e.g. with a star-calibrated estimate.
    pub fn with_modulus(mut self, modulus: Vec<f64>) -> Result<Self> {
        if modulus.len() != self.modulus.len() {
            return invalid(format!("modulus has {} entries, expected {}", modulus.len(), self.modulus.len()));
        }
        if modulus.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return invalid("modulus must be finite and nonnegative");
        }
        self.modulus = modulus;
        Ok(self)
    }
}

/// Averages the per-frame bispectrum over `frame_ffts` at every triplet.
///
/// The modulus is the root of the frame-averaged power spectrum, uncorrected
/// for the atmosphere; see `speckle::recover_modulus` for the calibrated one.
pub fn accumulate_bispectrum(frame_ffts: &[Vec<Complex64>], index: &BispectrumIndex) -> Result<BispectrumData> {
    if frame_ffts.is_empty() {
        return invalid("at least one frame is required");
    }
    let npix = index.image_side() * index.image_side();
    if let Some(f) = frame_ffts.iter().find(|f| f.len() != npix) {
        return invalid(format!("frame has {} pixels, expected {npix}", f.len()));
    }
    let k = frame_ffts.len() as f64;
    let triple = |f: &[Complex64], p: &[usize; 3]| f[p[0]] * f[p[1]] * f[p[2]].conj();

    let mut mean = vec![Complex64::new(0.0, 0.0); index.len()];
    for f in frame_ffts {
        for (acc, p) in mean.iter_mut().zip(index.positions()) {
            *acc += triple(f, p);
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    // second pass keeps the spread exactly zero for repeated frames
    let mut spread = vec![0.0; index.len()];
    if frame_ffts.len() > 1 {
        for f in frame_ffts {
            for ((s, p), m) in spread.iter_mut().zip(index.positions()).zip(&mean) {
                *s += (triple(f, p) - m).norm_sqr();
            }
        }
    }

    let beta = mean.iter().map(|m| wrap(m.im.atan2(m.re))).collect();
    let weights = if spread.iter().all(|&s| s == 0.0) {
        vec![1.0; index.len()]
    } else {
        // per-component sample std: Re and Im each carry half the spread
        let denom = 2.0 * (k - 1.0);
        mean.iter()
            .zip(&spread)
            .map(|(m, &s)| {
                let w = m.norm() / ((s / denom).sqrt() + SNR_DELTA);
                if w.is_finite() { w.max(WEIGHT_FLOOR) } else { WEIGHT_FLOOR }
            })
            .collect()
    };

    let mut power = vec![0.0; npix];
    for f in frame_ffts {
        for (p, z) in power.iter_mut().zip(f) {
            *p += z.norm_sqr();
        }
    }
    let modulus = power.into_iter().map(|p| (p / k).sqrt()).collect();
    Ok(BispectrumData { beta, weights, modulus })
}
