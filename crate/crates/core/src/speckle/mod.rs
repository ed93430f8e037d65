//! Synthetic speckle data: Kolmogorov phase screens, short-exposure PSFs,
//! photon- and read-noise-limited frames, and the Labeyrie modulus estimate.

mod object;
mod screen;

pub use object::satellite_object;
pub use screen::{generate_phase_screen, generate_psf, pupil_mask};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fft::{convolve, Fft2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub image_side: usize,
    pub n_frames: usize,
    /// Turbulence strength `D/r0`.
    pub fried: f64,
    /// Expected photo-events per object frame.
    pub photons_object: f64,
    /// Expected photo-events per star frame.
    pub photons_star: f64,
    /// Read-noise standard deviation in counts.
    pub sigma_rn: f64,
    pub rng_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            image_side: 64,
            n_frames: 50,
            fried: 30.0,
            photons_object: 3e6,
            photons_star: 5000.0,
            sigma_rn: 5.0,
            rng_seed: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_side < 4 || !self.image_side.is_power_of_two() {
            return invalid(format!("image side {} must be a power of two ≥ 4", self.image_side));
        }
        if self.n_frames == 0 {
            return invalid("at least one frame is required");
        }
        if !(self.fried > 0.0 && self.fried.is_finite()) {
            return invalid(format!("D/r0 must be positive, got {}", self.fried));
        }
        for (name, v) in [("photons_object", self.photons_object), ("photons_star", self.photons_star), ("sigma_rn", self.sigma_rn)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Object,
    Star,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub side: usize,
    pub kind: FrameKind,
    pub frames: Vec<Vec<f64>>,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Forward FFT of every frame.
    pub fn spectra(&self) -> Vec<Vec<Complex64>> {
        let fft = Fft2::new(self.side);
        self.frames.par_iter().map(|f| fft.forward_real(f)).collect()
    }
}

/// Independent generator for one frame; object and star frames never share a stream.
pub fn frame_rng(seed: u64, kind: FrameKind, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lane = match kind {
        FrameKind::Object => 0,
        FrameKind::Star => 1,
    };
    rng.set_stream(2 * frame as u64 + lane);
    rng
}

/// Poisson variate: inversion for means up to 50, rounded normal above.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean > 50.0 {
        let z: f64 = rng.sample(StandardNormal);
        return (mean + mean.sqrt() * z).round().max(0.0);
    }
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k as f64
}

/// Noise-free frame: `photons · (object / Σ object) ⊛ psf`, clamped at zero.
pub fn expected_frame(object: &[f64], psf: &[f64], photons: f64, fft: &Fft2) -> Vec<f64> {
    let total: f64 = object.iter().sum();
    let scale = if total > 0.0 { photons / total } else { 0.0 };
    convolve(fft, object, psf).into_iter().map(|v| (v * scale).max(0.0)).collect()
}

/// Simulates `cfg.n_frames` frames of `object` (a point source for star frames)
/// through independent turbulence realizations.
pub fn simulate_frames(object: &[f64], cfg: &SimulationConfig, kind: FrameKind) -> Result<FrameSet> {
    cfg.validate()?;
    let n = cfg.image_side;
    if object.len() != n * n {
        return invalid(format!("object has {} pixels, expected {}", object.len(), n * n));
    }
    if object.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return invalid("object must be finite and nonnegative");
    }
    let photons = match kind {
        FrameKind::Object => cfg.photons_object,
        FrameKind::Star => cfg.photons_star,
    };
    let fft = Fft2::new(n);
    let pupil = pupil_mask(n);
    let frames = (0..cfg.n_frames)
        .into_par_iter()
        .map(|k| {
            let mut rng = frame_rng(cfg.rng_seed, kind, k);
            let screen = generate_phase_screen(n, cfg.fried, &mut rng);
            let psf = generate_psf(&screen, &pupil, &fft);
            let mean = expected_frame(object, &psf, photons, &fft);
            mean.iter()
                .map(|&m| {
                    let counts = sample_poisson(m, &mut rng);
                    if cfg.sigma_rn > 0.0 {
                        let z: f64 = rng.sample(StandardNormal);
                        counts + cfg.sigma_rn * z
                    } else {
                        counts
                    }
                })
                .collect()
        })
        .collect();
    Ok(FrameSet { side: n, kind, frames })
}

/// Unit point source at pixel 0, the reference star.
pub fn point_source(side: usize) -> Vec<f64> {
    let mut o = vec![0.0; side * side];
    o[0] = 1.0;
    o
}

/// Labeyrie estimate `sqrt(⟨|Î|²⟩ / (⟨|Ŝ|²⟩ + δ))`, scaled so that D.C. equals
/// the mean object frame flux.
pub fn recover_modulus(object_frames: &FrameSet, star_frames: &FrameSet) -> Result<Vec<f64>> {
    if object_frames.side != star_frames.side {
        return invalid("object and star frames differ in size");
    }
    if object_frames.is_empty() || star_frames.is_empty() {
        return invalid("frame sets must be nonempty");
    }
    let mean_power = |set: &FrameSet| {
        let mut acc = vec![0.0; set.side * set.side];
        for spec in set.spectra() {
            acc.iter_mut().zip(&spec).for_each(|(a, z)| *a += z.norm_sqr());
        }
        let k = set.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    };
    let pi = mean_power(object_frames);
    let ps = mean_power(star_frames);
    let mut modulus: Vec<f64> = pi.iter().zip(&ps).map(|(i, s)| (i / (s + 1e-8)).max(0.0).sqrt()).collect();
    let flux = object_frames.frames.iter().map(|f| f.iter().sum::<f64>()).sum::<f64>() / object_frames.len() as f64;
    if modulus[0] > 0.0 && flux > 0.0 {
        let s = flux / modulus[0];
        modulus.iter_mut().for_each(|m| *m *= s);
    }
    Ok(modulus)
}
