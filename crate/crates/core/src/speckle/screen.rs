use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::fft::{pos_to_freq, Fft2};

/// Kolmogorov phase screen in radians on an `n × n` grid spanning two pupil
/// diameters, so the pupil is `n/2` pixels across.
///
/// Complex white noise is shaped by the power spectrum
/// `0.023 r0^{-5/3} f^{-11/3}` (f in cycles per pupil diameter, piston
/// removed) and transformed back without normalization. Three levels of
/// subharmonics restore the low-frequency power the grid cannot hold.
pub fn generate_phase_screen<R: Rng + ?Sized>(n: usize, fried: f64, rng: &mut R) -> Vec<f64> {
    let df = 0.5;
    let r0 = 1.0 / fried;
    let amp = 0.023f64.sqrt() * r0.powf(-5.0 / 6.0);
    let mut spec = Vec::with_capacity(n * n);
    for p in 0..n * n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let (i, j) = pos_to_freq(p, n);
        let f2 = df * df * ((i * i + j * j) as f64);
        let s = if p == 0 { 0.0 } else { amp * f2.powf(-11.0 / 12.0) * df };
        spec.push(Complex64::new(a, b) * s);
    }
    let fft = Fft2::new(n);
    fft.inverse(&mut spec);
    let scale = (n * n) as f64;
    let mut screen: Vec<f64> = spec.into_iter().map(|z| z.re * scale).collect();

    let dx = 2.0 / n as f64;
    let mut low = vec![0.0; n * n];
    for level in 1..=3 {
        let dfp = df / 3f64.powi(level);
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                if i == 0 && j == 0 {
                    continue;
                }
                let (fy, fx) = (i as f64 * dfp, j as f64 * dfp);
                let c = Complex64::new(a, b) * amp * (fx * fx + fy * fy).powf(-11.0 / 12.0) * dfp;
                for p in 0..n * n {
                    let (y, x) = ((p / n) as f64 * dx, (p % n) as f64 * dx);
                    let arg = 2.0 * std::f64::consts::PI * (fx * x + fy * y);
                    low[p] += (c * Complex64::from_polar(1.0, arg)).re;
                }
            }
        }
    }
    let mean = low.iter().sum::<f64>() / (n * n) as f64;
    screen.iter_mut().zip(&low).for_each(|(s, l)| *s += l - mean);
    screen
}

/// Centered disc of diameter `n/2` pixels.
pub fn pupil_mask(n: usize) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let r2 = (n as f64 / 4.0).powi(2);
    (0..n * n)
        .map(|p| {
            let (y, x) = ((p / n) as f64 - c, (p % n) as f64 - c);
            if x * x + y * y <= r2 { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Short-exposure PSF `|F(pupil · e^{i·screen})|²` with unit sum, peak near pixel 0.
pub fn generate_psf(screen: &[f64], pupil: &[f64], fft: &Fft2) -> Vec<f64> {
    let mut field: Vec<Complex64> = screen.iter().zip(pupil).map(|(&s, &a)| Complex64::from_polar(a, s)).collect();
    fft.forward(&mut field);
    let psf: Vec<f64> = field.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = psf.iter().sum();
    psf.into_iter().map(|v| v / total).collect()
}
