use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft::Fft2;

/// 180° rotation about pixel 0 on the periodic grid.
pub fn rotate_180(o: &[f64], side: usize) -> Vec<f64> {
    (0..side * side).map(|p| o[((side - p / side) % side) * side + (side - p % side) % side]).collect()
}

/// `‖o_rec − o_true‖ / ‖o_true‖` with no registration.
pub fn raw_relative_error(o_rec: &[f64], o_true: &[f64]) -> f64 {
    let num: f64 = o_rec.iter().zip(o_true).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = o_true.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Relative error after the best circular shift, optional 180° rotation and
/// least-squares scale of `o_rec`.
pub fn relative_error(o_rec: &[f64], o_true: &[f64]) -> Result<f64> {
    let npix = o_true.len();
    let side = (npix as f64).sqrt().round() as usize;
    if side * side != npix || o_rec.len() != npix {
        return invalid("images must be square and of equal size");
    }
    let bb: f64 = o_true.iter().map(|b| b * b).sum();
    if !(bb > 0.0) {
        return invalid("reference image is zero");
    }
    let aa: f64 = o_rec.iter().map(|a| a * a).sum();
    if aa == 0.0 {
        return Ok(1.0);
    }
    let fft = Fft2::new(side);
    let fb = fft.forward_real(o_true);
    let mut best = 0.0f64;
    for cand in [o_rec.to_vec(), rotate_180(o_rec, side)] {
        let fa = fft.forward_real(&cand);
        // ⟨a(· − s), b⟩ for every shift s
        let mut c: Vec<Complex64> = fa.iter().zip(&fb).map(|(a, b)| a.conj() * b).collect();
        fft.inverse(&mut c);
        best = c.iter().fold(best, |m, z| m.max(z.re.abs()));
    }
    Ok(((bb - best * best / aa).max(0.0) / bb).sqrt())
}
