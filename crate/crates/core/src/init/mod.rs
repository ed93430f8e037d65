//! Warm start: one recursive pass over the bispectrum, image synthesis from
//! phase and modulus, and the energy-preserving nonnegative projection.

use num_complex::Complex64;

use crate::bispectrum::{wrap, BispectrumData, BispectrumIndex, FreqCoord, PhaseIndexMap};
use crate::error::{invalid, Result};
use crate::fft::{freq_to_pos, Fft2};

/// Recursive phase estimate with the unknowns at `|u| ≤ 1` seeded to zero.
pub fn recursive_phase(data: &BispectrumData, index: &BispectrumIndex) -> Vec<f64> {
    let seeds: Vec<(usize, f64)> = (0..index.n_unknowns())
        .filter(|&k| index.map().coord(k).norm_sq() <= 1)
        .map(|k| (k, 0.0))
        .collect();
    recursive_phase_seeded(data, index, &seeds)
}

/// One pass of the recursive reconstructor from the given `(unknown, phase)` seeds.
///
/// Unknowns are visited by increasing radius (raster order on ties). Each
/// triplet whose other columns are already known and whose coefficient on the
/// visited unknown is ±1 yields one estimate; the estimates are combined by a
/// weighted circular mean. Unknowns with no usable triplet stay 0.
pub fn recursive_phase_seeded(data: &BispectrumData, index: &BispectrumIndex, seeds: &[(usize, f64)]) -> Vec<f64> {
    let n = index.n_unknowns();
    let a = index.operator();
    let at = a.transpose();
    let mut phi = vec![0.0; n];
    let mut known = vec![false; n];
    for &(k, v) in seeds {
        phi[k] = v;
        known[k] = true;
    }
    let map = index.map();
    let mut order: Vec<usize> = (0..n).filter(|&k| !known[k]).collect();
    order.sort_by_key(|&k| (map.coord(k).norm_sq(), k));

    for k in order {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut used = 0;
        let (rows, _) = at.row(k);
        for &r in rows {
            let (cols, vals) = a.row(r);
            let mut coef = 0.0;
            let mut rest = 0.0;
            let mut usable = true;
            for (&c, &v) in cols.iter().zip(vals) {
                if c == k {
                    coef = v;
                } else if known[c] {
                    rest += v * phi[c];
                } else {
                    usable = false;
                    break;
                }
            }
            if !usable || coef.abs() != 1.0 {
                continue;
            }
            let est = coef * (data.beta[r] - rest);
            acc += Complex64::from_polar(data.weights[r], est);
            used += 1;
        }
        if used > 0 {
            phi[k] = if acc.norm() > 0.0 { acc.arg() } else { 0.0 };
            known[k] = true;
        }
    }
    phi.into_iter().map(wrap).collect()
}

/// Image and the norm of the discarded imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub image: Vec<f64>,
    pub imaginary_residue: f64,
}

/// Inverse transform of `modulus · e^{iφ}` on the indexed frequencies, their
/// mirrors with conjugate phase, and D.C.; other frequencies get zero amplitude.
pub fn synthesize_image(phi: &[f64], modulus: &[f64], map: &PhaseIndexMap) -> Result<Synthesis> {
    let side = map.image_side();
    if phi.len() != map.len() {
        return invalid(format!("phase has {} entries, expected {}", phi.len(), map.len()));
    }
    if modulus.len() != side * side {
        return invalid(format!("modulus has {} entries, expected {}", modulus.len(), side * side));
    }
    let mut spec = vec![Complex64::new(0.0, 0.0); side * side];
    spec[0] = Complex64::new(modulus[0], 0.0);
    for (k, &p) in phi.iter().enumerate() {
        let c: FreqCoord = map.coord(k);
        let pos = freq_to_pos(c.i, c.j, side);
        let z = Complex64::from_polar(modulus[pos], p);
        spec[pos] = z;
        spec[freq_to_pos(-c.i, -c.j, side)] = z.conj();
    }
    Fft2::new(side).inverse(&mut spec);
    let imaginary_residue = spec.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    Ok(Synthesis { image: spec.into_iter().map(|z| z.re).collect(), imaginary_residue })
}

/// Euclidean projection onto `{x ≥ 0, Σx = Σo}` by water-filling, then
/// `epsilon` added to every pixel.
pub fn project_energy_preserving(o: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if o.iter().any(|v| !v.is_finite()) {
        return invalid("image contains non-finite values");
    }
    let total: f64 = o.iter().sum();
    if !(total > 0.0) {
        return invalid(format!("total flux must be positive, got {total}"));
    }
    let tau = if o.iter().all(|&v| v >= 0.0) {
        0.0
    } else {
        let mut sorted = o.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = 0.0;
        let mut tau = 0.0;
        for (k, &v) in sorted.iter().enumerate() {
            prefix += v;
            let t = (prefix - total) / (k + 1) as f64;
            let next = sorted.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if v > t && t >= next {
                tau = t;
                break;
            }
        }
        tau
    };
    Ok(o.iter().map(|&v| (v - tau).max(0.0) + epsilon).collect())
}
