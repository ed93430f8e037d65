use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::fft::freq_to_pos;
use crate::sparse::SparseCsr;

const TWO_PI: f64 = 2.0 * PI;

/// Reduces `x` to `[-π, π)`.
pub fn wrap_phase(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return invalid(format!("cannot wrap non-finite phase {x}"));
    }
    Ok(wrap(x))
}

/// Unchecked [`wrap_phase`].
#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let mut r = x - TWO_PI * (x / TWO_PI).round_ties_even();
    if r >= PI {
        r -= TWO_PI;
    } else if r < -PI {
        r += TWO_PI;
    }
    r
}

/// Integer spatial frequency, in cycles per image side, relative to D.C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqCoord {
    pub i: i32,
    pub j: i32,
}

impl FreqCoord {
    pub const DC: FreqCoord = FreqCoord { i: 0, j: 0 };

    pub const fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    pub fn norm_sq(self) -> i64 {
        (self.i as i64).pow(2) + (self.j as i64).pow(2)
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Member of the half-plane that carries the unknowns: `i > 0`, or `i = 0, j > 0`.
    pub fn in_upper_half(self) -> bool {
        self.i > 0 || (self.i == 0 && self.j > 0)
    }

    pub fn within(self, radius: f64) -> bool {
        (self.norm_sq() as f64) <= radius * radius
    }
}

impl std::ops::Add for FreqCoord {
    type Output = FreqCoord;
    fn add(self, o: FreqCoord) -> FreqCoord {
        FreqCoord::new(self.i + o.i, self.j + o.j)
    }
}

impl std::ops::Neg for FreqCoord {
    type Output = FreqCoord;
    fn neg(self) -> FreqCoord {
        FreqCoord::new(-self.i, -self.j)
    }
}

/// Disc of integer frequencies `0 < |c| ≤ radius`, in raster order.
pub(crate) fn disc(radius: f64) -> Vec<FreqCoord> {
    let r = radius.floor() as i32;
    let mut out = Vec::new();
    for i in -r..=r {
        for j in -r..=r {
            let c = FreqCoord::new(i, j);
            if c != FreqCoord::DC && c.within(radius) {
                out.push(c);
            }
        }
    }
    out
}

/// Assignment of phase unknowns to frequencies inside the recovery radius.
///
/// Each unknown `k` lives at a half-plane frequency `c_k`; its mirror `-c_k`
/// maps to the same unknown with sign `-1` since the phase of a real image is
/// odd. D.C. carries no unknown.
#[derive(Debug, Clone)]
pub struct PhaseIndexMap {
    image_side: usize,
    recovery_radius: f64,
    coords: Vec<FreqCoord>,
    // grid position -> unknown index, negative sign stored as bitwise complement
    lookup: Vec<Option<(u32, i8)>>,
}

impl PhaseIndexMap {
    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn recovery_radius(&self) -> f64 {
        self.recovery_radius
    }

    /// Number of phase unknowns `n`.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Half-plane frequency of unknown `k`.
    pub fn coord(&self, k: usize) -> FreqCoord {
        self.coords[k]
    }

    pub fn coords(&self) -> &[FreqCoord] {
        &self.coords
    }

    /// Unknown index and symmetry sign of `c`, or `None` outside the radius or at D.C.
    pub fn lookup(&self, c: FreqCoord) -> Option<(usize, i8)> {
        if !c.within(self.recovery_radius) {
            return None;
        }
        self.lookup[freq_to_pos(c.i, c.j, self.image_side)].map(|(k, s)| (k as usize, s))
    }

    /// Grid position (row-major FFT layout) of unknown `k`.
    pub fn position(&self, k: usize) -> usize {
        let c = self.coords[k];
        freq_to_pos(c.i, c.j, self.image_side)
    }
}

/// Indexes the half-plane frequencies with `0 < |c| ≤ recovery_radius`.
pub fn build_phase_map(image_side: usize, recovery_radius: f64) -> Result<PhaseIndexMap> {
    if image_side < 2 {
        return invalid(format!("image side {image_side} too small"));
    }
    if !(recovery_radius > 0.0 && recovery_radius < image_side as f64 / 2.0) {
        return invalid(format!(
            "recovery radius {recovery_radius} must lie in (0, {})",
            image_side as f64 / 2.0
        ));
    }
    let r = recovery_radius.floor() as i32;
    let mut coords = Vec::new();
    for i in 0..=r {
        for j in -r..=r {
            let c = FreqCoord::new(i, j);
            if c.in_upper_half() && c.within(recovery_radius) {
                coords.push(c);
            }
        }
    }
    if coords.is_empty() {
        return invalid(format!("recovery radius {recovery_radius} contains no frequencies"));
    }
    let mut lookup = vec![None; image_side * image_side];
    for (k, &c) in coords.iter().enumerate() {
        lookup[freq_to_pos(c.i, c.j, image_side)] = Some((k as u32, 1));
        lookup[freq_to_pos(-c.i, -c.j, image_side)] = Some((k as u32, -1));
    }
    Ok(PhaseIndexMap { image_side, recovery_radius, coords, lookup })
}

/// One frequency triplet `(u, v, u + v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub u: FreqCoord,
    pub v: FreqCoord,
}

impl Triplet {
    pub fn sum(&self) -> FreqCoord {
        self.u + self.v
    }
}

/// Triplet set and the sparse operator `A` with `β = Aφ`.
#[derive(Debug, Clone)]
pub struct BispectrumIndex {
    map: PhaseIndexMap,
    inner_radius: f64,
    triplets: Vec<Triplet>,
    positions: Vec<[usize; 3]>,
    a: SparseCsr,
}

impl BispectrumIndex {
    pub fn map(&self) -> &PhaseIndexMap {
        &self.map
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn recovery_radius(&self) -> f64 {
        self.map.recovery_radius()
    }

    pub fn image_side(&self) -> usize {
        self.map.image_side()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    /// Grid positions of `u`, `v` and `u + v` for every triplet.
    pub fn positions(&self) -> &[[usize; 3]] {
        &self.positions
    }

    /// The `m × n` operator.
    pub fn operator(&self) -> &SparseCsr {
        &self.a
    }

    /// Number of triplets `m`.
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Number of phase unknowns `n`.
    pub fn n_unknowns(&self) -> usize {
        self.map.len()
    }

    pub(crate) fn from_parts(map: PhaseIndexMap, inner_radius: f64, triplets: Vec<Triplet>, a: SparseCsr) -> Result<Self> {
        if a.n_rows() != triplets.len() || a.n_cols() != map.len() {
            return invalid("operator shape does not match triplets and phase map");
        }
        let side = map.image_side();
        let mut positions = Vec::with_capacity(triplets.len());
        for t in &triplets {
            let w = t.sum();
            for c in [t.u, t.v, w] {
                if map.lookup(c).is_none() {
                    return invalid(format!("triplet leg {c:?} outside the phase map"));
                }
            }
            positions.push([freq_to_pos(t.u.i, t.u.j, side), freq_to_pos(t.v.i, t.v.j, side), freq_to_pos(w.i, w.j, side)]);
        }
        Ok(Self { map, inner_radius, triplets, positions, a })
    }
}

/// Row of `A` for one triplet: `+1` at `u`, `+1` at `v`, `-1` at `u + v`, each
/// multiplied by its symmetry sign, with coincident columns merged.
fn triplet_row(map: &PhaseIndexMap, t: &Triplet) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(3);
    for (c, coef) in [(t.u, 1.0), (t.v, 1.0), (t.sum(), -1.0)] {
        let (k, s) = map.lookup(c).expect("triplet legs lie inside the map");
        let val = coef * s as f64;
        match row.iter_mut().find(|(kk, _)| *kk == k) {
            Some(e) => e.1 += val,
            None => row.push((k, val)),
        }
    }
    row.retain(|&(_, v)| v != 0.0);
    row.sort_by_key(|&(k, _)| k);
    row
}

/// Enumerates the triplets with `|u| ≤ R`, `|u + v| ≤ R`, `|v| ≤ inner_radius`
/// and builds `A`.
///
/// Triplets that differ only by swapping `u, v` or by conjugation
/// `(u, v) → (-u, -v)` carry the same information; only the raster-smallest
/// member of each such class is kept. Triplets touching D.C. are dropped since
/// their bispectrum phase is identically zero.
pub fn build_index(map: PhaseIndexMap, inner_radius: f64) -> Result<BispectrumIndex> {
    let big = map.recovery_radius();
    if !(inner_radius > 0.0 && inner_radius <= big) {
        return invalid(format!("inner radius {inner_radius} must lie in (0, {big}]"));
    }
    let valid = |u: FreqCoord, v: FreqCoord| {
        let w = u + v;
        u != FreqCoord::DC && v != FreqCoord::DC && w != FreqCoord::DC && u.within(big) && v.within(inner_radius) && w.within(big)
    };
    let us = disc(big);
    let vs = disc(inner_radius);
    let mut triplets = Vec::new();
    let mut rows = Vec::new();
    for &v in &vs {
        for &u in &us {
            if !valid(u, v) {
                continue;
            }
            let key = (u, v);
            let mut canonical = key <= (-u, -v);
            if canonical && valid(v, u) {
                canonical = key <= (v, u) && key <= (-v, -u);
            }
            if !canonical {
                continue;
            }
            let t = Triplet { u, v };
            let row = triplet_row(&map, &t);
            if row.is_empty() {
                continue;
            }
            triplets.push(t);
            rows.push(row);
        }
    }
    let n = map.len();
    let entries = rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(k, v)| (r, k, v)));
    let a = SparseCsr::from_triplets(rows.len(), n, entries)?;
    BispectrumIndex::from_parts(map, inner_radius, triplets, a)
}
