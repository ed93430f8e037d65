//! Zero fill-in incomplete Cholesky factorization and triangular solves.

use super::SparseCsr;
use crate::error::{Error, Result};

/// Pivots at or below this fraction of the (shifted) diagonal count as breakdown.
const PIVOT_RTOL: f64 = 1e-12;
const MAX_SHIFTS: usize = 3;

/// Lower-triangular factor `L` with `L Lᵀ ≈ S + shift·I` on the pattern of `S`.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    l: SparseCsr,
    shift: f64,
}

impl IncompleteCholesky {
    pub fn factor(&self) -> &SparseCsr {
        &self.l
    }

    /// Diagonal shift that was needed to avoid breakdown (0 when none).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.l.n_rows()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = forward_substitute(&self.l, b);
        backward_substitute(&self.l, y)
    }
}

/// ichol(0) of a symmetric positive definite matrix.
///
/// On a nonpositive pivot the factorization restarts on `S + σI` with
/// `σ = 1e-3 · max diag(S)`, doubling σ on each retry; after three shifts it
/// gives up with [`Error::NumericalBreakdown`].
pub fn ichol0(s: &SparseCsr) -> Result<IncompleteCholesky> {
    if s.n_rows() != s.n_cols() {
        return Err(Error::InvalidArgument("ichol0 needs a square matrix".into()));
    }
    let max_diag = (0..s.n_rows()).map(|i| s.get(i, i)).fold(0.0_f64, f64::max);
    let mut shift = 0.0;
    for attempt in 0..=MAX_SHIFTS {
        if let Some(l) = try_factor(s, shift) {
            return Ok(IncompleteCholesky { l, shift });
        }
        shift = if attempt == 0 { 1e-3 * max_diag.max(f64::MIN_POSITIVE) } else { 2.0 * shift };
    }
    Err(Error::NumericalBreakdown(format!(
        "incomplete Cholesky broke down after {MAX_SHIFTS} diagonal shifts"
    )))
}

fn try_factor(s: &SparseCsr, shift: f64) -> Option<SparseCsr> {
    let n = s.n_rows();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let mut work = vec![0.0; n];

    for i in 0..n {
        let (cols, vals) = s.row(i);
        let start = col_idx.len();
        let mut diag = shift;
        for (&c, &v) in cols.iter().zip(vals) {
            if c < i {
                work[c] = v;
                col_idx.push(c);
                values.push(0.0);
            } else if c == i {
                diag += v;
            }
        }
        let end = col_idx.len();
        let scale = diag;
        for t in start..end {
            let k = col_idx[t];
            let (kcols, kvals) = (&col_idx[row_ptr[k]..row_ptr[k + 1]], &values[row_ptr[k]..row_ptr[k + 1]]);
            // last entry of a finished row is its diagonal
            let last = kcols.len() - 1;
            let mut dot = 0.0;
            for q in 0..last {
                dot += kvals[q] * work[kcols[q]];
            }
            let lik = (work[k] - dot) / kvals[last];
            work[k] = lik;
            values[t] = lik;
        }
        for t in start..end {
            diag -= values[t] * values[t];
            work[col_idx[t]] = 0.0;
        }
        if !diag.is_finite() || diag <= PIVOT_RTOL * scale.abs() || diag <= 0.0 {
            return None;
        }
        col_idx.push(i);
        values.push(diag.sqrt());
        row_ptr.push(col_idx.len());
    }
    Some(SparseCsr::from_raw(n, n, row_ptr, col_idx, values).expect("factor pattern is valid"))
}

/// Solves `L y = b` for lower-triangular CSR `L` with the diagonal stored last per row.
pub fn forward_substitute(l: &SparseCsr, b: &[f64]) -> Vec<f64> {
    let n = l.n_rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = l.row(i);
        let last = cols.len() - 1;
        let mut acc = b[i];
        for q in 0..last {
            acc -= vals[q] * y[cols[q]];
        }
        y[i] = acc / vals[last];
    }
    y
}

/// Solves `Lᵀ x = y` in place of `y`.
pub fn backward_substitute(l: &SparseCsr, mut y: Vec<f64>) -> Vec<f64> {
    for i in (0..l.n_rows()).rev() {
        let (cols, vals) = l.row(i);
        let last = cols.len() - 1;
        let xi = y[i] / vals[last];
        y[i] = xi;
        for q in 0..last {
            y[cols[q]] -= vals[q] * xi;
        }
    }
    y
}

/// Largest `|(L Lᵀ)_ij − (S + shift·I)_ij|` over the pattern of `S`,
/// relative to `max |S_ij|`.
pub fn pattern_residual(s: &SparseCsr, fact: &IncompleteCholesky) -> f64 {
    let l = fact.factor();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..s.n_rows() {
        let (cols, vals) = s.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            scale = scale.max(v.abs());
            if j > i {
                continue;
            }
            let target = if i == j { v + fact.shift() } else { v };
            let (ci, vi) = l.row(i);
            let (cj, vj) = l.row(j);
            let (mut a, mut b, mut dot) = (0, 0, 0.0);
            while a < ci.len() && b < cj.len() {
                match ci[a].cmp(&cj[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        dot += vi[a] * vj[b];
                        a += 1;
                        b += 1;
                    }
                }
            }
            worst = worst.max((dot - target).abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_factor_is_sqrt() {
        let s = SparseCsr::from_triplets(3, 3, vec![(0, 0, 4.0), (1, 1, 9.0), (2, 2, 2.0)]).unwrap();
        let f = ichol0(&s).unwrap();
        assert_eq!(f.shift(), 0.0);
        let l = f.factor().to_dense();
        assert_eq!(l[0][0], 2.0);
        assert_eq!(l[1][1], 3.0);
        assert_eq!(l[2][2], 2f64.sqrt());
    }

    #[test]
    fn tridiagonal_two_by_two_is_exact() {
        let s = SparseCsr::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)])
            .unwrap();
        let l = ichol0(&s).unwrap().factor().to_dense();
        assert!((l[0][0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((l[1][0] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((l[1][1] - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[0][1], 0.0);
    }

    #[test]
    fn residual_vanishes_on_pattern() {
        // 2-D Laplacian plus identity: ichol(0) drops fill, but agrees on the pattern
        let k = 6;
        let mut e = vec![];
        for r in 0..k {
            for c in 0..k {
                let i = r * k + c;
                e.push((i, i, 5.0));
                if c + 1 < k {
                    e.push((i, i + 1, -1.0));
                    e.push((i + 1, i, -1.0));
                }
                if r + 1 < k {
                    e.push((i, i + k, -1.0));
                    e.push((i + k, i, -1.0));
                }
            }
        }
        let s = SparseCsr::from_triplets(k * k, k * k, e).unwrap();
        let f = ichol0(&s).unwrap();
        assert!(pattern_residual(&s, &f) < 1e-12);
        // the factor keeps exactly the lower pattern of S
        let lower = (0..k * k).map(|i| s.row(i).0.iter().filter(|&&c| c <= i).count()).sum::<usize>();
        assert_eq!(f.factor().nnz(), lower);
    }

    #[test]
    fn singular_matrix_triggers_shift() {
        let s = SparseCsr::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let f = ichol0(&s).unwrap();
        assert!((f.shift() - 1e-3).abs() < 1e-18);
        assert!(pattern_residual(&s, &f) < 1e-12);
    }

    #[test]
    fn indefinite_matrix_fails_after_shifts() {
        let s = SparseCsr::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(ichol0(&s), Err(Error::NumericalBreakdown(_))));
    }

    #[test]
    fn triangular_solves_invert_dense_factor() {
        let s = SparseCsr::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, 1.0), (2, 0, 1.0), (2, 1, 1.0), (2, 2, 5.0)],
        )
        .unwrap();
        // dense pattern: ichol(0) is the exact Cholesky factor
        let f = ichol0(&s).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let r = s.spmv(&x);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
