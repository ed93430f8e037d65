use crate::error::{invalid, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices
/// and no stored zeros. Symmetric matrices are stored in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCsr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCsr {
    /// Assembles a matrix from `(row, col, value)` entries. Duplicates are
    /// summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for (r, c, v) in entries {
            if r >= n_rows || c >= n_cols {
                return invalid(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}"));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Builds directly from CSR arrays, validating the invariants.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return invalid("row_ptr has wrong length or origin");
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return invalid("row_ptr does not match entry count");
        }
        for r in 0..n_rows {
            let (a, b) = (row_ptr[r], row_ptr[r + 1]);
            if a > b {
                return invalid("row_ptr not monotone");
            }
            let cols = &col_idx[a..b];
            if cols.iter().any(|&c| c >= n_cols) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("row {r} has unsorted or out-of-range columns"));
            }
            if values[a..b].contains(&0.0) {
                return invalid(format!("row {r} stores an explicit zero"));
            }
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, row_ptr: vec![0; n_rows + 1], col_idx: vec![], values: vec![] }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// `y = S x`.
    pub fn spmv(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "spmv dimension mismatch");
        (0..self.n_rows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y = Sᵀ x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "spmv_transpose dimension mismatch");
        let mut y = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_idx[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        Self { n_rows: self.n_cols, n_cols: self.n_rows, row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && *self == self.transpose()
    }

    /// True when row `r` stores no entries.
    pub fn row_is_empty(&self, r: usize) -> bool {
        self.row_ptr[r] == self.row_ptr[r + 1]
    }

    /// Symmetric permutation `P S Pᵀ` where new index `k` holds old index `perm[k]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        let n = self.n_rows;
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let entries = (0..n).flat_map(|new_r| {
            let (cols, vals) = self.row(perm[new_r]);
            let inv = &inv;
            cols.iter().zip(vals).map(move |(&c, &v)| (new_r, inv[c], v))
        });
        Self::from_triplets(n, n, entries).expect("permutation preserves bounds")
    }

    /// Leading `k × k` block.
    pub fn leading_block(&self, k: usize) -> Self {
        let entries = (0..k).flat_map(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).filter(|(&c, _)| c < k).map(move |(&c, &v)| (r, c, v))
        });
        Self::from_triplets(k, k, entries).expect("block preserves bounds")
    }
}

/// Assembles the weighted normal matrix `Aᵀ diag(w) A`.
pub fn form_normal_matrix(a: &SparseCsr, w: &[f64]) -> Result<SparseCsr> {
    if w.len() != a.n_rows() {
        return invalid(format!("weights length {} != rows {}", w.len(), a.n_rows()));
    }
    let n = a.n_cols();
    let at = a.transpose();
    let mut acc = vec![0.0; n];
    let mut seen = vec![usize::MAX; n];
    let mut touched = Vec::new();
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for j in 0..n {
        touched.clear();
        let (rows, avals) = at.row(j);
        for (&r, &arj) in rows.iter().zip(avals) {
            let scale = arj * w[r];
            let (cols, vals) = a.row(r);
            for (&k, &ark) in cols.iter().zip(vals) {
                if seen[k] != j {
                    seen[k] = j;
                    acc[k] = 0.0;
                    touched.push(k);
                }
                acc[k] += scale * ark;
            }
        }
        touched.sort_unstable();
        for &k in &touched {
            if acc[k] != 0.0 {
                col_idx.push(k);
                values.push(acc[k]);
            }
        }
        row_ptr.push(col_idx.len());
    }
    // Summation order differs between (j,k) and (k,j); copy the lower
    // triangle onto the upper so the result is symmetric bit-for-bit.
    let mut s = SparseCsr { n_rows: n, n_cols: n, row_ptr, col_idx, values };
    symmetrize_from_lower(&mut s);
    Ok(s)
}

fn symmetrize_from_lower(s: &mut SparseCsr) {
    for r in 0..s.n_rows {
        for k in s.row_ptr[r]..s.row_ptr[r + 1] {
            let c = s.col_idx[k];
            if c > r {
                let (cols, vals) = s.row(c);
                let mirror = cols.binary_search(&r).map(|p| vals[p]).unwrap_or(0.0);
                s.values[k] = mirror;
            }
        }
    }
}
