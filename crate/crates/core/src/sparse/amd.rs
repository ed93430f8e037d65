//! Approximate minimum degree ordering on a quotient graph.
//!
//! Classic AMD elimination (Amestoy, Davis & Duff): eliminated pivots become
//! elements, elements adjacent to the pivot are absorbed into it, and each
//! variable's external degree is replaced by the cheap upper bound
//! `|A_i| + |L_p \ i| + Σ_{e ∈ E_i, e ≠ p} |L_e \ L_p|`. Aggressive absorption
//! and supervariable detection are not used. Ties are broken by the lowest
//! original index so orderings are reproducible.

use std::collections::BTreeSet;

use super::SparseCsr;

/// Fill-reducing symmetric permutation of `s`'s pattern.
///
/// Structurally nonempty rows come first, ordered by AMD; empty rows follow
/// in their original order. `perm[new] = old`.
pub fn amd_ordering(s: &SparseCsr) -> Vec<usize> {
    let n = s.n_rows();
    let active: Vec<usize> = (0..n).filter(|&i| !s.row_is_empty(i)).collect();
    let mut local = vec![usize::MAX; n];
    for (k, &g) in active.iter().enumerate() {
        local[g] = k;
    }
    let adj: Vec<Vec<usize>> = active
        .iter()
        .map(|&g| {
            let (cols, _) = s.row(g);
            let mut a: Vec<usize> = cols
                .iter()
                .filter(|&&c| c != g && local[c] != usize::MAX)
                .map(|&c| local[c])
                .collect();
            // the pattern is assumed symmetric; include transposed entries anyway
            a.sort_unstable();
            a
        })
        .collect();
    let adj = symmetrize(adj);
    let order = minimum_degree(adj);
    let mut perm: Vec<usize> = order.into_iter().map(|k| active[k]).collect();
    perm.extend((0..n).filter(|&i| s.row_is_empty(i)));
    perm
}

fn symmetrize(mut adj: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nbrs) in adj.iter().enumerate() {
        for &j in nbrs {
            extra[j].push(i);
        }
    }
    for (a, e) in adj.iter_mut().zip(extra) {
        a.extend(e);
        a.sort_unstable();
        a.dedup();
    }
    adj
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Variable,
    Element,
    Absorbed,
}

/// Elimination order for a symmetric adjacency structure (no self loops).
pub(crate) fn minimum_degree(adj: Vec<Vec<usize>>) -> Vec<usize> {
    let n = adj.len();
    let mut var_adj = adj;
    let mut elem_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut state = vec![Node::Variable; n];
    let mut degree: Vec<usize> = var_adj.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();

    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut wmark = vec![0usize; n];
    let mut w = vec![0isize; n];
    let mut order = Vec::with_capacity(n);

    for k in 0..n {
        let (_, p) = queue.pop_first().expect("one variable per step");
        order.push(p);
        stamp += 1;
        mark[p] = stamp;

        // L_p: variables reachable from p directly or through its elements
        let mut lp = Vec::new();
        for &j in &var_adj[p] {
            if state[j] == Node::Variable && mark[j] != stamp {
                mark[j] = stamp;
                lp.push(j);
            }
        }
        let absorbed = std::mem::take(&mut elem_adj[p]);
        for &e in &absorbed {
            for &j in &members[e] {
                if state[j] == Node::Variable && mark[j] != stamp {
                    mark[j] = stamp;
                    lp.push(j);
                }
            }
            state[e] = Node::Absorbed;
            members[e] = Vec::new();
        }
        state[p] = Node::Element;
        var_adj[p] = Vec::new();

        for &i in &lp {
            elem_adj[i].retain(|&e| state[e] == Node::Element);
            elem_adj[i].push(p);
            var_adj[i].retain(|&j| state[j] == Node::Variable && mark[j] != stamp);
        }

        // w(e) = |L_e \ L_p| for every element touching L_p
        for &i in &lp {
            for &e in &elem_adj[i] {
                if e == p {
                    continue;
                }
                if wmark[e] != stamp {
                    wmark[e] = stamp;
                    w[e] = members[e].len() as isize;
                }
                w[e] -= 1;
            }
        }

        let remaining = n - k - 1;
        let lp_ext = lp.len().saturating_sub(1);
        for &i in &lp {
            let mut bound = var_adj[i].len() + lp_ext;
            for &e in &elem_adj[i] {
                if e != p {
                    bound += w[e].max(0) as usize;
                }
            }
            let d = bound.min(degree[i] + lp_ext).min(remaining.saturating_sub(1));
            if d != degree[i] {
                queue.remove(&(degree[i], i));
                degree[i] = d;
                queue.insert((d, i));
            }
        }
        members[p] = lp;
    }
    order
}

/// Number of nonzeros (diagonal included) in the Cholesky factor of `s`
/// under the symmetric ordering `perm`, from symbolic elimination.
pub fn symbolic_cholesky_nnz(s: &SparseCsr, perm: &[usize]) -> usize {
    let n = s.n_rows();
    let mut inv = vec![0; n];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    // strictly-lower pattern of each permuted column
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (new_j, &old_j) in perm.iter().enumerate() {
        let (c, _) = s.row(old_j);
        let mut v: Vec<usize> = c.iter().map(|&x| inv[x]).filter(|&i| i > new_j).collect();
        v.sort_unstable();
        cols[new_j] = v;
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut nnz = 0;
    for j in 0..n {
        let mut set = std::mem::take(&mut cols[j]);
        for c in std::mem::take(&mut children[j]) {
            set.extend(cols[c].iter().copied().filter(|&i| i > j));
        }
        set.sort_unstable();
        set.dedup();
        nnz += set.len() + 1;
        if let Some(&parent) = set.first() {
            children[parent].push(j);
        }
        cols[j] = set;
    }
    nnz
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_permutation(p: &[usize], n: usize) -> bool {
        let mut seen = vec![false; n];
        p.len() == n && p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
    }

    #[test]
    fn zero_rows_shift_to_the_end() {
        let s = SparseCsr::from_triplets(4, 4, vec![(0, 0, 1.0), (2, 2, 3.0)]).unwrap();
        let p = amd_ordering(&s);
        assert_eq!(&p[..2], &[0, 2]);
        assert_eq!(&p[2..], &[1, 3]);
    }

    fn arrow(n: usize, tip: usize) -> SparseCsr {
        let mut e = vec![];
        for i in 0..n {
            e.push((i, i, 4.0));
            if i != tip {
                e.push((i, tip, 1.0));
                e.push((tip, i, 1.0));
            }
        }
        SparseCsr::from_triplets(n, n, e).unwrap()
    }

    #[test]
    fn arrow_tip_is_ordered_late() {
        let s = arrow(8, 0);
        let p = amd_ordering(&s);
        assert!(is_permutation(&p, 8));
        // with two nodes left the tip ties with the last leaf
        assert!(p[6..].contains(&0));
        let natural: Vec<usize> = (0..8).collect();
        let amd_fill = symbolic_cholesky_nnz(&s, &p);
        assert!(amd_fill <= symbolic_cholesky_nnz(&s, &natural));
        // tip last gives no fill: n diagonals + n-1 off-diagonals
        assert_eq!(amd_fill, 15);
        // tip first fills the whole lower triangle
        assert_eq!(symbolic_cholesky_nnz(&s, &natural), 36);
    }

    fn grid_laplacian(k: usize) -> SparseCsr {
        let mut e = vec![];
        for r in 0..k {
            for c in 0..k {
                let i = r * k + c;
                e.push((i, i, 4.0));
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
        SparseCsr::from_triplets(k * k, k * k, e).unwrap()
    }

    #[test]
    fn grid_fill_not_worse_than_natural() {
        let s = grid_laplacian(12);
        let p = amd_ordering(&s);
        assert!(is_permutation(&p, 144));
        let natural: Vec<usize> = (0..144).collect();
        let a = symbolic_cholesky_nnz(&s, &p);
        let b = symbolic_cholesky_nnz(&s, &natural);
        assert!(a < b, "amd {a} vs natural {b}");
    }

    #[test]
    fn symbolic_fill_matches_dense_elimination() {
        // brute-force: eliminate on a dense boolean pattern
        let s = grid_laplacian(4);
        let perm: Vec<usize> = (0..16).rev().collect();
        let n = 16;
        let mut pat = vec![vec![false; n]; n];
        for (a, &pa) in perm.iter().enumerate() {
            for (b, &pb) in perm.iter().enumerate() {
                pat[a][b] = s.get(pa, pb) != 0.0;
            }
        }
        for k in 0..n {
            for i in k + 1..n {
                for j in k + 1..n {
                    if pat[i][k] && pat[k][j] {
                        pat[i][j] = true;
                    }
                }
            }
        }
        let brute: usize = (0..n).map(|j| 1 + (j + 1..n).filter(|&i| pat[i][j]).count()).sum();
        assert_eq!(symbolic_cholesky_nnz(&s, &perm), brute);
    }

    #[test]
    fn ordering_is_deterministic() {
        let s = grid_laplacian(9);
        assert_eq!(amd_ordering(&s), amd_ordering(&s));
    }
}
