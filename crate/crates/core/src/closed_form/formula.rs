use crate::covariance::ResidueMatrix;
use crate::graph::{decompose, SupportGraph};
use crate::numerics::{SparseSymmetricMatrix, SymmetricMatrix};

use super::ClosedFormError;

/// Closed-form estimate built from the residue, defined for any support.
///
/// Diagonal `(1 + sum_m r_im^2 / (S_ii S_mm - r_im^2)) / S_ii`, off-diagonal
/// `-r_ij / (S_ii S_jj - r_ij^2)` on the residue support, zero elsewhere.
pub fn approx_solution(res: &ResidueMatrix<'_>) -> Result<SparseSymmetricMatrix, ClosedFormError> {
    let s = &res.scaling;
    let mut diag: Vec<f64> = vec![1.0; s.len()];
    let mut entries = Vec::with_capacity(res.residue.edge_count());
    for (&(i, j, r), &(_, _, m)) in res.residue.entries().iter().zip(res.normalized.entries()) {
        if m.abs() >= 1.0 {
            return Err(ClosedFormError::DegenerateEntry { row: i, col: j, value: m });
        }
        let denom = s[i] * s[j] - r * r;
        entries.push((i, j, -r / denom));
        diag[i] += r * r / denom;
        diag[j] += r * r / denom;
    }
    for (v, si) in diag.iter_mut().zip(s) {
        *v /= si;
    }
    Ok(SparseSymmetricMatrix::new(diag, entries).expect("valid by construction"))
}

fn check_unit_tree(m: &SparseSymmetricMatrix, g: &SupportGraph) -> Result<(), ClosedFormError> {
    let dec = decompose(g);
    if let Some(c) = (0..dec.len()).find(|&c| !dec.is_acyclic(c)) {
        return Err(ClosedFormError::NotAcyclic { component: dec.components()[c].clone() });
    }
    for &(i, j, v) in m.entries() {
        if v.abs() >= 1.0 {
            return Err(ClosedFormError::DegenerateEntry { row: i, col: j, value: v });
        }
    }
    Ok(())
}

/// Inverse of `m + N`, where `N` is the path-product completion of the
/// unit-diagonal forest matrix `m` on graph `g`.
pub fn tree_inverse(m: &SparseSymmetricMatrix, g: &SupportGraph) -> Result<SparseSymmetricMatrix, ClosedFormError> {
    check_unit_tree(m, g)?;
    let mut diag = vec![1.0; m.dim()];
    let mut entries = Vec::with_capacity(g.edge_count());
    for (i, j) in g.edges() {
        let v = m.get(i, j);
        let denom = 1.0 - v * v;
        entries.push((i, j, -v / denom));
        diag[i] += v * v / denom;
        diag[j] += v * v / denom;
    }
    Ok(SparseSymmetricMatrix::new(diag, entries).expect("valid by construction"))
}

/// Product of edge values along the unique forest path, for every pair in
/// the same component that is not joined by an edge; zero elsewhere.
pub fn tree_complement(m: &SparseSymmetricMatrix, g: &SupportGraph) -> Result<SymmetricMatrix, ClosedFormError> {
    check_unit_tree(m, g)?;
    let d = m.dim();
    let dec = decompose(g);
    let mut out = SymmetricMatrix::zeros(d);
    let mut product = vec![0.0f64; d];
    let mut stack = Vec::new();
    for comp in dec.components() {
        if comp.len() < 3 {
            continue;
        }
        for &root in comp {
            product[root] = 1.0;
            stack.push((root, usize::MAX));
            while let Some((u, from)) = stack.pop() {
                for &v in g.neighbors(u) {
                    if v != from {
                        product[v] = product[u] * m.get(u, v);
                        stack.push((v, u));
                    }
                }
            }
            for &v in comp {
                if v > root && !g.has_edge(root, v) {
                    out.set(root, v, product[v]);
                }
            }
        }
    }
    Ok(out)
}

/// Path-sum matrix of the unit-diagonal matrix `m`: entry `(i, j)` is the
/// sum over all simple paths from `i` to `j` of the product of edge values.
///
/// Fails once some pair is joined by more than `cap` paths.
pub fn path_sum_matrix(m: &SparseSymmetricMatrix, cap: u64) -> Result<SymmetricMatrix, ClosedFormError> {
    let g = SupportGraph::from_sparse(m);
    let d = m.dim();
    let dec = decompose(&g);
    let adj = m.adjacency();
    let mut out = SymmetricMatrix::identity(d);
    let mut sums = vec![0.0f64; d];
    let mut counts = vec![0u64; d];
    let mut on_path = vec![false; d];
    for comp in dec.components() {
        if comp.len() < 2 {
            continue;
        }
        for &s in comp {
            for &v in comp {
                sums[v] = 0.0;
                counts[v] = 0;
            }
            let mut stack: Vec<(usize, usize, f64)> = vec![(s, 0, 1.0)];
            on_path[s] = true;
            while let Some(top) = stack.last_mut() {
                let (u, next, prod) = *top;
                if next == adj[u].len() {
                    on_path[u] = false;
                    stack.pop();
                    continue;
                }
                top.1 += 1;
                let (v, w) = adj[u][next];
                if on_path[v] {
                    continue;
                }
                let p = prod * w;
                sums[v] += p;
                counts[v] += 1;
                if counts[v] > cap {
                    return Err(ClosedFormError::PathOverflow { cap });
                }
                on_path[v] = true;
                stack.push((v, 0, p));
            }
            for &v in comp {
                if v > s {
                    out.set(s, v, sums[v]);
                }
            }
        }
    }
    Ok(out)
}

/// Candidate inverse `D^{1/2} R D^{1/2}` of the closed form, with `R` the
/// path-sum matrix of `I + normalized residue`. The diagonal is exactly `S_ii`.
pub fn path_sum_inverse(res: &ResidueMatrix<'_>, cap: u64) -> Result<SymmetricMatrix, ClosedFormError> {
    let r = path_sum_matrix(&res.unit_matrix(), cap)?;
    let root: Vec<f64> = res.scaling.iter().map(|v| v.sqrt()).collect();
    let mut b = r.scaled(&root);
    for (i, &v) in res.scaling.iter().enumerate() {
        b.set(i, i, v);
    }
    Ok(b)
}
