use serde::Serialize;

use super::{NumericsError, SymmetricMatrix};

/// Sparse symmetric matrix: dense diagonal plus strictly-upper entries.
///
/// Off-diagonal entries are stored once as `(i, j, value)` with `i < j`,
/// sorted, unique and nonzero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    diag: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetricMatrix {
    /// Builds from a diagonal and off-diagonal triplets in either triangle.
    /// Zero values are dropped.
    pub fn new(diag: Vec<f64>, entries: Vec<(usize, usize, f64)>) -> Result<Self, NumericsError> {
        let dim = diag.len();
        if dim == 0 {
            return Err(NumericsError::DimensionMismatch { expected: 1, found: 0 });
        }
        for (i, v) in diag.iter().enumerate() {
            if !v.is_finite() {
                return Err(NumericsError::NonFinite { row: i, col: i });
            }
        }
        let mut norm = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            if i >= dim || j >= dim || i == j {
                return Err(NumericsError::IndexOutOfBounds { row: i, col: j, dim });
            }
            if !v.is_finite() {
                return Err(NumericsError::NonFinite { row: i, col: j });
            }
            if v != 0.0 {
                norm.push((i.min(j), i.max(j), v));
            }
        }
        norm.sort_by_key(|e| (e.0, e.1));
        for w in norm.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(NumericsError::DuplicateEntry { row: w[0].0, col: w[0].1 });
            }
        }
        Ok(Self { dim, diag, entries: norm })
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        Self { dim: diag.len(), diag, entries: Vec::new() }
    }

    /// Keeps every exactly-nonzero off-diagonal entry of `m`.
    pub fn from_dense(m: &SymmetricMatrix) -> Self {
        Self::from_dense_with_cutoff(m, 0.0)
    }

    /// Keeps off-diagonal entries with magnitude above `cutoff`.
    pub fn from_dense_with_cutoff(m: &SymmetricMatrix, cutoff: f64) -> Self {
        let dim = m.dim();
        let mut entries = Vec::new();
        for i in 0..dim {
            for (j, &v) in m.row(i).iter().enumerate().skip(i + 1) {
                if v.abs() > cutoff {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim, diag: m.diagonal(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Strictly-upper entries `(i, j, value)`, `i < j`, sorted.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Number of stored strictly-upper entries (edges of the support graph).
    pub fn edge_count(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let key = (i.min(j), i.max(j));
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&key)) {
            Ok(p) => self.entries[p].2,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::from_diagonal(&self.diag);
        for &(i, j, v) in &self.entries {
            m.set(i, j, v);
        }
        m
    }

    /// Neighbor lists with the connecting value, sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.dim];
        for &(i, j, v) in &self.entries {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        for list in &mut adj {
            list.sort_by_key(|e| e.0);
        }
        adj
    }

    /// Principal submatrix on `vertices`, re-indexed in the given order.
    pub fn submatrix(&self, vertices: &[usize]) -> SparseSymmetricMatrix {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let diag = vertices.iter().map(|&v| self.diag[v]).collect();
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .filter(|e| local[e.0] != usize::MAX && local[e.1] != usize::MAX)
            .map(|&(i, j, v)| (local[i].min(local[j]), local[i].max(local[j]), v))
            .collect();
        entries.sort_by_key(|e| (e.0, e.1));
        SparseSymmetricMatrix { dim: vertices.len(), diag, entries }
    }

    /// Largest off-diagonal magnitude.
    pub fn max_offdiag_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.2.abs()))
    }

    /// Sum of absolute off-diagonal entries over both triangles.
    pub fn norm_1_off(&self) -> f64 {
        2.0 * self.entries.iter().map(|e| e.2.abs()).sum::<f64>()
    }

    pub fn frobenius(&self) -> f64 {
        let d: f64 = self.diag.iter().map(|v| v * v).sum();
        let o: f64 = self.entries.iter().map(|e| e.2 * e.2).sum();
        (d + 2.0 * o).sqrt()
    }

    /// `tr(self * dense)` using only stored entries.
    pub fn trace_product_dense(&self, m: &SymmetricMatrix) -> f64 {
        let mut t: f64 = self.diag.iter().enumerate().map(|(i, v)| v * m.get(i, i)).sum();
        for &(i, j, v) in &self.entries {
            t += 2.0 * v * m.get(i, j);
        }
        t
    }

    /// Returns a copy with every value multiplied entrywise by `s_i s_j`.
    pub fn scaled(&self, s: &[f64]) -> SparseSymmetricMatrix {
        assert_eq!(s.len(), self.dim);
        SparseSymmetricMatrix {
            dim: self.dim,
            diag: self.diag.iter().zip(s).map(|(v, si)| v * si * si).collect(),
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s[i] * s[j])).collect(),
        }
    }

    /// Off-diagonal support as `(i, j)` pairs with `i < j`, ignoring
    /// entries of magnitude at most `cutoff`.
    pub fn support(&self, cutoff: f64) -> Vec<(usize, usize)> {
        self.entries.iter().filter(|e| e.2.abs() > cutoff).map(|e| (e.0, e.1)).collect()
    }

    /// Dense rows of `self * dense` for row `i`.
    pub fn row_times_dense(&self, adjacency: &[Vec<(usize, f64)>], i: usize, m: &SymmetricMatrix, out: &mut [f64]) {
        out.copy_from_slice(m.row(i));
        let di = self.diag[i];
        out.iter_mut().for_each(|v| *v *= di);
        for &(k, a) in &adjacency[i] {
            super::kernels::axpy(a, m.row(k), out);
        }
    }
}
