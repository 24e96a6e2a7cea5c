use super::NumericsError;

/// Dense real symmetric matrix stored in full row-major order.
///
/// Both triangles are kept in sync by every mutator, so `row(i)` is a
/// contiguous view of row `i` (equivalently column `i`).
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from rows, requiring symmetry up to a relative 1e-12.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(NumericsError::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(NumericsError::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// Wraps full row-major data, checking symmetry and finiteness.
    pub fn from_row_major(dim: usize, mut data: Vec<f64>) -> Result<Self, NumericsError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(NumericsError::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        for i in 0..dim {
            for j in i..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(NumericsError::NonFinite { row: i, col: j });
                }
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(NumericsError::NotSymmetric { row: i, col: j });
                }
                let avg = 0.5 * (a + b);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn from_row_major_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Largest off-diagonal magnitude (0 for a 1x1 matrix).
    pub fn max_offdiag_abs(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.dim {
            for &v in &self.row(i)[i + 1..] {
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Sum of absolute off-diagonal entries, both triangles.
    pub fn norm_1_off(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for &v in &self.row(i)[i + 1..] {
                s += v.abs();
            }
        }
        2.0 * s
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn trace_product(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        super::dot(&self.data, &other.data)
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> SymmetricMatrix {
        let n = idx.len();
        let mut data = Vec::with_capacity(n * n);
        for &i in idx {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Self::from_row_major_unchecked(n, data)
    }

    /// Returns `diag(s) * self * diag(s)`.
    pub fn scaled(&self, s: &[f64]) -> SymmetricMatrix {
        assert_eq!(s.len(), self.dim);
        let mut out = self.clone();
        for i in 0..self.dim {
            let si = s[i];
            for (v, sj) in out.data[i * self.dim..(i + 1) * self.dim].iter_mut().zip(s) {
                *v *= si * sj;
            }
        }
        out
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self::from_row_major_unchecked(self.dim, data)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self::from_row_major_unchecked(self.dim, data)
    }

    pub fn add_to_diagonal(&mut self, shift: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += shift;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| super::dot(self.row(i), x)).collect()
    }

    /// Dense product `self * other` in row-major order (generally not symmetric).
    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            let dst = &mut out[i * d..(i + 1) * d];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    super::kernels::axpy(a, other.row(k), dst);
                }
            }
        }
        out
    }
}
