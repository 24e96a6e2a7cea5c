use super::kernels::{dot, dot4};
use super::{NumericsError, SymmetricMatrix};

/// A pivot at or below this multiple of the largest diagonal magnitude is
/// treated as a positive-definiteness failure.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower-triangular Cholesky factor `L` with `M = L L^T`, row-major.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<f64>,
}

/// Factors `m`, failing when a pivot drops to `PIVOT_TOLERANCE * max|diag|`.
pub fn cholesky(m: &SymmetricMatrix) -> Result<CholeskyFactor, NumericsError> {
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    factor(m, 0.0, PIVOT_TOLERANCE * max_diag)
}

pub fn is_positive_definite(m: &SymmetricMatrix) -> bool {
    cholesky(m).is_ok()
}

pub fn log_det(m: &SymmetricMatrix) -> Result<f64, NumericsError> {
    Ok(cholesky(m)?.log_det())
}

pub fn inverse(m: &SymmetricMatrix) -> Result<SymmetricMatrix, NumericsError> {
    Ok(cholesky(m)?.inverse())
}

/// Factors `m - shift * I`; a pivot `<= floor` is reported as failure.
pub(crate) fn factor(m: &SymmetricMatrix, shift: f64, floor: f64) -> Result<CholeskyFactor, NumericsError> {
    let n = m.dim();
    let mut l = vec![0.0f64; n * n];
    let mut i0 = 0;
    while i0 < n {
        let bs = (n - i0).min(4);
        let (done, block) = l.split_at_mut(i0 * n);
        // Off-diagonal part of the row block against all finished rows.
        for j in 0..i0 {
            let lj = &done[j * n..j * n + j];
            let ljj = done[j * n + j];
            if bs == 4 {
                let s = dot4(
                    [&block[0..j], &block[n..n + j], &block[2 * n..2 * n + j], &block[3 * n..3 * n + j]],
                    lj,
                );
                for r in 0..4 {
                    block[r * n + j] = (m.get(i0 + r, j) - s[r]) / ljj;
                }
            } else {
                for r in 0..bs {
                    let s = dot(&block[r * n..r * n + j], lj);
                    block[r * n + j] = (m.get(i0 + r, j) - s) / ljj;
                }
            }
        }
        // Diagonal block.
        for r in 0..bs {
            let i = i0 + r;
            for q in 0..=r {
                let j = i0 + q;
                let s = dot(&block[r * n..r * n + j], &block[q * n..q * n + j]);
                if q == r {
                    let pivot = m.get(i, i) - shift - s;
                    if !(pivot > floor) {
                        return Err(NumericsError::NotPositiveDefinite { pivot: i, value: pivot });
                    }
                    block[r * n + i] = pivot.sqrt();
                } else {
                    block[r * n + j] = (m.get(i, j) - s) / block[q * n + j];
                }
            }
        }
        i0 += bs;
    }
    Ok(CholeskyFactor { dim: n, l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.dim..i * self.dim + i + 1]
    }

    /// Entry `L[i][j]` (zero above the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.dim + j]
        }
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l[i * self.dim + i].ln()).sum::<f64>()
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.dim {
            let row = self.row(i);
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..self.dim).rev() {
            let row = self.row(i);
            let xi = y[i] / row[i];
            y[i] = xi;
            for (yk, lk) in y[..i].iter_mut().zip(&row[..i]) {
                *yk -= lk * xi;
            }
        }
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim);
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `L z`, used to color white noise.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), &z[..=i])).collect()
    }

    /// Inverse of the factored matrix.
    pub fn inverse(&self) -> SymmetricMatrix {
        let n = self.dim;
        // Rows of U = L^{-T}: row c holds column c of L^{-1}, nonzero from c on.
        let mut u = vec![0.0f64; n * n];
        let mut c0 = 0;
        while c0 < n {
            let bs = (n - c0).min(4);
            let mut xs = vec![vec![0.0f64; n]; 4];
            for r in c0..n {
                let lrow = &self.l[r * n..r * n + r];
                let lrr = self.l[r * n + r];
                let sums = if bs == 4 {
                    dot4([&xs[0][c0..r], &xs[1][c0..r], &xs[2][c0..r], &xs[3][c0..r]], &lrow[c0..r])
                } else {
                    let mut s = [0.0; 4];
                    for (q, sq) in s.iter_mut().enumerate().take(bs) {
                        *sq = dot(&xs[q][c0..r], &lrow[c0..r]);
                    }
                    s
                };
                for q in 0..bs {
                    let c = c0 + q;
                    if r == c {
                        xs[q][r] = 1.0 / lrr;
                    } else if r > c {
                        xs[q][r] = -sums[q] / lrr;
                    }
                }
            }
            for q in 0..bs {
                let c = c0 + q;
                u[c * n + c..(c + 1) * n].copy_from_slice(&xs[q][c..]);
            }
            c0 += bs;
        }
        // S_ij = sum_{k >= max(i, j)} U[i][k] U[j][k].
        let mut s = vec![0.0f64; n * n];
        for j in 0..n {
            let uj = &u[j * n + j..(j + 1) * n];
            let mut i = 0;
            while i + 4 <= j + 1 {
                let v = dot4(
                    [
                        &u[i * n + j..(i + 1) * n],
                        &u[(i + 1) * n + j..(i + 2) * n],
                        &u[(i + 2) * n + j..(i + 3) * n],
                        &u[(i + 3) * n + j..(i + 4) * n],
                    ],
                    uj,
                );
                for r in 0..4 {
                    s[(i + r) * n + j] = v[r];
                    s[j * n + i + r] = v[r];
                }
                i += 4;
            }
            while i <= j {
                let v = dot(&u[i * n + j..(i + 1) * n], uj);
                s[i * n + j] = v;
                s[j * n + i] = v;
                i += 1;
            }
        }
        SymmetricMatrix::from_row_major_unchecked(n, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[
            vec![4.0, 2.0, 0.4, 0.0, 1.0],
            vec![2.0, 5.0, 1.0, 0.3, 0.0],
            vec![0.4, 1.0, 3.0, 0.2, 0.1],
            vec![0.0, 0.3, 0.2, 2.0, 0.5],
            vec![1.0, 0.0, 0.1, 0.5, 6.0],
        ])
        .unwrap()
    }

    #[test]
    fn two_by_two_log_det() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((log_det(&m).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_fails_at_second_pivot() {
        let m = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match cholesky(&m) {
            Err(NumericsError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_inverse_and_log_det() {
        let i = SymmetricMatrix::identity(7);
        assert_eq!(log_det(&i).unwrap(), 0.0);
        assert_eq!(inverse(&i).unwrap(), i);
    }

    #[test]
    fn singular_rank_one_fails() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = SymmetricMatrix::from_fn(5, |i, j| v[i] * v[j]);
        assert!(matches!(cholesky(&m), Err(NumericsError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = example();
        let inv = inverse(&m).unwrap();
        let p = m.matmul(&inv);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i * 5 + j] - want).abs() < 1e-13);
            }
        }
        let f = cholesky(&m).unwrap();
        let x = f.solve(&[1.0, 0.0, -1.0, 2.0, 0.5]);
        let back = m.mul_vec(&x);
        for (b, want) in back.iter().zip([1.0, 0.0, -1.0, 2.0, 0.5]) {
            assert!((b - want).abs() < 1e-13);
        }
        let lz = f.mul_lower(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((lz[0] - 2.0).abs() < 1e-15);
        assert!((lz[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blocked_paths_agree_with_unblocked_sizes() {
        for n in [1usize, 3, 4, 5, 9, 13] {
            let m = SymmetricMatrix::from_fn(n, |i, j| if i == j { n as f64 + 1.0 } else { 1.0 / (1.0 + (i + j) as f64) });
            let inv = inverse(&m).unwrap();
            let p = m.matmul(&inv);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i * n + j] - want).abs() < 1e-13, "n={n}");
                }
            }
        }
    }
}
