use super::cholesky::factor;
use super::{NumericsError, SymmetricMatrix};

const MAX_BISECTIONS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremeEigenvalues {
    pub min: f64,
    pub max: f64,
}

/// Smallest and largest eigenvalue of `m`, each within `tol * (|max| + 1)`.
///
/// Bisection on shifted Cholesky factorizations: `m - t I` is positive
/// definite exactly when `t` is below the smallest eigenvalue.
pub fn extreme_eigenvalues(m: &SymmetricMatrix, tol: f64) -> Result<ExtremeEigenvalues, NumericsError> {
    let n = m.dim();
    let mut lo_bound = f64::INFINITY;
    let mut hi_bound = f64::NEG_INFINITY;
    let mut min_diag = f64::INFINITY;
    let mut max_diag = f64::NEG_INFINITY;
    for i in 0..n {
        let row = m.row(i);
        let radius: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
        lo_bound = lo_bound.min(row[i] - radius);
        hi_bound = hi_bound.max(row[i] + radius);
        min_diag = min_diag.min(row[i]);
        max_diag = max_diag.max(row[i]);
    }
    let width = tol.max(0.0) * (hi_bound.abs().max(lo_bound.abs()) + 1.0);

    // Smallest eigenvalue lies in [lo_bound, min_diag].
    let (mut lo, mut hi) = (lo_bound, min_diag);
    let mut steps = 0;
    while hi - lo > width {
        if steps == MAX_BISECTIONS {
            return Err(NumericsError::NonConvergence { iterations: steps });
        }
        let t = 0.5 * (lo + hi);
        if factor(m, t, 0.0).is_ok() {
            lo = t;
        } else {
            hi = t;
        }
        steps += 1;
    }
    let min = 0.5 * (lo + hi);

    // Largest eigenvalue lies in [max_diag, hi_bound]; test t I - m.
    let neg = SymmetricMatrix::from_row_major_unchecked(n, m.as_slice().iter().map(|v| -v).collect());
    let (mut lo, mut hi) = (max_diag, hi_bound);
    steps = 0;
    while hi - lo > width {
        if steps == MAX_BISECTIONS {
            return Err(NumericsError::NonConvergence { iterations: steps });
        }
        let t = 0.5 * (lo + hi);
        if factor(&neg, -t, 0.0).is_ok() {
            hi = t;
        } else {
            lo = t;
        }
        steps += 1;
    }
    let max = 0.5 * (lo + hi);
    Ok(ExtremeEigenvalues { min, max })
}
