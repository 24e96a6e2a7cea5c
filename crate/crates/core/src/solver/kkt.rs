use serde::Serialize;

use crate::covariance::CovarianceInput;
use crate::graph::{decompose, ComponentDecomposition, SupportGraph};
use crate::numerics::{cholesky, NumericsError, SparseSymmetricMatrix, SymmetricMatrix};
use crate::solution::{KktClause, KktReport};

/// `-log det X + tr(S X) + lambda ||X||_{1,off}` for a dense `X`.
pub fn gl_objective(x: &SymmetricMatrix, c: &CovarianceInput, lambda: f64) -> Result<f64, NumericsError> {
    let ld = cholesky(x)?.log_det();
    Ok(-ld + x.trace_product(c.matrix()) + lambda * x.norm_1_off())
}

/// Objective for a sparse `X`, factoring each connected block separately.
pub fn gl_objective_sparse(x: &SparseSymmetricMatrix, c: &CovarianceInput, lambda: f64) -> Result<f64, NumericsError> {
    let dec = decompose(&SupportGraph::from_sparse(x));
    Ok(-sparse_log_det(x, &dec)? + x.trace_product_dense(c.matrix()) + lambda * x.norm_1_off())
}

pub(crate) fn sparse_log_det(x: &SparseSymmetricMatrix, dec: &ComponentDecomposition) -> Result<f64, NumericsError> {
    let mut ld = 0.0;
    for comp in dec.components() {
        if comp.len() == 1 {
            let v = x.diag()[comp[0]];
            if !(v > 0.0) {
                return Err(NumericsError::NotPositiveDefinite { pivot: comp[0], value: v });
            }
            ld += v.ln();
        } else {
            ld += cholesky(&x.submatrix(comp).to_dense()).map_err(|e| remap_pivot(e, comp))?.log_det();
        }
    }
    Ok(ld)
}

fn remap_pivot(e: NumericsError, comp: &[usize]) -> NumericsError {
    match e {
        NumericsError::NotPositiveDefinite { pivot, value } => NumericsError::NotPositiveDefinite { pivot: comp[pivot], value },
        other => other,
    }
}

/// Largest violation of the optimality conditions of `x`, using `W = X^{-1}`.
/// The support is the set of exactly-nonzero off-diagonal entries.
pub fn exact_kkt_residual(x: &SymmetricMatrix, c: &CovarianceInput, lambda: f64) -> Result<KktReport, NumericsError> {
    exact_kkt_residual_sparse(&SparseSymmetricMatrix::from_dense(x), c, lambda)
}

/// Sparse variant: inverts each connected block of the support.
pub fn exact_kkt_residual_sparse(
    x: &SparseSymmetricMatrix,
    c: &CovarianceInput,
    lambda: f64,
) -> Result<KktReport, NumericsError> {
    let d = x.dim();
    let dec = decompose(&SupportGraph::from_sparse(x));
    let mut report = KktReport::zero();
    for comp in dec.components() {
        let w = if comp.len() == 1 {
            let v = x.diag()[comp[0]];
            if !(v > 0.0) {
                return Err(NumericsError::NotPositiveDefinite { pivot: comp[0], value: v });
            }
            SymmetricMatrix::from_diagonal(&[1.0 / v])
        } else {
            cholesky(&x.submatrix(comp).to_dense()).map_err(|e| remap_pivot(e, comp))?.inverse()
        };
        for (a, &i) in comp.iter().enumerate() {
            report.consider((w.get(a, a) - c.get(i, i)).abs(), i, i, KktClause::Diagonal);
            for (b, &j) in comp.iter().enumerate().skip(a + 1) {
                let diff = w.get(a, b) - c.get(i, j);
                let xij = x.get(i, j);
                if xij != 0.0 {
                    report.consider((diff - lambda * xij.signum()).abs(), i, j, KktClause::Support);
                } else {
                    report.consider(diff.abs() - lambda, i, j, KktClause::OffSupport);
                }
            }
        }
    }
    // Pairs in different blocks have W_ij = 0.
    for i in 0..d {
        let ci = dec.component_of(i);
        let row = c.matrix().row(i);
        for (j, &s) in row.iter().enumerate().skip(i + 1) {
            if dec.component_of(j) != ci {
                report.consider(s.abs() - lambda, i, j, KktClause::OffSupport);
            }
        }
    }
    Ok(report)
}

/// Per-clause violations of the relaxed optimality conditions for a pair
/// `(A, B)` where `B` is meant to approximate `A^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelaxedKkt {
    pub holds: bool,
    /// `max |(A B - I)_ij|`
    pub inverse_residual: f64,
    pub diagonal_residual: f64,
    /// `max |B_ij - S_ij - lambda sign(A_ij)|` on the support of `A`.
    pub support_residual: f64,
    /// `max |B_ij - S_ij| - lambda` off the support of `A`.
    pub off_support_excess: f64,
    pub report: KktReport,
}

pub fn relaxed_kkt_check(
    a: &SparseSymmetricMatrix,
    b: &SymmetricMatrix,
    c: &CovarianceInput,
    lambda: f64,
    eps: f64,
) -> RelaxedKkt {
    let d = a.dim();
    let adj = a.adjacency();
    let mut report = KktReport::zero();
    let mut row = vec![0.0; d];
    let mut inverse_residual = 0.0f64;
    for i in 0..d {
        a.row_times_dense(&adj, i, b, &mut row);
        for (j, &v) in row.iter().enumerate() {
            let e = if i == j { (v - 1.0).abs() } else { v.abs() };
            inverse_residual = inverse_residual.max(e);
            report.consider(e, i, j, KktClause::Inverse);
        }
    }
    let mut diagonal_residual = 0.0f64;
    let mut support_residual = 0.0f64;
    let mut off_support_excess = f64::NEG_INFINITY;
    for i in 0..d {
        let sii = c.get(i, i);
        let dv = (b.get(i, i) - sii).abs();
        diagonal_residual = diagonal_residual.max(dv);
        report.consider(dv, i, i, KktClause::Diagonal);
        for j in i + 1..d {
            let diff = b.get(i, j) - c.get(i, j);
            let aij = a.get(i, j);
            if aij != 0.0 {
                let v = (diff - lambda * aij.signum()).abs();
                support_residual = support_residual.max(v);
                report.consider(v, i, j, KktClause::Support);
            } else {
                let v = diff.abs() - lambda;
                off_support_excess = off_support_excess.max(v);
                report.consider(v, i, j, KktClause::OffSupport);
            }
        }
    }
    let diag_scale = c.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
    let holds = inverse_residual <= eps
        && diagonal_residual <= 8.0 * f64::EPSILON * diag_scale
        && support_residual <= eps
        && off_support_excess <= eps;
    RelaxedKkt { holds, inverse_residual, diagonal_residual, support_residual, off_support_excess, report }
}
