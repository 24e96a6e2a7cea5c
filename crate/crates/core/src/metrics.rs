//! Accuracy measures for precision estimates and optimality gaps against a
//! reference solution.

use serde::Serialize;
use thiserror::Error;

use crate::closed_form::{approx_solution, ClosedFormError};
use crate::consistency::{max_det_completion, ConsistencyError};
use crate::covariance::{CovarianceInput, ResidueMatrix};
use crate::numerics::{cholesky, sum_compensated, NumericsError, SparseSymmetricMatrix, SymmetricMatrix};
use crate::solution::GlSolution;
use crate::solver::gl_objective_sparse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("rate undefined: the reference has no {0} pairs")]
    UndefinedRate(&'static str),
    #[error("matrix equals the identity")]
    ZeroMatrix,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("reference matrix is zero")]
    ZeroReference,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Completion(#[from] ConsistencyError),
}

fn same_dim(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::DimensionMismatch(a, b))
    }
}

/// True and false positive rates of the off-diagonal support of `est`
/// relative to `truth`; entries of `est` at or below `cutoff` count as zero.
pub fn tpr_fpr(est: &SparseSymmetricMatrix, truth: &SparseSymmetricMatrix, cutoff: f64) -> Result<(f64, f64), MetricsError> {
    same_dim(est.dim(), truth.dim())?;
    let d = est.dim();
    let pairs = d * (d - 1) / 2;
    let positives = truth.edge_count();
    let negatives = pairs - positives;
    if positives == 0 {
        return Err(MetricsError::UndefinedRate("nonzero"));
    }
    if negatives == 0 {
        return Err(MetricsError::UndefinedRate("zero"));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(i, j, v) in est.entries() {
        if v.abs() > cutoff {
            if truth.get(i, j) != 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    Ok((tp as f64 / positives as f64, fp as f64 / negatives as f64))
}

/// Off-diagonal pairs whose zero pattern differs between the two matrices.
pub fn support_mismatches(est: &SparseSymmetricMatrix, truth: &SparseSymmetricMatrix, cutoff: f64) -> usize {
    let a: std::collections::BTreeSet<_> = est.support(cutoff).into_iter().collect();
    let b: std::collections::BTreeSet<_> = truth.support(0.0).into_iter().collect();
    a.symmetric_difference(&b).count()
}

/// Cosine similarity of `s - I` and `a - I`.
pub fn similarity_degree(s: &SparseSymmetricMatrix, a: &SparseSymmetricMatrix) -> Result<f64, MetricsError> {
    same_dim(s.dim(), a.dim())?;
    let (mut dot, mut ns, mut na) = (0.0, 0.0, 0.0);
    for (x, y) in s.diag().iter().zip(a.diag()) {
        let (x, y) = (x - 1.0, y - 1.0);
        dot += x * y;
        ns += x * x;
        na += y * y;
    }
    for &(i, j, v) in s.entries() {
        dot += 2.0 * v * a.get(i, j);
        ns += 2.0 * v * v;
    }
    for &(_, _, v) in a.entries() {
        na += 2.0 * v * v;
    }
    if ns == 0.0 || na == 0.0 {
        return Err(MetricsError::ZeroMatrix);
    }
    Ok(dot / (ns.sqrt() * na.sqrt()))
}

/// `||est - truth||_F / ||truth||_F`
pub fn rel_frobenius(est: &SparseSymmetricMatrix, truth: &SparseSymmetricMatrix) -> Result<f64, MetricsError> {
    same_dim(est.dim(), truth.dim())?;
    let denom = truth.frobenius();
    if denom == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let mut sq: f64 = est.diag().iter().zip(truth.diag()).map(|(x, y)| (x - y).powi(2)).sum();
    let mut merged: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for &(i, j, v) in est.entries() {
        *merged.entry((i, j)).or_default() += v;
    }
    for &(i, j, v) in truth.entries() {
        *merged.entry((i, j)).or_default() -= v;
    }
    sq += 2.0 * merged.values().map(|v| v * v).sum::<f64>();
    Ok(sq.sqrt() / denom)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalityGap {
    /// `f(A) - f(reference)`
    pub absolute: f64,
    /// `absolute / |f(reference)|`
    pub relative: f64,
}

/// Objective difference between `a` and the reference solution.
pub fn optimality_gap(
    a: &SparseSymmetricMatrix,
    c: &CovarianceInput,
    lambda: f64,
    oracle: &GlSolution,
) -> Result<OptimalityGap, MetricsError> {
    same_dim(a.dim(), c.dim())?;
    let fa = gl_objective_sparse(a, c, lambda)?;
    let fo = gl_objective_sparse(&oracle.estimate, c, lambda)?;
    Ok(OptimalityGap { absolute: fa - fo, relative: (fa - fo) / fo.abs() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityGap {
    /// `f(A) - (log det W + d)`
    pub gap: f64,
    /// `gap / |log det W + d|`
    pub relative: f64,
    pub dual_value: f64,
    /// Largest violation of `W_ii = S_ii` and `|W_ij - S_ij| <= lambda`.
    pub dual_infeasibility: f64,
}

/// Duality gap of a primal point `a` and a dual point `w`.
///
/// The gap is assembled from terms that vanish at the optimum rather than
/// as a difference of two objectives, so it stays accurate when tiny.
pub fn duality_gap(a: &SparseSymmetricMatrix, w: &SymmetricMatrix, c: &CovarianceInput, lambda: f64) -> Result<DualityGap, MetricsError> {
    same_dim(a.dim(), w.dim())?;
    same_dim(a.dim(), c.dim())?;
    let d = a.dim();
    let wf = cholesky(w)?;
    let af = cholesky(&a.to_dense())?;

    // E = A W - I with compensated dot products.
    let adj = a.adjacency();
    let mut e = vec![0.0f64; d * d];
    for i in 0..d {
        for j in 0..d {
            let terms = std::iter::once((a.diag()[i], w.get(i, j)))
                .chain(adj[i].iter().map(|&(k, v)| (v, w.get(k, j))))
                .chain((i == j).then_some((1.0, -1.0)));
            e[i * d + j] = sum_compensated(terms);
        }
    }
    let e_norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    // tr(E) - log det(I + E)
    let spectral = if e_norm < 0.05 && d <= 400 {
        log_det_series(&e, d)
    } else {
        let trace: f64 = (0..d).map(|i| e[i * d + i]).sum();
        trace - af.log_det() - wf.log_det()
    };

    // lambda ||A||_{1,off} - sum_ij A_ij (W_ij - S_ij)
    let mut linear_terms = Vec::with_capacity(d + a.edge_count() * 2);
    let mut dual_infeasibility = 0.0f64;
    for i in 0..d {
        let diff = w.get(i, i) - c.get(i, i);
        linear_terms.push((-a.diag()[i], diff));
        dual_infeasibility = dual_infeasibility.max(diff.abs());
        for j in i + 1..d {
            dual_infeasibility = dual_infeasibility.max((w.get(i, j) - c.get(i, j)).abs() - lambda);
        }
    }
    for &(i, j, v) in a.entries() {
        let diff = w.get(i, j) - c.get(i, j);
        linear_terms.push((2.0 * v.abs(), lambda - v.signum() * diff));
    }
    let linear = sum_compensated(linear_terms);
    let gap = spectral + linear;
    let dual_value = wf.log_det() + d as f64;
    Ok(DualityGap { gap, relative: gap / dual_value.abs(), dual_value, dual_infeasibility })
}

/// Duality gap of the closed form, with the dual point taken from the
/// maximum-determinant completion of `I + normalized residue` rescaled by
/// the covariance diagonal. The best iterate is used if the completion stalls.
pub fn completion_duality_gap(res: &ResidueMatrix<'_>) -> Result<DualityGap, MetricsError> {
    let a = approx_solution(res)?;
    let m = res.unit_matrix();
    let comp = match max_det_completion(&m, 1e-15, 10_000) {
        Ok(c) => c,
        Err(ConsistencyError::NonConvergence(c)) => *c,
        Err(e) => return Err(e.into()),
    };
    let root: Vec<f64> = res.scaling.iter().map(|v| v.sqrt()).collect();
    let w = m.to_dense().add(&comp.complement).scaled(&root);
    duality_gap(&a, &w, res.covariance, res.lambda)
}

/// `sum_{k >= 2} (-1)^k tr(E^k) / k` for a small square `E`.
fn log_det_series(e: &[f64], d: usize) -> f64 {
    let mut power = e.to_vec();
    let mut next = vec![0.0f64; d * d];
    let mut total = 0.0f64;
    for k in 2..200 {
        // trace(power * E)
        let mut tr = 0.0;
        for i in 0..d {
            for j in 0..d {
                tr += power[i * d + j] * e[j * d + i];
            }
        }
        let term = if k % 2 == 0 { tr / k as f64 } else { -tr / k as f64 };
        total += term;
        if term.abs() <= 1e-18 * total.abs() || term == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..d {
            for m in 0..d {
                let p = power[i * d + m];
                if p != 0.0 {
                    for j in 0..d {
                        next[i * d + j] += p * e[m * d + j];
                    }
                }
            }
        }
        std::mem::swap(&mut power, &mut next);
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub rel_frobenius: f64,
    pub similarity: Option<f64>,
    pub support_mismatches: usize,
    pub optimality_gap: Option<f64>,
}

impl AccuracyReport {
    pub fn compare(est: &SparseSymmetricMatrix, truth: &SparseSymmetricMatrix, cutoff: f64) -> Result<Self, MetricsError> {
        let rates = tpr_fpr(est, truth, cutoff).ok();
        Ok(Self {
            tpr: rates.map(|r| r.0),
            fpr: rates.map(|r| r.1),
            rel_frobenius: rel_frobenius(est, truth)?,
            similarity: similarity_degree(truth, est).ok(),
            support_mismatches: support_mismatches(est, truth, cutoff),
            optimality_gap: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{glasso_solve, SolverConfig};

    fn path(v: f64) -> SparseSymmetricMatrix {
        SparseSymmetricMatrix::new(vec![1.0; 4], vec![(0, 1, v), (1, 2, v)]).unwrap()
    }

    #[test]
    fn rates() {
        let t = path(0.3);
        assert_eq!(tpr_fpr(&t, &t, 0.0).unwrap(), (1.0, 0.0));
        let diag = SparseSymmetricMatrix::from_diagonal(vec![1.0; 4]);
        assert_eq!(tpr_fpr(&diag, &t, 0.0).unwrap(), (0.0, 0.0));
        let full = SparseSymmetricMatrix::from_dense(&SymmetricMatrix::from_fn(4, |i, j| if i == j { 1.0 } else { 0.1 }));
        assert_eq!(tpr_fpr(&full, &t, 0.0).unwrap(), (1.0, 1.0));
        assert!(matches!(tpr_fpr(&t, &diag, 0.0), Err(MetricsError::UndefinedRate(_))));
        assert_eq!(support_mismatches(&full, &t, 0.0), 4);
    }

    #[test]
    fn similarity() {
        let a = path(0.3);
        assert!((similarity_degree(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg = SparseSymmetricMatrix::new(vec![1.0; 4], vec![(0, 1, -0.3), (1, 2, -0.3)]).unwrap();
        assert!((similarity_degree(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        let other = SparseSymmetricMatrix::new(vec![1.0; 4], vec![(2, 3, 0.5)]).unwrap();
        assert_eq!(similarity_degree(&a, &other).unwrap(), 0.0);
        let id = SparseSymmetricMatrix::from_diagonal(vec![1.0; 4]);
        assert_eq!(similarity_degree(&a, &id), Err(MetricsError::ZeroMatrix));
    }

    #[test]
    fn frobenius() {
        let a = path(0.3);
        assert_eq!(rel_frobenius(&a, &a).unwrap(), 0.0);
        let b = path(0.0);
        let expected = (2.0 * 2.0 * 0.09f64).sqrt() / (4.0 + 4.0 * 0.09f64).sqrt();
        assert!((rel_frobenius(&b, &a).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn gap_of_oracle_is_zero_and_duality_gap_agrees() {
        let m = SymmetricMatrix::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.4], vec![0.2, 0.4, 1.0]]).unwrap();
        let c = CovarianceInput::population(m).unwrap();
        let sol = glasso_solve(&c, 0.1, &SolverConfig::with_tol(1e-12)).unwrap();
        let g = optimality_gap(&sol.estimate, &c, 0.1, &sol).unwrap();
        assert_eq!(g.absolute, 0.0);
        let w = crate::numerics::inverse(&sol.estimate.to_dense()).unwrap();
        let dg = duality_gap(&sol.estimate, &w, &c, 0.1).unwrap();
        assert!(dg.gap.abs() < 1e-10, "{dg:?}");

        // A poorer primal point: the duality gap bounds the objective gap.
        let diag = SparseSymmetricMatrix::from_diagonal(vec![1.0; 3]);
        let og = optimality_gap(&diag, &c, 0.1, &sol).unwrap();
        let dg = duality_gap(&diag, &w, &c, 0.1).unwrap();
        assert!(og.absolute > 0.0);
        assert!(dg.gap >= og.absolute - 1e-10);
    }
}
