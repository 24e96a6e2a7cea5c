//! Block coordinate descent on the covariance estimate `W`, one column at a
//! time, each column update being a lasso solved by coordinate descent.

use crate::covariance::CovarianceInput;
use crate::numerics::{axpy, cholesky, inverse, SparseSymmetricMatrix, SymmetricMatrix};
use crate::solution::KktReport;

use super::kkt::exact_kkt_residual_sparse;
use super::SolverError;

const MAX_INNER_PASSES: usize = 10_000;

pub(crate) struct Outcome {
    pub theta: SparseSymmetricMatrix,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt: KktReport,
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// A positive definite `W` with `W_ii = S_ii` and `|W_ij - S_ij| <= lambda`.
fn feasible_start(sigma: &SymmetricMatrix, lambda: f64, init: Option<&SparseSymmetricMatrix>) -> Option<SymmetricMatrix> {
    let d = sigma.dim();
    let project = |w: &mut SymmetricMatrix| {
        for i in 0..d {
            w.set(i, i, sigma.get(i, i));
            for j in i + 1..d {
                let s = sigma.get(i, j);
                w.set(i, j, w.get(i, j).clamp(s - lambda, s + lambda));
            }
        }
    };
    let pd = |w: &SymmetricMatrix| cholesky(w).is_ok();

    // Diagonal plus soft-thresholded off-diagonal part.
    let thresholded = SymmetricMatrix::from_fn(d, |i, j| {
        let s = sigma.get(i, j);
        if i == j {
            s
        } else {
            soft(s, lambda)
        }
    });
    // Shrinkage of the covariance toward its diagonal, PD whenever S is PSD.
    let largest = sigma.max_offdiag_abs();
    let mu = if largest > 0.0 { (lambda / largest).min(1.0) } else { 1.0 };
    let shrunk = SymmetricMatrix::from_fn(d, |i, j| if i == j { sigma.get(i, i) } else { (1.0 - mu) * sigma.get(i, j) });

    let mut safe = Vec::new();
    for cand in [thresholded, shrunk] {
        if pd(&cand) {
            safe.push(cand);
        }
    }

    if let Some(x) = init {
        if let Ok(mut w) = inverse(&x.to_dense()) {
            project(&mut w);
            if pd(&w) {
                return Some(w);
            }
            // Back off toward a safe start.
            for s in &safe {
                let mut t = 0.5;
                while t > 1e-3 {
                    let blend = SymmetricMatrix::from_fn(d, |i, j| (1.0 - t) * w.get(i, j) + t * s.get(i, j));
                    if pd(&blend) {
                        return Some(blend);
                    }
                    t *= 0.5;
                }
            }
        }
    }
    safe.into_iter().next()
}

/// Solves the problem on a dense covariance block.
pub(crate) fn solve_block(
    c: &CovarianceInput,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    init: Option<&SparseSymmetricMatrix>,
) -> Result<Outcome, SolverError> {
    let sigma = c.matrix();
    let d = sigma.dim();
    if d == 1 {
        let theta = SparseSymmetricMatrix::from_diagonal(vec![1.0 / sigma.get(0, 0)]);
        return Ok(Outcome { theta, sweeps: 0, converged: true, kkt: KktReport::zero() });
    }
    let mut w = feasible_start(sigma, lambda, init).ok_or(SolverError::NoFeasibleStart)?;

    // beta[j * d + k]: regression coefficient of column j on variable k.
    let mut beta = vec![0.0f64; d * d];
    if let Some(x) = init {
        for &(i, j, v) in x.entries() {
            beta[j * d + i] = -v / x.diag()[j];
            beta[i * d + j] = -v / x.diag()[i];
        }
    }

    let mut v = vec![0.0f64; d];
    let mut threshold = tol.max(1e-15);
    let mut sweeps = 0;
    let mut best: Option<(SparseSymmetricMatrix, KktReport)> = None;
    let mut stalled = 0;
    loop {
        if sweeps >= max_iter || stalled >= 4 {
            let (theta, kkt) = match best {
                Some(b) => b,
                None => {
                    let theta = assemble(&w, &beta, sigma);
                    let kkt = exact_kkt_residual_sparse(&theta, c, lambda).unwrap_or(KktReport {
                        max_violation: f64::INFINITY,
                        ..KktReport::zero()
                    });
                    (theta, kkt)
                }
            };
            return Ok(Outcome { theta, sweeps, converged: false, kkt });
        }
        sweeps += 1;
        let inner_tol = 0.1 * threshold;
        let mut max_change = 0.0f64;
        for j in 0..d {
            let b = &mut beta[j * d..(j + 1) * d];
            lasso_column(&w, sigma, j, lambda, inner_tol, b, &mut v);
            for (m, &vm) in v.iter().enumerate() {
                if m != j {
                    max_change = max_change.max((vm - w.get(j, m)).abs());
                    w.set(j, m, vm);
                }
            }
        }
        if max_change < threshold {
            let theta = assemble(&w, &beta, sigma);
            match exact_kkt_residual_sparse(&theta, c, lambda) {
                Ok(kkt) => {
                    if kkt.max_violation <= tol {
                        return Ok(Outcome { theta, sweeps, converged: true, kkt });
                    }
                    if best.as_ref().is_none_or(|b| kkt.max_violation < 0.5 * b.1.max_violation) {
                        best = Some((theta, kkt));
                        stalled = 0;
                    } else if threshold <= 1e-15 {
                        stalled += 1;
                    }
                }
                Err(_) if threshold <= 1e-15 => stalled += 1,
                Err(_) => {}
            }
            threshold = (threshold * 0.1).max(1e-16);
        }
    }
}

/// Coordinate descent for
/// `min 1/2 b^T W_11 b - s_12^T b + lambda |b|_1` over coordinates `k != j`.
/// On return `v = W b` (entry `j` holds `w_12^T b`).
fn lasso_column(w: &SymmetricMatrix, sigma: &SymmetricMatrix, j: usize, lambda: f64, tol: f64, b: &mut [f64], v: &mut [f64]) {
    let d = w.dim();
    v.iter_mut().for_each(|x| *x = 0.0);
    for k in 0..d {
        if k != j && b[k] != 0.0 {
            axpy(b[k], w.row(k), v);
        }
    }
    let s = sigma.row(j);
    let update = |k: usize, b: &mut [f64], v: &mut [f64]| -> f64 {
        let wkk = w.get(k, k);
        let old = b[k];
        let g = s[k] - (v[k] - wkk * old);
        let new = soft(g, lambda) / wkk;
        if new != old {
            let delta = new - old;
            b[k] = new;
            axpy(delta, w.row(k), v);
            (delta * wkk).abs()
        } else {
            0.0
        }
    };
    let mut active: Vec<usize> = Vec::new();
    for _ in 0..MAX_INNER_PASSES {
        let mut change = 0.0f64;
        for k in 0..d {
            if k != j {
                change = change.max(update(k, b, v));
            }
        }
        if change < tol {
            break;
        }
        active.clear();
        active.extend((0..d).filter(|&k| k != j && b[k] != 0.0));
        for _ in 0..MAX_INNER_PASSES {
            let mut change = 0.0f64;
            for &k in &active {
                change = change.max(update(k, b, v));
            }
            if change < tol {
                break;
            }
        }
    }
}

/// Precision estimate from the current `W` and regression coefficients,
/// symmetrized by averaging the two column estimates of each entry.
fn assemble(w: &SymmetricMatrix, beta: &[f64], sigma: &SymmetricMatrix) -> SparseSymmetricMatrix {
    let d = w.dim();
    let mut diag = vec![0.0f64; d];
    for j in 0..d {
        let b = &beta[j * d..(j + 1) * d];
        let wb: f64 = (0..d).filter(|&k| k != j && b[k] != 0.0).map(|k| w.get(j, k) * b[k]).sum();
        diag[j] = 1.0 / (sigma.get(j, j) - wb);
    }
    let mut entries = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let from_j = -beta[j * d + i] * diag[j];
            let from_i = -beta[i * d + j] * diag[i];
            let v = 0.5 * (from_i + from_j);
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    SparseSymmetricMatrix::new(diag, entries).expect("valid by construction")
}
