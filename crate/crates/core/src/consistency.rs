//! Maximum-determinant completion of a partially specified matrix and the
//! consistency predicates built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::closed_form::path_sum_matrix;
use crate::graph::{decompose, is_acyclic, SupportGraph};
use crate::numerics::{cholesky, inverse, NumericsError, SparseSymmetricMatrix, SymmetricMatrix};

/// Magnitude at or below which an entry is treated as zero.
pub const ZERO_CUTOFF: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionResult {
    /// Values on the free pairs; zero on the diagonal and the support.
    pub complement: SymmetricMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|K_ij| / sqrt(K_ii K_jj)` over free pairs, `K = (M + N)^{-1}`.
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error("no positive definite completion found")]
    NoPdCompletion,
    #[error("completion stopped after {} sweeps with residual {:e}", .0.iterations, .0.residual)]
    NonConvergence(Box<CompletionResult>),
    #[error("starting completion is not positive definite")]
    StartNotPositiveDefinite,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn free_pairs(m: &SparseSymmetricMatrix) -> Vec<(usize, usize)> {
    let d = m.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if m.get(i, j) == 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Fill of the free pairs by averaged products along breadth-first paths.
/// Equals the path-product completion on a forest.
fn path_product_fill(m: &SparseSymmetricMatrix) -> SymmetricMatrix {
    let d = m.dim();
    let g = SupportGraph::from_sparse(m);
    let mut fill = SymmetricMatrix::zeros(d);
    let mut prod = vec![0.0f64; d];
    let mut seen = vec![false; d];
    let mut queue = std::collections::VecDeque::new();
    for root in 0..d {
        seen.iter_mut().for_each(|s| *s = false);
        seen[root] = true;
        prod[root] = 1.0;
        queue.push_back(root);
        let mut reached = vec![root];
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    prod[v] = prod[u] * m.get(u, v);
                    reached.push(v);
                    queue.push_back(v);
                }
            }
        }
        for v in reached {
            if v != root && !g.has_edge(root, v) {
                let cur = fill.get(root, v);
                fill.set(root, v, cur + 0.5 * prod[v]);
            }
        }
    }
    fill
}

fn candidate_starts(m: &SparseSymmetricMatrix) -> Vec<SymmetricMatrix> {
    let d = m.dim();
    let mut out = vec![SymmetricMatrix::zeros(d), path_product_fill(m)];
    if let Ok(r) = path_sum_matrix(m, 10_000) {
        let mut fill = r.sub(&m.to_dense());
        for i in 0..d {
            fill.set(i, i, 0.0);
        }
        out.push(fill);
    }
    out
}

/// Maximum-determinant completion of the partially specified `m`, whose
/// specified entries are its diagonal and off-diagonal support.
///
/// Sweeps stop once the residual is below `tol`, or once it sits at rounding
/// level and stops improving; a residual within rounding of the conditioning
/// of `M + N` counts as converged. Convergence is linear and slows markedly
/// as `M + N` approaches singularity (thousands of sweeps near `|m_ij| = 0.9`).
pub fn max_det_completion(m: &SparseSymmetricMatrix, tol: f64, max_iter: usize) -> Result<CompletionResult, ConsistencyError> {
    let base = m.to_dense();
    for start in candidate_starts(m) {
        if cholesky(&base.add(&start)).is_ok() {
            return complete(m, start, tol, max_iter);
        }
    }
    Err(ConsistencyError::NoPdCompletion)
}

/// As [`max_det_completion`] from a given positive definite starting fill.
pub fn max_det_completion_from(
    m: &SparseSymmetricMatrix,
    start: &SymmetricMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<CompletionResult, ConsistencyError> {
    let mut fill = start.clone();
    for i in 0..m.dim() {
        fill.set(i, i, 0.0);
    }
    for &(i, j, _) in m.entries() {
        fill.set(i, j, 0.0);
    }
    if cholesky(&m.to_dense().add(&fill)).is_err() {
        return Err(ConsistencyError::StartNotPositiveDefinite);
    }
    complete(m, fill, tol, max_iter)
}

/// Sweeps at rounding level without a new smallest residual before stopping.
const STALL_SWEEPS: usize = 5;

fn inf_norm(m: &SymmetricMatrix) -> f64 {
    (0..m.dim()).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Cyclic coordinate ascent on `log det`: each free entry is moved to the
/// value that zeroes the matching entry of the inverse.
fn complete(m: &SparseSymmetricMatrix, mut fill: SymmetricMatrix, tol: f64, max_iter: usize) -> Result<CompletionResult, ConsistencyError> {
    let d = m.dim();
    let pairs = free_pairs(m);
    let base = m.to_dense();
    let mut x = base.add(&fill);
    let mut k = inverse(&x)?;
    let residual_of = |k: &SymmetricMatrix| {
        pairs.iter().fold(0.0f64, |a, &(i, j)| a.max(k.get(i, j).abs() / (k.get(i, i) * k.get(j, j)).sqrt()))
    };
    let mut residual = residual_of(&k);
    let mut best = residual;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut ki = vec![0.0f64; d];
    let mut kj = vec![0.0f64; d];
    let floor_of = |x: &SymmetricMatrix, k: &SymmetricMatrix| d as f64 * f64::EPSILON * inf_norm(x) * inf_norm(k);
    let mut floor = floor_of(&x, &k);
    while residual > tol && iterations < max_iter && !(residual <= floor && stalled >= STALL_SWEEPS) {
        iterations += 1;
        for &(i, j) in &pairs {
            let (kii, kjj, kij) = (k.get(i, i), k.get(j, j), k.get(i, j));
            if kij == 0.0 {
                continue;
            }
            let t = kij / (kii * kjj - kij * kij);
            fill.set(i, j, fill.get(i, j) + t);
            x.set(i, j, base.get(i, j) + fill.get(i, j));
            // Rank-two update of the inverse for X + t (e_i e_j^T + e_j e_i^T).
            let delta = (1.0 + t * kij).powi(2) - t * t * kii * kjj;
            let scale = t / delta;
            let z11 = -scale * t * kjj;
            let z22 = -scale * t * kii;
            let z12 = scale * (1.0 + t * kij);
            ki.copy_from_slice(k.row(i));
            kj.copy_from_slice(k.row(j));
            for a in 0..d {
                let (ai, aj) = (ki[a], kj[a]);
                let ca = z11 * ai + z12 * aj;
                let cb = z12 * ai + z22 * aj;
                for b in a..d {
                    let v = k.get(a, b) - (ca * ki[b] + cb * kj[b]);
                    k.set(a, b, v);
                }
            }
        }
        k = inverse(&x)?;
        residual = residual_of(&k);
        floor = floor_of(&x, &k);
        if residual < best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
    let result = CompletionResult { complement: fill, iterations, converged: residual <= tol.max(floor), residual };
    if result.converged {
        Ok(result)
    } else {
        Err(ConsistencyError::NonConvergence(Box::new(result)))
    }
}

/// `N` is zero on the diagonal and support of `m`, `M + N` is positive
/// definite and its inverse vanishes on the free pairs.
pub fn is_inverse_consistent(m: &SparseSymmetricMatrix, n: &SymmetricMatrix) -> bool {
    let d = m.dim();
    for i in 0..d {
        if n.get(i, i).abs() > ZERO_CUTOFF {
            return false;
        }
    }
    if m.entries().iter().any(|&(i, j, _)| n.get(i, j).abs() > ZERO_CUTOFF) {
        return false;
    }
    let x = m.to_dense().add(n);
    let Ok(k) = inverse(&x) else { return false };
    free_pairs(m).iter().all(|&(i, j)| k.get(i, j).abs() <= ZERO_CUTOFF)
}

/// Every support entry of `(M + N)^{-1}` is nonzero with sign opposite to `M`.
pub fn is_sign_consistent(m: &SparseSymmetricMatrix, n: &SymmetricMatrix) -> bool {
    let Ok(k) = inverse(&m.to_dense().add(n)) else { return false };
    m.entries().iter().all(|&(i, j, v)| {
        let kij = k.get(i, j);
        kij.abs() > ZERO_CUTOFF && kij.signum() == -v.signum()
    })
}

/// Whether some positive definite matrix agrees with `m` on its diagonal
/// and support, judged by the availability of a positive definite start.
pub fn has_pd_completion(m: &SparseSymmetricMatrix) -> bool {
    let base = m.to_dense();
    candidate_starts(m).iter().any(|s| cholesky(&base.add(s)).is_ok())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaEstimate {
    /// Largest free-entry magnitude of the completion over all trials.
    pub value: f64,
    /// Known value when the graph is a forest.
    pub exact: Option<f64>,
    pub trials: usize,
    pub rejected: usize,
}

/// Monte Carlo lower estimate of the largest completion entry over unit
/// diagonal matrices on `g` with off-diagonal magnitudes at most `alpha`.
///
/// With `extreme`, every edge magnitude is exactly `alpha` with random sign.
pub fn beta_empirical(g: &SupportGraph, alpha: f64, trials: usize, seed: u64, extreme: bool) -> BetaEstimate {
    let d = g.dim();
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let dec = decompose(g);
    let outcomes: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut rejected = 0;
            for _ in 0..100 {
                let entries: Vec<_> = edges
                    .iter()
                    .map(|&(i, j)| {
                        let mag = if extreme { alpha } else { alpha * (1.0 - rng.random::<f64>()) };
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        (i, j, sign * mag)
                    })
                    .collect();
                let m = SparseSymmetricMatrix::new(vec![1.0; d], entries).expect("edges are valid");
                match max_det_completion(&m, 1e-12, 10_000) {
                    Ok(r) => return (largest_within_components(&r.complement, &dec), rejected),
                    Err(ConsistencyError::NonConvergence(r)) => return (largest_within_components(&r.complement, &dec), rejected),
                    Err(_) => rejected += 1,
                }
            }
            (0.0, rejected)
        })
        .collect();
    let value = outcomes.iter().fold(0.0f64, |a, o| a.max(o.0));
    let rejected = outcomes.iter().map(|o| o.1).sum();
    let exact = is_acyclic(g).then(|| if g.max_degree() >= 2 { alpha * alpha } else { 0.0 });
    BetaEstimate { value, exact, trials, rejected }
}

fn largest_within_components(n: &SymmetricMatrix, dec: &crate::graph::ComponentDecomposition) -> f64 {
    let mut best = 0.0f64;
    for comp in dec.components() {
        for (a, &i) in comp.iter().enumerate() {
            for &j in &comp[a + 1..] {
                best = best.max(n.get(i, j).abs());
            }
        }
    }
    best
}
