use serde::Serialize;

use crate::covariance::ResidueMatrix;
use crate::graph::{cycle_stats, decompose, PathCount, SupportGraph};
use crate::numerics::{extreme_eigenvalues, SparseSymmetricMatrix};

use super::conditions::check_conditions;
use super::ClosedFormError;

/// Why an error certificate could not be produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateGap {
    /// Simple-path enumeration exceeded its cap.
    PathOverflow,
    /// The closed form is not positive definite.
    NotPositiveDefinite,
    /// Positive definiteness or the margin condition fails.
    ConditionsNotMet,
}

/// Bound on the optimality-condition violation of the closed form, and the
/// distance and objective bounds that follow from it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonCertificate {
    pub epsilon: f64,
    pub delta: f64,
    /// Largest normalized residue magnitude.
    pub alpha: f64,
    pub girth: Option<usize>,
    pub max_degree: usize,
    pub max_paths: u64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Largest connected component of the estimate's support.
    pub max_component: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Entrywise distance bound to the optimum.
    pub perturbation_bound: f64,
    pub optimality_gap_bound: f64,
    /// The gap bound replaces the optimum's largest eigenvalue by `1 / sigma_min`.
    pub gap_bound_uses_proxy: bool,
}

/// `1 + deg a^2 / (1 - a^2) + (deg - 1) / (1 - a^2)`, or 0 without edges.
pub fn delta_factor(max_degree: usize, alpha: f64) -> f64 {
    if max_degree == 0 {
        return 0.0;
    }
    let deg = max_degree as f64;
    let q = 1.0 - alpha * alpha;
    1.0 + deg * alpha * alpha / q + (deg - 1.0) / q
}

/// The violation bound from its ingredients. Zero for a forest.
pub fn epsilon_bound(
    sigma_max: f64,
    sigma_min: f64,
    max_degree: usize,
    max_paths: u64,
    alpha: f64,
    girth: Option<usize>,
) -> f64 {
    let Some(c) = girth else { return 0.0 };
    let scale = sigma_max.max((sigma_max / sigma_min).sqrt());
    let extra_paths = max_paths.saturating_sub(1) as f64;
    scale * delta_factor(max_degree, alpha) * extra_paths * alpha.powi(c.div_ceil(2) as i32)
}

/// Error certificate for the closed form `a` computed from `res`.
pub fn epsilon_certificate(
    res: &ResidueMatrix<'_>,
    a: &SparseSymmetricMatrix,
    path_cap: u64,
) -> Result<EpsilonCertificate, ClosedFormError> {
    let report = check_conditions(res);
    if report.approx_conditions() != Some(true) {
        return Err(ClosedFormError::CertificateUnavailable(CertificateGap::ConditionsNotMet));
    }
    let g = SupportGraph::from_sparse(&res.normalized);
    let stats = cycle_stats(&g, path_cap);
    let max_paths = match stats.max_paths {
        PathCount::Exact(p) => p,
        PathCount::Overflow => return Err(ClosedFormError::CertificateUnavailable(CertificateGap::PathOverflow)),
    };
    let alpha = res.normalized_max();
    let sigma_max = res.scaling.iter().fold(f64::NEG_INFINITY, |x, &y| x.max(y));
    let sigma_min = res.scaling.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    let epsilon = epsilon_bound(sigma_max, sigma_min, stats.max_degree, max_paths, alpha, stats.girth);

    // The estimate is block diagonal over the components of its support.
    let support = SupportGraph::from_sparse(a);
    let dec = decompose(&support);
    let mut mu_min = f64::INFINITY;
    let mut mu_max = f64::NEG_INFINITY;
    for comp in dec.components() {
        if comp.len() == 1 {
            let v = a.diag()[comp[0]];
            mu_min = mu_min.min(v);
            mu_max = mu_max.max(v);
            continue;
        }
        let block = a.submatrix(comp).to_dense();
        let e = extreme_eigenvalues(&block, 1e-12)?;
        mu_min = mu_min.min(e.min);
        mu_max = mu_max.max(e.max);
    }
    if !(mu_min > 0.0) {
        return Err(ClosedFormError::CertificateUnavailable(CertificateGap::NotPositiveDefinite));
    }
    let max_component = dec.max_size();
    let perturbation_bound = max_component as f64 * (1.0 / mu_min + 1.0) * epsilon;
    let optimality_gap_bound = (mu_max + 1.0 / sigma_min) * perturbation_bound;
    Ok(EpsilonCertificate {
        epsilon,
        delta: delta_factor(stats.max_degree, alpha),
        alpha,
        girth: stats.girth,
        max_degree: stats.max_degree,
        max_paths,
        sigma_max,
        sigma_min,
        max_component,
        mu_min,
        mu_max,
        perturbation_bound,
        optimality_gap_bound,
        gap_bound_uses_proxy: true,
    })
}
