//! Closed-form estimate from the soft-thresholded covariance, the
//! conditions under which it is optimal, and its error certificate.

mod certificate;
mod conditions;
mod formula;

pub use certificate::{delta_factor, epsilon_bound, epsilon_certificate, CertificateGap, EpsilonCertificate};
pub use conditions::{
    check_conditions, check_conditions_with, dt_positive_definite_check, ComponentConditions, ConditionMode,
    ConditionReport, SufficientTest,
};
pub use formula::{approx_solution, path_sum_inverse, path_sum_matrix, tree_complement, tree_inverse};

use thiserror::Error;

use crate::covariance::ResidueMatrix;
use crate::numerics::NumericsError;
use crate::solution::{ComponentOutcome, GlSolution, Method};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("normalized residue at ({row}, {col}) has magnitude {value} >= 1")]
    DegenerateEntry { row: usize, col: usize, value: f64 },
    #[error("exactness conditions fail on {} component(s)", .0.components.iter().filter(|c| !c.exact()).count())]
    ConditionsFailed(Box<ConditionReport>),
    #[error("support contains a cycle through component {component:?}")]
    NotAcyclic { component: Vec<usize> },
    #[error("more than {cap} simple paths join some pair")]
    PathOverflow { cap: u64 },
    #[error("error certificate unavailable: {0:?}")]
    CertificateUnavailable(CertificateGap),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn outcomes(report: &ConditionReport) -> Vec<ComponentOutcome> {
    report
        .components
        .iter()
        .map(|c| ComponentOutcome {
            vertices: c.vertices.clone(),
            method: if c.exact() { Method::ClosedExact } else { Method::ClosedApprox },
            iterations: 0,
        })
        .collect()
}

/// Closed-form estimate, verified optimal on every component.
///
/// Fails with [`ClosedFormError::ConditionsFailed`] carrying the
/// per-component report when some component does not qualify.
pub fn exact_solution(res: &ResidueMatrix<'_>) -> Result<GlSolution, ClosedFormError> {
    let estimate = approx_solution(res)?;
    let report = check_conditions_with(res, ConditionMode::ExactnessOnly);
    if !report.all_exact() {
        return Err(ClosedFormError::ConditionsFailed(Box::new(report)));
    }
    Ok(GlSolution {
        estimate,
        method: Method::ClosedExact,
        lambda: res.lambda,
        components: outcomes(&report),
        conditions: Some(report),
        certificate: None,
        kkt: None,
        iterations: 0,
        converged: true,
    })
}

/// Closed-form estimate with each component labelled exact or approximate.
pub fn closed_form_estimate(res: &ResidueMatrix<'_>) -> Result<GlSolution, ClosedFormError> {
    let estimate = approx_solution(res)?;
    let report = check_conditions_with(res, ConditionMode::ExactnessOnly);
    let method = if report.all_exact() { Method::ClosedExact } else { Method::ClosedApprox };
    Ok(GlSolution {
        estimate,
        method,
        lambda: res.lambda,
        components: outcomes(&report),
        conditions: Some(report),
        certificate: None,
        kkt: None,
        iterations: 0,
        converged: true,
    })
}
