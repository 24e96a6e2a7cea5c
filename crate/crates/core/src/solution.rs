//! Estimates returned by the closed-form and numerical solvers.

use serde::Serialize;

use crate::closed_form::{ConditionReport, EpsilonCertificate};
use crate::numerics::SparseSymmetricMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed form, with the exactness conditions verified.
    ClosedExact,
    /// Closed form used as an approximation.
    ClosedApprox,
    /// Block coordinate descent from scratch.
    Numerical,
    /// Block coordinate descent seeded by the closed form.
    WarmStarted,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedExact => "closed_exact",
            Method::ClosedApprox => "closed_approx",
            Method::Numerical => "numerical",
            Method::WarmStarted => "warm_started",
        }
    }
}

/// How one connected component of the thresholded graph was solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentOutcome {
    pub vertices: Vec<usize>,
    pub method: Method,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KktClause {
    /// `W_ii = S_ii`
    Diagonal,
    /// `W_ij = S_ij + lambda sign(X_ij)` on the support.
    Support,
    /// `|W_ij - S_ij| <= lambda` off the support.
    OffSupport,
    /// `X W = I` (relaxed check only).
    Inverse,
}

/// Largest optimality-condition violation and where it occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktReport {
    pub max_violation: f64,
    pub worst_entry: (usize, usize),
    pub clause: KktClause,
}

impl KktReport {
    pub(crate) fn zero() -> Self {
        Self { max_violation: 0.0, worst_entry: (0, 0), clause: KktClause::Diagonal }
    }

    pub(crate) fn consider(&mut self, value: f64, i: usize, j: usize, clause: KktClause) {
        if value > self.max_violation || value.is_nan() {
            *self = Self { max_violation: value, worst_entry: (i, j), clause };
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlSolution {
    pub estimate: SparseSymmetricMatrix,
    pub method: Method,
    pub lambda: f64,
    pub components: Vec<ComponentOutcome>,
    pub conditions: Option<ConditionReport>,
    pub certificate: Option<EpsilonCertificate>,
    pub kkt: Option<KktReport>,
    /// Outer sweeps for numerical methods; 0 for closed forms.
    pub iterations: usize,
    pub converged: bool,
}
