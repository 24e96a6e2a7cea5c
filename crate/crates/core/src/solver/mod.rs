//! Numerical reference solver, optimality residuals and the warm-started
//! solver that combines closed-form blocks with numerical ones.

mod glasso;
mod kkt;

pub use kkt::{
    exact_kkt_residual, exact_kkt_residual_sparse, gl_objective, gl_objective_sparse, relaxed_kkt_check, RelaxedKkt,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::closed_form::{approx_solution, check_conditions_with, ConditionMode};
use crate::covariance::{residue, CovarianceError, CovarianceInput};
use crate::numerics::{inverse, NumericsError, SparseSymmetricMatrix};
use crate::solution::{ComponentOutcome, GlSolution, Method};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Target for the largest optimality-condition violation.
    pub tol: f64,
    /// Cap on outer sweeps.
    pub max_iter: usize,
    /// Optional starting precision estimate.
    pub init: Option<SparseSymmetricMatrix>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 10_000, init: None }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no positive definite feasible starting point found")]
    NoFeasibleStart,
    #[error("stopped after {} sweeps with residual {:e}", .best.iterations, .best.kkt.map_or(f64::INFINITY, |k| k.max_violation))]
    NonConvergence { best: Box<GlSolution> },
    #[error(transparent)]
    Covariance(#[from] CovarianceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Entries at or below this multiple of the tolerance count as zero when
/// reading a support off a numerical estimate.
pub const SUPPORT_CUTOFF_FACTOR: f64 = 10.0;

/// Solves the full problem by block coordinate descent.
pub fn glasso_solve(c: &CovarianceInput, lambda: f64, cfg: &SolverConfig) -> Result<GlSolution, SolverError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CovarianceError::InvalidLambda(lambda).into());
    }
    let d = c.dim();
    let all: Vec<usize> = (0..d).collect();
    if lambda == 0.0 {
        // Unpenalized: the inverse covariance.
        let estimate = SparseSymmetricMatrix::from_dense(&inverse(c.matrix())?);
        let kkt = exact_kkt_residual_sparse(&estimate, c, 0.0)?;
        return Ok(GlSolution {
            estimate,
            method: Method::Numerical,
            lambda,
            components: vec![ComponentOutcome { vertices: all, method: Method::Numerical, iterations: 0 }],
            conditions: None,
            certificate: None,
            kkt: Some(kkt),
            iterations: 0,
            converged: true,
        });
    }
    let out = glasso::solve_block(c, lambda, cfg.tol, cfg.max_iter, cfg.init.as_ref())?;
    let sol = GlSolution {
        estimate: out.theta,
        method: Method::Numerical,
        lambda,
        components: vec![ComponentOutcome { vertices: all, method: Method::Numerical, iterations: out.sweeps }],
        conditions: None,
        certificate: None,
        kkt: Some(out.kkt),
        iterations: out.sweeps,
        converged: out.converged,
    };
    if out.converged {
        Ok(sol)
    } else {
        Err(SolverError::NonConvergence { best: Box::new(sol) })
    }
}

/// Splits the problem over the connected components of the thresholded
/// covariance, keeps the closed form on components where it is provably
/// optimal and refines the rest numerically from the closed form.
pub fn warm_start_solve(c: &CovarianceInput, lambda: f64, cfg: &SolverConfig) -> Result<GlSolution, SolverError> {
    let res = residue(c, lambda)?;
    let closed = approx_solution(&res).ok();
    let report = check_conditions_with(&res, ConditionMode::ExactnessOnly);
    let d = c.dim();

    struct BlockResult {
        vertices: Vec<usize>,
        theta: SparseSymmetricMatrix,
        method: Method,
        sweeps: usize,
        converged: bool,
    }

    let solve = |comp: &crate::closed_form::ComponentConditions| -> Result<BlockResult, SolverError> {
        let vertices = comp.vertices.clone();
        if let (true, Some(a)) = (comp.exact(), closed.as_ref()) {
            return Ok(BlockResult {
                theta: a.submatrix(&vertices),
                vertices,
                method: Method::ClosedExact,
                sweeps: 0,
                converged: true,
            });
        }
        let sub = CovarianceInput::population(c.matrix().principal_submatrix(&vertices))?;
        let init = match (&cfg.init, &closed) {
            (Some(x), _) => Some(x.submatrix(&vertices)),
            (None, Some(a)) => Some(a.submatrix(&vertices)),
            (None, None) => None,
        };
        let out = glasso::solve_block(&sub, lambda, cfg.tol, cfg.max_iter, init.as_ref())?;
        Ok(BlockResult {
            vertices,
            theta: out.theta,
            method: Method::WarmStarted,
            sweeps: out.sweeps,
            converged: out.converged,
        })
    };
    let blocks: Vec<BlockResult> = report.components.par_iter().map(solve).collect::<Result<_, _>>()?;

    let mut diag = vec![0.0; d];
    let mut entries = Vec::new();
    let mut components = Vec::with_capacity(blocks.len());
    let mut sweeps = 0;
    let mut converged = true;
    for b in blocks {
        for (k, &v) in b.vertices.iter().enumerate() {
            diag[v] = b.theta.diag()[k];
        }
        for &(i, j, v) in b.theta.entries() {
            entries.push((b.vertices[i], b.vertices[j], v));
        }
        sweeps = sweeps.max(b.sweeps);
        converged &= b.converged;
        components.push(ComponentOutcome { vertices: b.vertices, method: b.method, iterations: b.sweeps });
    }
    let estimate = SparseSymmetricMatrix::new(diag, entries)?;
    let kkt = exact_kkt_residual_sparse(&estimate, c, lambda)?;
    let method = if components.iter().all(|o| o.method == Method::ClosedExact) {
        Method::ClosedExact
    } else {
        Method::WarmStarted
    };
    let sol = GlSolution {
        estimate,
        method,
        lambda,
        components,
        conditions: Some(report),
        certificate: None,
        kkt: Some(kkt),
        iterations: sweeps,
        converged,
    };
    if converged {
        Ok(sol)
    } else {
        Err(SolverError::NonConvergence { best: Box::new(sol) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SymmetricMatrix;

    fn cov(rows: &[Vec<f64>]) -> CovarianceInput {
        CovarianceInput::population(SymmetricMatrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let c = cov(&[vec![1.0, 0.5], vec![0.5, 1.0]]);
        let sol = glasso_solve(&c, 0.1, &SolverConfig::with_tol(1e-10)).unwrap();
        assert!((sol.estimate.get(0, 1) + 0.4 / 0.84).abs() < 1e-9);
        assert!((sol.estimate.get(0, 0) - 1.0 / 0.84).abs() < 1e-9);
        assert!(sol.kkt.unwrap().max_violation <= 1e-10);
    }

    #[test]
    fn identity_covariance() {
        let c = cov(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let sol = glasso_solve(&c, 0.1, &SolverConfig::default()).unwrap();
        assert_eq!(sol.estimate.to_dense(), SymmetricMatrix::identity(3));
    }

    #[test]
    fn zero_lambda_is_inverse() {
        let c = cov(&[vec![2.0, 0.5, 0.1], vec![0.5, 1.0, 0.2], vec![0.1, 0.2, 3.0]]);
        let sol = glasso_solve(&c, 0.0, &SolverConfig::default()).unwrap();
        let inv = inverse(c.matrix()).unwrap();
        assert!(sol.estimate.to_dense().max_abs_diff(&inv) < 1e-12);
    }

    #[test]
    fn dense_problem_converges_and_warm_start_agrees() {
        let d = 8;
        let m = SymmetricMatrix::from_fn(d, |i, j| {
            if i == j {
                1.0 + 0.1 * i as f64
            } else {
                0.6f64.powi((j - i) as i32) * if (i + j) % 3 == 0 { -1.0 } else { 1.0 }
            }
        });
        let c = CovarianceInput::population(m).unwrap();
        let cfg = SolverConfig::with_tol(1e-9);
        let full = glasso_solve(&c, 0.15, &cfg).unwrap();
        assert!(full.kkt.unwrap().max_violation <= 1e-9);
        let warm = warm_start_solve(&c, 0.15, &cfg).unwrap();
        assert!(warm.kkt.unwrap().max_violation <= 1e-9);
        assert!(full.estimate.to_dense().max_abs_diff(&warm.estimate.to_dense()) < 1e-8);
    }
}
