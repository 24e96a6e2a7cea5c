use glx_core::closed_form::{closed_form_estimate, exact_solution, ClosedFormError};
use glx_core::covariance::residue;
use glx_core::metrics::AccuracyReport;
use glx_core::solver::{exact_kkt_residual_sparse, glasso_solve, warm_start_solve, SolverConfig, SUPPORT_CUTOFF_FACTOR};
use glx_core::GlSolution;

use super::{conditions_summary, load_input, resolve_lambda};
use crate::args::{EstimateArgs, MethodArg};
use crate::io::{read_matrix_market, write_matrix_market};
use crate::report::{summarize, ComponentSummary, RunReport};
use crate::{CliError, Status};

pub fn estimate(a: &EstimateArgs, argv: &[String]) -> Result<Status, CliError> {
    let mut rep = RunReport::new(argv);
    let c = load_input(&a.input, &mut rep)?;
    let lambda = resolve_lambda(&a.threshold, &c, &mut rep)?;
    let truth = a.truth.as_deref().map(read_matrix_market).transpose()?;
    let cfg = SolverConfig { tol: a.tol, max_iter: a.max_iter, init: None };
    rep.metric("method", format!("{:?}", a.method).to_lowercase());

    let sol: GlSolution = match a.method {
        MethodArg::Closed | MethodArg::Approx => {
            let res = rep.timed("residue", || residue(&c, lambda))?;
            let out = rep.timed("estimate", || {
                if a.method == MethodArg::Closed {
                    exact_solution(&res)
                } else {
                    closed_form_estimate(&res)
                }
            });
            match out {
                Ok(s) => s,
                Err(ClosedFormError::ConditionsFailed(report)) => {
                    rep.components = report.components.iter().map(ComponentSummary::from_conditions).collect();
                    rep.metric("conditions", conditions_summary(&report));
                    rep.emit(a.report.as_deref())?;
                    return Ok(Status::ConditionsFailed);
                }
                Err(e) => return Err(e.into()),
            }
        }
        MethodArg::Glasso => rep.timed("estimate", || glasso_solve(&c, lambda, &cfg))?,
        MethodArg::Warm => rep.timed("estimate", || warm_start_solve(&c, lambda, &cfg))?,
    };

    let kkt = match (sol.kkt, a.verify) {
        (Some(k), _) => Some(k),
        (None, true) => Some(rep.timed("verify", || exact_kkt_residual_sparse(&sol.estimate, &c, lambda))?),
        (None, false) => None,
    };
    rep.components = summarize(&sol.components, sol.conditions.as_ref());
    rep.metric("result", sol.method);
    rep.metric("converged", sol.converged);
    rep.metric("iterations", sol.iterations);
    rep.metric("edges", sol.estimate.edge_count());
    if let Some(cond) = &sol.conditions {
        rep.metric("conditions", conditions_summary(cond));
    }
    if let Some(k) = kkt {
        rep.metric("kkt", k);
    }
    if let Some(t) = &truth {
        let cutoff = match a.method {
            MethodArg::Closed | MethodArg::Approx => 0.0,
            _ => SUPPORT_CUTOFF_FACTOR * a.tol,
        };
        rep.metric("accuracy", AccuracyReport::compare(&sol.estimate, t, cutoff)?);
    }
    if let Some(out) = &a.out {
        rep.timed("write", || write_matrix_market(out, &sol.estimate))?;
    }
    rep.emit(a.report.as_deref())?;
    Ok(Status::Done)
}
