use glx_core::closed_form::{approx_solution, check_conditions, epsilon_bound, epsilon_certificate, ClosedFormError};
use glx_core::covariance::residue;
use glx_core::graph::{cycle_stats, PathCount, SupportGraph};

use super::{conditions_summary, load_input, resolve_lambda};
use crate::args::CheckArgs;
use crate::report::{ComponentSummary, RunReport};
use crate::{CliError, Status};

pub fn check(a: &CheckArgs, argv: &[String]) -> Result<Status, CliError> {
    let mut rep = RunReport::new(argv);
    let c = load_input(&a.input, &mut rep)?;
    let lambda = resolve_lambda(&a.threshold, &c, &mut rep)?;
    let res = rep.timed("residue", || residue(&c, lambda))?;
    let report = rep.timed("conditions", || check_conditions(&res));
    rep.components = rep.timed("cycles", || {
        report
            .components
            .iter()
            .map(|comp| {
                let block = res.normalized.submatrix(&comp.vertices);
                let stats = cycle_stats(&SupportGraph::from_sparse(&block), a.path_cap);
                let scale: Vec<f64> = comp.vertices.iter().map(|&v| res.scaling[v]).collect();
                let mut summary = ComponentSummary::from_conditions(comp).with_stats(&stats);
                if let PathCount::Exact(paths) = stats.max_paths {
                    let hi = scale.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lo = scale.iter().copied().fold(f64::INFINITY, f64::min);
                    let alpha = block.max_offdiag_abs();
                    summary.epsilon = Some(epsilon_bound(hi, lo, stats.max_degree, paths, alpha, stats.girth));
                }
                summary
            })
            .collect()
    });
    rep.metric("edges", res.residue.edge_count());
    rep.metric("conditions", conditions_summary(&report));
    match rep.timed("closed_form", || approx_solution(&res)) {
        Ok(est) => match rep.timed("certificate", || epsilon_certificate(&res, &est, a.path_cap)) {
            Ok(cert) => rep.metric("certificate", cert),
            Err(ClosedFormError::CertificateUnavailable(why)) => rep.metric("certificate_unavailable", why),
            Err(e) => return Err(e.into()),
        },
        Err(e @ ClosedFormError::DegenerateEntry { .. }) => rep.metric("closed_form_error", e.to_string()),
        Err(e) => return Err(e.into()),
    }
    rep.emit(a.report.as_deref())?;
    Ok(Status::Done)
}
