mod bench;
mod check;
mod estimate;
mod generate;
mod tables;

pub use bench::bench;
pub use check::check;
pub use estimate::estimate;
pub use generate::generate;
pub use tables::{cycle_gap, sweep};

use glx_core::closed_form::ConditionReport;
use glx_core::covariance::{lambda_for_edge_count, sample_covariance, CovarianceInput};
use serde_json::{json, Value};

use crate::args::{SourceArgs, Threshold};
use crate::io::{digest, read_matrix_market, read_samples_csv};
use crate::report::RunReport;
use crate::CliError;

/// Loads the covariance named on the command line, recording the input
/// digest and load time.
fn load_input(input: &SourceArgs, rep: &mut RunReport) -> Result<CovarianceInput, CliError> {
    let path = input.source.cov.as_ref().or(input.source.samples.as_ref()).expect("clap enforces one source");
    rep.command.input_digest = Some(digest(path)?);
    if let Some(cov) = &input.source.cov {
        let m = rep.timed("load", || read_matrix_market(cov))?;
        Ok(CovarianceInput::population(m.to_dense())?)
    } else {
        let samples = rep.timed("load", || read_samples_csv(path, input.impute))?;
        rep.metric("samples", samples.n());
        Ok(rep.timed("covariance", || sample_covariance(&samples))?)
    }
}

fn resolve_lambda(t: &Threshold, c: &CovarianceInput, rep: &mut RunReport) -> Result<f64, CliError> {
    let lambda = match (t.lambda, t.k) {
        (Some(l), _) => {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(CliError::Usage(format!("lambda must be a non-negative number, got {l}")));
            }
            l
        }
        (None, Some(k)) => {
            rep.k = Some(k);
            rep.timed("lambda", || lambda_for_edge_count(c, k))?
        }
        (None, None) => unreachable!("clap enforces one threshold"),
    };
    rep.lambda = Some(lambda);
    Ok(lambda)
}

fn conditions_summary(r: &ConditionReport) -> Value {
    json!({
        "all_exact": r.all_exact(),
        "acyclic": r.acyclic,
        "positive_definite": r.positive_definite,
        "normalized_max": r.normalized_max,
        "excluded_margin": r.excluded_margin,
        "approx_conditions": r.approx_conditions(),
        "sufficient_test": r.sufficient_test,
    })
}
