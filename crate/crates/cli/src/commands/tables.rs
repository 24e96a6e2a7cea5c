use glx_core::closed_form::{approx_solution, check_conditions_with, ConditionMode};
use glx_core::covariance::{lambda_for_edge_count, residue};
use glx_core::datagen::cycle_covariance;
use glx_core::graph::{decompose, SupportGraph};
use glx_core::metrics::{completion_duality_gap, rel_frobenius, tpr_fpr};
use glx_core::numerics::{is_positive_definite, SparseSymmetricMatrix};

use super::load_input;
use crate::args::{CycleGapArgs, SweepArgs};
use crate::io::{read_matrix_market, write_table};
use crate::report::RunReport;
use crate::{CliError, Status};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Checks each connected block of the support separately.
fn block_positive_definite(m: &SparseSymmetricMatrix) -> bool {
    let dec = decompose(&SupportGraph::from_sparse(m));
    dec.components().iter().all(|comp| match comp.as_slice() {
        [v] => m.diag()[*v] > 0.0,
        _ => is_positive_definite(&m.submatrix(comp).to_dense()),
    })
}

pub fn sweep(a: &SweepArgs, argv: &[String]) -> Result<Status, CliError> {
    let mut rep = RunReport::new(argv);
    let c = load_input(&a.input, &mut rep)?;
    let truth = a.truth.as_deref().map(read_matrix_market).transpose()?;
    let lambdas: Vec<f64> = match (&a.levels.lambdas, &a.levels.k_values) {
        (Some(l), _) => l.clone(),
        (None, Some(ks)) => ks.iter().map(|&k| lambda_for_edge_count(&c, k)).collect::<Result<_, _>>()?,
        (None, None) => unreachable!("clap enforces one level list"),
    };
    let header = [
        "lambda",
        "edges",
        "components",
        "largest_component",
        "exact_components",
        "all_exact",
        "tpr",
        "fpr",
        "rel_frobenius",
        "closed_form_pd",
    ];
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut levels = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let res = residue(&c, lambda)?;
        let dec = decompose(&SupportGraph::from_sparse(&res.residue));
        let report = rep.timed("conditions", || check_conditions_with(&res, ConditionMode::ExactnessOnly));
        let exact = report.components.iter().filter(|c| c.exact()).count();
        let (mut tpr, mut fpr, mut rf, mut pd) = (None, None, None, None);
        if let Ok(est) = rep.timed("closed_form", || approx_solution(&res)) {
            pd = Some(block_positive_definite(&est));
            if let Some(t) = &truth {
                // Rates are undefined when the truth has no edges or no non-edges.
                if let Ok((p, f)) = tpr_fpr(&est, t, 0.0) {
                    tpr = Some(p);
                    fpr = Some(f);
                }
                rf = rel_frobenius(&est, t).ok();
            }
        }
        levels.push((lambda, pd == Some(true)));
        rows.push(vec![
            lambda.to_string(),
            res.residue.edge_count().to_string(),
            dec.len().to_string(),
            dec.max_size().to_string(),
            exact.to_string(),
            report.all_exact().to_string(),
            cell(tpr),
            cell(fpr),
            cell(rf),
            pd.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    write_table(&a.out, &header, &rows)?;
    rep.metric("levels", lambdas.len());
    // Smallest swept level from which every larger level gives a positive definite closed form.
    levels.sort_by(|x, y| y.0.total_cmp(&x.0));
    let pd_threshold = levels.iter().take_while(|l| l.1).last().map(|l| l.0);
    rep.metric("pd_threshold", pd_threshold);
    rep.emit(a.report.as_deref())?;
    Ok(Status::Done)
}

pub fn cycle_gap(a: &CycleGapArgs, argv: &[String]) -> Result<Status, CliError> {
    if a.min_d < 3 || a.max_d < a.min_d {
        return Err(CliError::Usage(format!("need 3 <= min-d <= max-d, got {}..{}", a.min_d, a.max_d)));
    }
    let mut rep = RunReport::new(argv);
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for d in a.min_d..=a.max_d {
        let inst = cycle_covariance(d, a.seed);
        let res = residue(&inst.covariance, inst.lambda)?;
        let gap = rep.timed("gap", || completion_duality_gap(&res))?;
        rows.push(vec![d.to_string(), d.to_string(), format!("{:e}", gap.relative), format!("{:e}", gap.gap)]);
        gaps.push(gap);
    }
    write_table(&a.out, &["d", "girth", "relative_gap", "absolute_gap"], &rows)?;
    rep.lambda = Some(glx_core::datagen::CYCLE_LAMBDA);
    rep.metric("gaps", &gaps);
    rep.emit(a.report.as_deref())?;
    Ok(Status::Done)
}
