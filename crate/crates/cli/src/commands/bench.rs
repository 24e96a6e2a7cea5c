use glx_core::closed_form::closed_form_estimate;
use glx_core::covariance::{lambda_for_edge_count, residue, sample_covariance, CovarianceInput};
use glx_core::datagen::{random_precision, sample_gaussian};
use glx_core::metrics::optimality_gap;
use glx_core::solver::{glasso_solve, warm_start_solve, SolverConfig, SolverError};
use glx_core::GlSolution;
use serde::Serialize;

use crate::args::BenchArgs;
use crate::io::write_table;
use crate::report::RunReport;
use crate::{CliError, Status};

#[derive(Debug, Serialize)]
struct BenchRow {
    d: usize,
    seed: u64,
    edges: usize,
    lambda: f64,
    closed_ms: f64,
    glasso_ms: Option<f64>,
    warm_ms: Option<f64>,
    glasso_converged: Option<bool>,
    /// Closed-form objective gap relative to the glasso solution.
    relative_gap: Option<f64>,
}

fn ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Solver output even when it ran out of iterations.
fn keep_best(r: Result<GlSolution, SolverError>) -> Result<GlSolution, CliError> {
    match r {
        Ok(s) => Ok(s),
        Err(SolverError::NonConvergence { best }) => Ok(*best),
        Err(e) => Err(e.into()),
    }
}

/// Least-squares slope of `log t` against `log d` over per-size medians.
fn scaling_exponent(rows: &[BenchRow]) -> Option<f64> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.d).collect();
    sizes.dedup();
    if sizes.len() < 2 {
        return None;
    }
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&d| {
            let mut t: Vec<f64> = rows.iter().filter(|r| r.d == d).map(|r| r.closed_ms.max(1e-6)).collect();
            t.sort_by(f64::total_cmp);
            ((d as f64).ln(), t[t.len() / 2].ln())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn bench(a: &BenchArgs, argv: &[String]) -> Result<Status, CliError> {
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(CliError::Usage("sizes must be positive".into()));
    }
    let mut rep = RunReport::new(argv);
    let cfg = SolverConfig { tol: a.tol, max_iter: a.max_iter, init: None };
    let mut rows = Vec::new();
    for &d in &a.sizes {
        for &seed in &a.seeds {
            let target = (a.nnz_factor * d as f64).round() as usize;
            let inst = rep.timed("generate", || random_precision(d, target, seed));
            let n = (a.sample_ratio * d as f64).round() as usize;
            let c = if n == 0 {
                CovarianceInput::population(inst.true_covariance.clone())?
            } else {
                sample_covariance(&sample_gaussian(&inst, n.max(2), seed))?
            };
            let edges = inst.true_precision.edge_count();
            let lambda = lambda_for_edge_count(&c, edges)?;

            let start = std::time::Instant::now();
            let res = residue(&c, lambda)?;
            let closed = closed_form_estimate(&res);
            let closed_ms = ms(start);

            let mut row = BenchRow {
                d,
                seed,
                edges,
                lambda,
                closed_ms,
                glasso_ms: None,
                warm_ms: None,
                glasso_converged: None,
                relative_gap: None,
            };
            if !a.closed_only {
                let start = std::time::Instant::now();
                let full = keep_best(glasso_solve(&c, lambda, &cfg))?;
                row.glasso_ms = Some(ms(start));
                row.glasso_converged = Some(full.converged);
                let start = std::time::Instant::now();
                keep_best(warm_start_solve(&c, lambda, &cfg))?;
                row.warm_ms = Some(ms(start));
                // A closed form that is not positive definite has no finite objective.
                if let Ok(est) = &closed {
                    row.relative_gap = optimality_gap(&est.estimate, &c, lambda, &full).ok().map(|g| g.relative);
                }
            }
            rows.push(row);
        }
    }
    rep.metric("closed_exponent", scaling_exponent(&rows));
    if let Some(path) = &a.csv {
        let header = ["d", "seed", "edges", "lambda", "closed_ms", "glasso_ms", "warm_ms", "speedup", "relative_gap"];
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    r.seed.to_string(),
                    r.edges.to_string(),
                    r.lambda.to_string(),
                    r.closed_ms.to_string(),
                    opt(r.glasso_ms),
                    opt(r.warm_ms),
                    opt(r.glasso_ms.map(|g| g / r.closed_ms.max(1e-6))),
                    opt(r.relative_gap),
                ]
            })
            .collect();
        write_table(path, &header, &table)?;
    }
    rep.metric("rows", &rows);
    rep.emit(a.report.as_deref())?;
    Ok(Status::Done)
}
