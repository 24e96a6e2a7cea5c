use std::path::{Path, PathBuf};

use glx_core::datagen::{cycle_covariance, random_precision, sample_gaussian, spanning_tree_covariance};

use crate::args::{GenArgs, GenCommon, GenKind};
use crate::io::{write_dense_matrix_market, write_matrix_market, write_samples_csv};
use crate::report::RunReport;
use crate::{CliError, Status};

fn prepare(common: &GenCommon, min_d: usize) -> Result<(), CliError> {
    if common.d < min_d {
        return Err(CliError::Usage(format!("d must be at least {min_d}, got {}", common.d)));
    }
    std::fs::create_dir_all(&common.out_dir).map_err(|source| CliError::Io { path: common.out_dir.clone(), source })
}

fn file(dir: &Path, name: &str, written: &mut Vec<String>) -> PathBuf {
    written.push(name.to_string());
    dir.join(name)
}

pub fn generate(a: &GenArgs, argv: &[String]) -> Result<Status, CliError> {
    let mut rep = RunReport::new(argv);
    let mut written = Vec::new();
    let common = match &a.kind {
        GenKind::Random { common, nnz, n } => {
            prepare(common, 1)?;
            let (d, seed) = (common.d, common.seed);
            let target = nnz.unwrap_or(5 * d);
            let n = n.unwrap_or(d / 2);
            let inst = rep.timed("generate", || random_precision(d, target, seed));
            write_matrix_market(&file(&common.out_dir, "precision.mtx", &mut written), &inst.true_precision)?;
            write_dense_matrix_market(&file(&common.out_dir, "covariance.mtx", &mut written), &inst.true_covariance)?;
            if n > 0 {
                let samples = rep.timed("sample", || sample_gaussian(&inst, n, seed));
                write_samples_csv(&file(&common.out_dir, "samples.csv", &mut written), &samples)?;
            }
            rep.k = Some(inst.true_precision.edge_count());
            rep.metric("kind", "random");
            rep.metric("target_nnz", target);
            rep.metric("nnz", inst.true_precision.edge_count());
            rep.metric("samples", n);
            common
        }
        GenKind::Tree { common, omega } => {
            prepare(common, 2)?;
            if !(*omega > 0.0 && *omega < 0.85) {
                return Err(CliError::Usage(format!("omega must lie in (0, 0.85), got {omega}")));
            }
            let inst = rep.timed("generate", || spanning_tree_covariance(common.d, *omega, common.seed));
            write_dense_matrix_market(&file(&common.out_dir, "covariance.mtx", &mut written), inst.covariance.matrix())?;
            rep.lambda = Some(inst.lambda);
            rep.metric("kind", "tree");
            rep.metric("instance", &inst);
            common
        }
        GenKind::Cycle { common } => {
            prepare(common, 3)?;
            let inst = rep.timed("generate", || cycle_covariance(common.d, common.seed));
            write_dense_matrix_market(&file(&common.out_dir, "covariance.mtx", &mut written), inst.covariance.matrix())?;
            rep.lambda = Some(inst.lambda);
            rep.metric("kind", "cycle");
            rep.metric("instance", &inst);
            common
        }
    };
    rep.metric("d", common.d);
    rep.metric("seed", common.seed);
    rep.metric("files", &written);
    let report = common.report.clone().unwrap_or_else(|| common.out_dir.join("report.json"));
    rep.emit(Some(&report))?;
    Ok(Status::Done)
}
