//! Covariance inputs, soft-thresholded residues and the magnitude ladder.

use serde::Serialize;
use thiserror::Error;

use crate::numerics::{dot, dot4, SparseSymmetricMatrix, SymmetricMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovarianceError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("column {0} has zero variance")]
    DegenerateColumn(usize),
    #[error("diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("sample data has {found} values, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("regularization must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
    #[error("index {k} outside the ladder of length {len}")]
    InvalidIndex { k: usize, len: usize },
    #[error("magnitudes {k} and {next} tie at {value}")]
    TieAtBoundary { k: usize, next: usize, value: f64 },
}

/// Row-major `n x d` block of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self, CovarianceError> {
        if data.len() != n * d {
            return Err(CovarianceError::ShapeMismatch { expected: n * d, found: data.len() });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(CovarianceError::NonFinite { row: p / d.max(1), col: p % d.max(1) });
        }
        Ok(Self { n, d, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Sample { n: usize },
    Population,
}

/// Divisor used by [`sample_covariance_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by `n` (maximum-likelihood estimate).
    #[default]
    MaximumLikelihood,
    /// Divide by `n - 1`.
    Unbiased,
}

/// Symmetric covariance with strictly positive diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceInput {
    matrix: SymmetricMatrix,
    kind: CovarianceKind,
}

impl CovarianceInput {
    pub fn new(matrix: SymmetricMatrix, kind: CovarianceKind) -> Result<Self, CovarianceError> {
        for i in 0..matrix.dim() {
            let v = matrix.get(i, i);
            if !(v > 0.0) || !v.is_finite() {
                return Err(CovarianceError::NonPositiveDiagonal { index: i, value: v });
            }
        }
        Ok(Self { matrix, kind })
    }

    pub fn population(matrix: SymmetricMatrix) -> Result<Self, CovarianceError> {
        Self::new(matrix, CovarianceKind::Population)
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    /// `D^{-1/2} Sigma D^{-1/2}` with `D = diag(Sigma)`.
    pub fn correlation(&self) -> SymmetricMatrix {
        let s: Vec<f64> = self.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
        let mut m = self.matrix.scaled(&s);
        for i in 0..m.dim() {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn into_matrix(self) -> SymmetricMatrix {
        self.matrix
    }
}

pub fn sample_covariance(samples: &SampleSet) -> Result<CovarianceInput, CovarianceError> {
    sample_covariance_with(samples, Normalization::MaximumLikelihood)
}

/// Centered sample covariance of the rows of `samples`.
pub fn sample_covariance_with(samples: &SampleSet, norm: Normalization) -> Result<CovarianceInput, CovarianceError> {
    let (n, d) = (samples.n, samples.d);
    if n < 2 {
        return Err(CovarianceError::TooFewSamples(n));
    }
    // Centered columns, stored contiguously.
    let mut cols = vec![0.0f64; d * n];
    for j in 0..d {
        let mean = (0..n).map(|t| samples.data[t * d + j]).sum::<f64>() / n as f64;
        for t in 0..n {
            cols[j * n + t] = samples.data[t * d + j] - mean;
        }
    }
    let divisor = match norm {
        Normalization::MaximumLikelihood => n as f64,
        Normalization::Unbiased => (n - 1) as f64,
    };
    let mut out = vec![0.0f64; d * d];
    for i in 0..d {
        let ci = &cols[i * n..(i + 1) * n];
        let mut j = i;
        while j + 4 <= d {
            let v = dot4(
                [
                    &cols[j * n..(j + 1) * n],
                    &cols[(j + 1) * n..(j + 2) * n],
                    &cols[(j + 2) * n..(j + 3) * n],
                    &cols[(j + 3) * n..(j + 4) * n],
                ],
                ci,
            );
            for (r, val) in v.iter().enumerate() {
                out[i * d + j + r] = val / divisor;
                out[(j + r) * d + i] = val / divisor;
            }
            j += 4;
        }
        while j < d {
            let v = dot(ci, &cols[j * n..(j + 1) * n]) / divisor;
            out[i * d + j] = v;
            out[j * d + i] = v;
            j += 1;
        }
    }
    for j in 0..d {
        if !(out[j * d + j] > 0.0) {
            return Err(CovarianceError::DegenerateColumn(j));
        }
    }
    let matrix = SymmetricMatrix::from_row_major(d, out).expect("covariance is symmetric by construction");
    CovarianceInput::new(matrix, CovarianceKind::Sample { n })
}

/// Extremes of the thresholding split, gathered in the residue pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdSummary {
    /// Largest off-diagonal magnitude of the covariance.
    pub largest_magnitude: f64,
    /// Smallest magnitude strictly above the threshold, if any.
    pub smallest_kept: Option<f64>,
    /// Largest magnitude at or below the threshold, if any.
    pub largest_excluded: Option<f64>,
    /// Minimum of `(lambda - |S_ij|) / sqrt(S_ii S_jj)` over excluded pairs.
    pub min_excluded_margin: f64,
    pub kept_pairs: usize,
}

/// Soft-thresholded off-diagonal covariance and its diagonally scaled form.
#[derive(Clone, Debug)]
pub struct ResidueMatrix<'a> {
    pub lambda: f64,
    pub covariance: &'a CovarianceInput,
    /// Zero diagonal; `S_ij - lambda sign(S_ij)` where `|S_ij| > lambda`.
    pub residue: SparseSymmetricMatrix,
    /// Residue scaled by `1 / sqrt(S_ii S_jj)`, zero diagonal.
    pub normalized: SparseSymmetricMatrix,
    /// Diagonal of the covariance.
    pub scaling: Vec<f64>,
    pub summary: ThresholdSummary,
}

impl ResidueMatrix<'_> {
    pub fn dim(&self) -> usize {
        self.scaling.len()
    }

    /// Largest magnitude of the normalized residue.
    pub fn normalized_max(&self) -> f64 {
        self.normalized.max_offdiag_abs()
    }

    /// `I + normalized residue` as a sparse matrix.
    pub fn unit_matrix(&self) -> SparseSymmetricMatrix {
        SparseSymmetricMatrix::new(vec![1.0; self.dim()], self.normalized.entries().to_vec())
            .expect("entries copied from a valid matrix")
    }
}

pub fn residue(c: &CovarianceInput, lambda: f64) -> Result<ResidueMatrix<'_>, CovarianceError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CovarianceError::InvalidLambda(lambda));
    }
    let d = c.dim();
    let diag = c.diagonal();
    let inv_sqrt: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut raw = Vec::new();
    let mut scaled = Vec::new();
    let mut largest = 0.0f64;
    let mut smallest_kept = f64::INFINITY;
    let mut largest_excluded = f64::NEG_INFINITY;
    let mut margin = f64::INFINITY;
    for i in 0..d {
        let row = c.matrix().row(i);
        for (j, &v) in row.iter().enumerate().skip(i + 1) {
            let a = v.abs();
            largest = largest.max(a);
            if a > lambda {
                smallest_kept = smallest_kept.min(a);
                let r = v - lambda * v.signum();
                raw.push((i, j, r));
                scaled.push((i, j, r * inv_sqrt[i] * inv_sqrt[j]));
            } else {
                largest_excluded = largest_excluded.max(a);
                margin = margin.min((lambda - a) * inv_sqrt[i] * inv_sqrt[j]);
            }
        }
    }
    let kept_pairs = raw.len();
    let summary = ThresholdSummary {
        largest_magnitude: largest,
        smallest_kept: smallest_kept.is_finite().then_some(smallest_kept),
        largest_excluded: largest_excluded.is_finite().then_some(largest_excluded),
        min_excluded_margin: margin,
        kept_pairs,
    };
    let zeros = vec![0.0; d];
    Ok(ResidueMatrix {
        lambda,
        covariance: c,
        residue: SparseSymmetricMatrix::new(zeros.clone(), raw).expect("valid by construction"),
        normalized: SparseSymmetricMatrix::new(zeros, scaled).expect("valid by construction"),
        scaling: diag,
        summary,
    })
}

/// All off-diagonal magnitudes `|S_ij|` (`i < j`) sorted in decreasing order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MagnitudeLadder {
    magnitudes: Vec<f64>,
}

impl MagnitudeLadder {
    pub fn from_magnitudes(mut magnitudes: Vec<f64>) -> Self {
        for m in &mut magnitudes {
            *m = m.abs();
        }
        magnitudes.sort_by(|a, b| b.total_cmp(a));
        Self { magnitudes }
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// The `k`-th largest magnitude, 1-based.
    pub fn sigma(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.magnitudes.get(i)).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Distinct values, decreasing, with their multiplicities.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &m in &self.magnitudes {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 += 1,
                _ => out.push((m, 1)),
            }
        }
        out
    }

    pub fn has_ties(&self) -> bool {
        self.magnitudes.windows(2).any(|w| w[0] == w[1])
    }
}

pub fn magnitude_ladder(c: &CovarianceInput) -> MagnitudeLadder {
    let d = c.dim();
    let mut mags = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        mags.extend(c.matrix().row(i)[i + 1..].iter().map(|v| v.abs()));
    }
    MagnitudeLadder::from_magnitudes(mags)
}

/// Regularization placing exactly `k` magnitudes above the threshold:
/// the midpoint of `(sigma_{k+1}, sigma_k)`, or `1.01 sigma_1` for `k = 0`.
pub fn lambda_for_k(ladder: &MagnitudeLadder, k: usize) -> Result<f64, CovarianceError> {
    let len = ladder.len();
    if len == 0 || k >= len {
        return Err(CovarianceError::InvalidIndex { k, len });
    }
    let s = ladder.as_slice();
    if k == 0 {
        return Ok(if s[0] > 0.0 { 1.01 * s[0] } else { f64::EPSILON });
    }
    lambda_between(s[k - 1], s[k], k)
}

fn lambda_between(upper: f64, lower: f64, k: usize) -> Result<f64, CovarianceError> {
    if upper == lower {
        return Err(CovarianceError::TieAtBoundary { k, next: k + 1, value: upper });
    }
    Ok(0.5 * (upper + lower))
}

/// Same value as `lambda_for_k(&magnitude_ladder(c), k)` by selection
/// instead of a full sort.
pub fn lambda_for_edge_count(c: &CovarianceInput, k: usize) -> Result<f64, CovarianceError> {
    let d = c.dim();
    let len = d * (d - 1) / 2;
    if len == 0 || k >= len {
        return Err(CovarianceError::InvalidIndex { k, len });
    }
    let mut mags = Vec::with_capacity(len);
    for i in 0..d {
        mags.extend(c.matrix().row(i)[i + 1..].iter().map(|v| v.abs()));
    }
    if k == 0 {
        let s1 = mags.iter().fold(0.0f64, |a, &b| a.max(b));
        return Ok(if s1 > 0.0 { 1.01 * s1 } else { f64::EPSILON });
    }
    // After selection, index k holds sigma_{k+1} and everything before it is >= it.
    let (above, next, _) = mags.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let upper = above.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    lambda_between(upper, *next, k)
}

/// Keeps the diagonal and the `k` largest-magnitude off-diagonal entries.
pub fn hard_threshold_topk(c: &CovarianceInput, k: usize) -> Result<SparseSymmetricMatrix, CovarianceError> {
    let d = c.dim();
    let len = d * (d - 1) / 2;
    if k > len {
        return Err(CovarianceError::InvalidIndex { k, len });
    }
    let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(len);
    for i in 0..d {
        for (j, &v) in c.matrix().row(i).iter().enumerate().skip(i + 1) {
            all.push((i, j, v));
        }
    }
    all.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()));
    if k > 0 && k < len && all[k - 1].2.abs() == all[k].2.abs() {
        return Err(CovarianceError::TieAtBoundary { k, next: k + 1, value: all[k].2.abs() });
    }
    all.truncate(k);
    Ok(SparseSymmetricMatrix::new(c.diagonal(), all).expect("valid by construction"))
}
