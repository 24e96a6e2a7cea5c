//! Synthetic instances: sparse random precision matrices with Gaussian
//! samples, and covariances whose thresholded graph is a spanning tree or a
//! single cycle.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`;
//! Gaussian draws use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{CovarianceInput, SampleSet};
use crate::numerics::{cholesky, inverse, SparseSymmetricMatrix, SymmetricMatrix};

/// Magnitude of the perturbation that separates otherwise tied entries.
pub const JITTER: f64 = 1e-9;

/// Default shrinkage of the off-tree interval.
pub const DEFAULT_OMEGA: f64 = 0.02;

/// Threshold paired with [`cycle_covariance`].
pub const CYCLE_LAMBDA: f64 = 0.75;

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub true_precision: SparseSymmetricMatrix,
    pub true_covariance: SymmetricMatrix,
    pub samples: Option<SampleSet>,
    pub seed: u64,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// `U U^T + 2 I` for a random `U` with `nonzeros` entries equal to `+-1`.
fn gram_plus_two(d: usize, nonzeros: usize, rng: &mut ChaCha8Rng) -> SparseSymmetricMatrix {
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
    for pos in index::sample(rng, d * d, nonzeros.min(d * d)).into_iter() {
        columns[pos % d].push((pos / d, sign(rng)));
    }
    let mut diag = vec![2.0; d];
    let mut acc = std::collections::HashMap::new();
    for col in &mut columns {
        col.sort_unstable_by_key(|e| e.0);
        for (a, &(i, si)) in col.iter().enumerate() {
            diag[i] += 1.0;
            for &(j, sj) in &col[a + 1..] {
                *acc.entry((i, j)).or_insert(0.0) += si * sj;
            }
        }
    }
    let entries = acc.into_iter().filter(|e| e.1 != 0.0).map(|((i, j), v)| (i, j, v)).collect();
    SparseSymmetricMatrix::new(diag, entries).expect("entries are distinct upper-triangle pairs")
}

/// Sparse precision `U U^T + 2 I` with about `target_edges` off-diagonal
/// nonzero pairs, and its inverse as the true covariance.
///
/// The number of entries of `U` starts from the expected-collision estimate
/// `sqrt(2 d target)` and is corrected once from the achieved count.
pub fn random_precision(d: usize, target_edges: usize, seed: u64) -> SyntheticInstance {
    let mut rng = rng_for(seed, 0);
    let estimate = ((2 * d * target_edges) as f64).sqrt().round() as usize;
    let mut best = gram_plus_two(d, estimate, &mut rng);
    if target_edges > 0 && best.edge_count() > 0 {
        let ratio = target_edges as f64 / best.edge_count() as f64;
        let corrected = (estimate as f64 * ratio.sqrt()).round() as usize;
        if corrected != estimate {
            let retry = gram_plus_two(d, corrected, &mut rng);
            if retry.edge_count().abs_diff(target_edges) < best.edge_count().abs_diff(target_edges) {
                best = retry;
            }
        }
    }
    let true_covariance = inverse(&best.to_dense()).expect("diagonal shift keeps the precision positive definite");
    SyntheticInstance { true_precision: best, true_covariance, samples: None, seed }
}

/// `n` draws of `L z` with `L L^T` the true covariance.
pub fn sample_gaussian(inst: &SyntheticInstance, n: usize, seed: u64) -> SampleSet {
    let d = inst.true_covariance.dim();
    let factor = cholesky(&inst.true_covariance).expect("true covariance is positive definite");
    let mut rng = rng_for(seed, 1);
    let z: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).zip(z.par_chunks(d)).for_each(|(x, z)| x.copy_from_slice(&factor.mul_lower(z)));
    SampleSet::new(n, d, data).expect("shape is consistent")
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeInstance {
    #[serde(skip)]
    pub covariance: CovarianceInput,
    pub edges: Vec<(usize, usize)>,
    /// Open interval of thresholds whose residue support is exactly the tree.
    pub lambda_interval: (f64, f64),
    /// Midpoint of `lambda_interval`.
    pub lambda: f64,
    pub omega: f64,
    pub seed: u64,
}

/// Random labelled tree decoded from a Pruefer sequence.
fn random_tree(d: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if d == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..d - 2).map(|_| rng.random_range(0..d)).collect();
    let mut degree = vec![1usize; d];
    for &v in &code {
        degree[v] += 1;
    }
    let mut leaves: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..d).filter(|&v| degree[v] == 1).map(std::cmp::Reverse).collect();
    let mut edges = Vec::with_capacity(d - 1);
    for &v in &code {
        let std::cmp::Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.push(std::cmp::Reverse(v));
        }
    }
    let std::cmp::Reverse(a) = leaves.pop().unwrap();
    let std::cmp::Reverse(b) = leaves.pop().unwrap();
    edges.push((a.min(b), a.max(b)));
    edges
}

/// Unit-diagonal covariance with tree entries of magnitude in `[0.85, 0.95]`
/// and all other entries in `[-0.85 + omega, 0.85 - omega]`.
pub fn spanning_tree_covariance(d: usize, omega: f64, seed: u64) -> TreeInstance {
    assert!(d >= 2, "a spanning tree needs at least two vertices");
    assert!(omega > 0.0 && omega < 0.85, "omega must lie in (0, 0.85)");
    let mut rng = rng_for(seed, 2);
    let edges = random_tree(d, &mut rng);
    let mut m = SymmetricMatrix::identity(d);
    let bound = 0.85 - omega;
    for i in 0..d {
        for j in i + 1..d {
            m.set(i, j, rng.random_range(-bound..=bound));
        }
    }
    let mut smallest_tree = f64::INFINITY;
    for &(i, j) in &edges {
        let v = rng.random_range(0.85..=0.95);
        smallest_tree = smallest_tree.min(v);
        m.set(i, j, sign(&mut rng) * v);
    }
    let largest_other = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .filter(|&(i, j)| !edges.contains(&(i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max(m.get(i, j).abs()));
    let lambda_interval = (largest_other, smallest_tree);
    TreeInstance {
        covariance: CovarianceInput::population(m).expect("unit diagonal"),
        edges,
        lambda: 0.5 * (lambda_interval.0 + lambda_interval.1),
        lambda_interval,
        omega,
        seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleInstance {
    #[serde(skip)]
    pub covariance: CovarianceInput,
    /// Vertices in cycle order; the cycle closes from the last to the first.
    pub cycle: Vec<usize>,
    pub lambda: f64,
    pub seed: u64,
}

/// Unit-diagonal covariance whose entries on the cycle `0, 1, ..., d - 1`
/// are `+-0.8` (separated by jitter) and whose other entries lie in
/// `[-0.7, 0.7]`.
pub fn cycle_covariance(d: usize, seed: u64) -> CycleInstance {
    assert!(d >= 3, "a cycle needs at least three vertices");
    let mut rng = rng_for(seed, 3);
    let mut m = SymmetricMatrix::identity(d);
    for i in 0..d {
        for j in i + 1..d {
            m.set(i, j, rng.random_range(-0.7..=0.7));
        }
    }
    for k in 0..d {
        let (i, j) = (k, (k + 1) % d);
        let v = 0.8 + JITTER * rng.random::<f64>();
        m.set(i, j, sign(&mut rng) * v);
    }
    // Each row of I + residue has two entries near 0.05.
    debug_assert!((0..d).all(|i| (0..d).filter(|&j| j != i).map(|j| (m.get(i, j).abs() - CYCLE_LAMBDA).max(0.0)).sum::<f64>() < 1.0));
    CycleInstance {
        covariance: CovarianceInput::population(m).expect("unit diagonal"),
        cycle: (0..d).collect(),
        lambda: CYCLE_LAMBDA,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{residue, sample_covariance};
    use crate::graph::{decompose, girth, is_acyclic, SupportGraph};

    #[test]
    fn empty_target_gives_twice_identity() {
        let inst = random_precision(5, 0, 1);
        assert_eq!(inst.true_precision, SparseSymmetricMatrix::from_diagonal(vec![2.0; 5]));
    }

    #[test]
    fn precision_density_and_conditioning() {
        let inst = random_precision(200, 1000, 3);
        let e = inst.true_precision.edge_count() as f64;
        assert!((e - 1000.0).abs() <= 150.0, "{e}");
        let ev = crate::numerics::extreme_eigenvalues(&inst.true_precision.to_dense(), 1e-10).unwrap();
        assert!(ev.min >= 2.0 - 1e-8);
    }

    #[test]
    fn gaussian_samples_are_reproducible_and_calibrated() {
        let inst = SyntheticInstance {
            true_precision: SparseSymmetricMatrix::from_diagonal(vec![1.0; 2]),
            true_covariance: SymmetricMatrix::identity(2),
            samples: None,
            seed: 0,
        };
        let a = sample_gaussian(&inst, 100_000, 9);
        let b = sample_gaussian(&inst, 100_000, 9);
        assert_eq!(a.as_slice(), b.as_slice());
        let c = sample_covariance(&a).unwrap();
        assert!(c.matrix().max_abs_diff(&SymmetricMatrix::identity(2)) < 0.02);
    }

    #[test]
    fn tree_residue_is_the_tree() {
        for seed in 0..5 {
            let t = spanning_tree_covariance(30, DEFAULT_OMEGA, seed);
            let res = residue(&t.covariance, t.lambda).unwrap();
            let g = SupportGraph::from_sparse(&res.residue);
            assert_eq!(g.edge_count(), 29);
            assert!(is_acyclic(&g));
            assert_eq!(decompose(&g).len(), 1);
            for &(i, j) in &t.edges {
                assert!(g.has_edge(i, j));
            }
        }
        let t = spanning_tree_covariance(2, DEFAULT_OMEGA, 0);
        assert!((0.85..=0.95).contains(&t.covariance.get(0, 1).abs()));
    }

    #[test]
    fn cycle_residue_is_the_cycle() {
        for d in 3..10 {
            let c = cycle_covariance(d, 4);
            let res = residue(&c.covariance, c.lambda).unwrap();
            let g = SupportGraph::from_sparse(&res.residue);
            assert_eq!(g.edge_count(), d);
            assert_eq!(g.max_degree(), 2);
            assert_eq!(girth(&g), Some(d));
            for &(_, _, v) in res.residue.entries() {
                assert!((v.abs() - 0.05).abs() < 1e-8);
            }
        }
    }
}
