use glx_core::closed_form::tree_complement;
use glx_core::consistency::max_det_completion;
use glx_core::covariance::{residue, CovarianceInput};
use glx_core::graph::{decompose, is_acyclic, SupportGraph};
use glx_core::metrics::{optimality_gap, rel_frobenius, similarity_degree};
use glx_core::numerics::{cholesky, inverse, SparseSymmetricMatrix, SymmetricMatrix};
use glx_core::solver::{glasso_solve, SolverConfig};
use proptest::prelude::*;

/// Symmetric matrix with unit diagonal scaled to be strictly diagonally dominant.
fn dominant(d: usize, raw: &[f64]) -> SymmetricMatrix {
    let mut k = 0;
    let mut m = SymmetricMatrix::from_fn(d, |i, j| {
        if i == j {
            0.0
        } else {
            k += 1;
            raw[k % raw.len()]
        }
    });
    let widest = (0..d).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    for i in 0..d {
        m.set(i, i, widest + 1.0);
    }
    m
}

fn random_tree(d: usize, parents: &[usize], values: &[f64]) -> SparseSymmetricMatrix {
    let entries = (1..d).map(|v| (parents[v] % v, v, values[v])).collect();
    SparseSymmetricMatrix::new(vec![1.0; d], entries).unwrap()
}

fn permute(m: &SparseSymmetricMatrix, p: &[usize]) -> SparseSymmetricMatrix {
    let mut diag = vec![0.0; m.dim()];
    for (i, &v) in m.diag().iter().enumerate() {
        diag[p[i]] = v;
    }
    let entries = m.entries().iter().map(|&(i, j, v)| (p[i], p[j], v)).collect();
    SparseSymmetricMatrix::new(diag, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_times_matrix_is_identity(d in 1usize..12, raw in prop::collection::vec(-1.0f64..1.0, 1..40)) {
        let m = dominant(d, &raw);
        let inv = inverse(&m).unwrap();
        let prod = m.matmul(&inv);
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((prod[i * d + j] - target).abs() < 1e-12);
            }
        }
        let f = cholesky(&m).unwrap();
        let direct: f64 = (0..d).map(|i| f.get(i, i).ln()).sum::<f64>() * 2.0;
        prop_assert!((f.log_det() - direct).abs() < 1e-12);
    }

    #[test]
    fn residue_support_is_the_thresholded_pairs(
        d in 2usize..10,
        raw in prop::collection::vec(-1.0f64..1.0, 1..40),
        lambda in 0.0f64..1.5,
    ) {
        let c = CovarianceInput::population(dominant(d, &raw)).unwrap();
        let res = residue(&c, lambda).unwrap();
        for i in 0..d {
            for j in i + 1..d {
                let s = c.get(i, j);
                let r = res.residue.get(i, j);
                if s.abs() > lambda {
                    prop_assert!(r != 0.0 && r.signum() == s.signum());
                    prop_assert!((r.abs() - (s.abs() - lambda)).abs() < 1e-15);
                } else {
                    prop_assert_eq!(r, 0.0);
                }
            }
        }
        prop_assert!(res.normalized_max() < 1.0);
    }

    #[test]
    fn forest_iff_edges_match_components(d in 2usize..12, edges in prop::collection::vec((0usize..12, 0usize..12), 0..20)) {
        let mut list: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| (a % d, b % d))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        list.sort_unstable();
        list.dedup();
        let g = SupportGraph::from_edges(d, &list).unwrap();
        let comps = decompose(&g).len();
        prop_assert_eq!(is_acyclic(&g), list.len() + comps == d);
    }

    #[test]
    fn tree_completion_matches_closed_form(
        d in 3usize..10,
        parents in prop::collection::vec(0usize..100, 10),
        values in prop::collection::vec(prop_oneof![-0.95f64..-0.05, 0.05f64..0.95], 10),
    ) {
        let m = random_tree(d, &parents, &values);
        let g = SupportGraph::from_sparse(&m);
        let closed = tree_complement(&m, &g).unwrap();
        let iterative = max_det_completion(&m, 1e-12, 100_000).unwrap();
        prop_assert!(closed.max_abs_diff(&iterative.complement) < 1e-10);
        let alpha = m.max_offdiag_abs();
        prop_assert!(closed.max_offdiag_abs() <= alpha * alpha + 1e-12);
    }

    #[test]
    fn similarity_ignores_simultaneous_relabelling(
        d in 3usize..8,
        parents in prop::collection::vec(0usize..100, 8),
        values in prop::collection::vec(-0.9f64..0.9, 8),
        other in prop::collection::vec(-0.9f64..0.9, 8),
        shift in 1usize..7,
    ) {
        let a = random_tree(d, &parents, &values);
        let b = random_tree(d, &parents, &other);
        let p: Vec<usize> = (0..d).map(|i| (i + shift) % d).collect();
        if let (Ok(x), Ok(y)) = (similarity_degree(&a, &b), similarity_degree(&permute(&a, &p), &permute(&b, &p))) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!(x.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn relative_frobenius_triangle(
        d in 3usize..8,
        parents in prop::collection::vec(0usize..100, 8),
        x in prop::collection::vec(-0.9f64..0.9, 8),
        y in prop::collection::vec(-0.9f64..0.9, 8),
        z in prop::collection::vec(-0.9f64..0.9, 8),
    ) {
        let (a, b, c) = (random_tree(d, &parents, &x), random_tree(d, &parents, &y), random_tree(d, &parents, &z));
        let norm = c.frobenius();
        let lhs = rel_frobenius(&a, &c).unwrap();
        let rhs = rel_frobenius(&a, &b).unwrap() * b.frobenius() / norm + rel_frobenius(&b, &c).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn no_point_beats_the_solver(
        d in 2usize..8,
        raw in prop::collection::vec(-1.0f64..1.0, 1..30),
        lambda in 0.05f64..0.6,
        trial in prop::collection::vec(-0.2f64..0.2, 1..30),
    ) {
        let c = CovarianceInput::population(dominant(d, &raw)).unwrap();
        let tol = 1e-8;
        let sol = glasso_solve(&c, lambda, &SolverConfig::with_tol(tol)).unwrap();
        // A feasible competitor near the inverse covariance.
        let inv = inverse(c.matrix()).unwrap();
        let mut k = 0;
        let competitor = SymmetricMatrix::from_fn(d, |i, j| {
            k += 1;
            inv.get(i, j) + if i == j { 0.0 } else { trial[k % trial.len()] * inv.get(i, i).min(inv.get(j, j)) / d as f64 }
        });
        if cholesky(&competitor).is_ok() {
            let gap = optimality_gap(&SparseSymmetricMatrix::from_dense(&competitor), &c, lambda, &sol).unwrap();
            prop_assert!(gap.absolute >= -10.0 * tol, "{:?}", gap);
        }
    }
}
