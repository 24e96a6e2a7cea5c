use serde::Serialize;

use crate::covariance::{CovarianceInput, ResidueMatrix};
use crate::graph::{decompose, ComponentDecomposition, SupportGraph};
use crate::numerics::{is_positive_definite, SparseSymmetricMatrix, SymmetricMatrix, PIVOT_TOLERANCE};

/// Which predicates to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionMode {
    /// Every predicate on every component.
    Full,
    /// Positive definiteness only where the component is a tree; enough to
    /// decide exactness in time quadratic in the dimension.
    ExactnessOnly,
}

/// Conditions for one connected component of the residue support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentConditions {
    pub vertices: Vec<usize>,
    pub acyclic: bool,
    /// `I + normalized residue` restricted to the component is positive
    /// definite. `None` when not evaluated.
    pub pd_check: Option<bool>,
    /// Squared largest normalized residue magnitude in the component.
    pub gap_lhs: f64,
    /// Smallest `(lambda - |S_ij|) / sqrt(S_ii S_jj)` over non-adjacent
    /// pairs inside the component (infinite when there are none).
    pub gap_rhs: f64,
    pub gap_check: bool,
}

impl ComponentConditions {
    /// The closed form is optimal on this component.
    pub fn exact(&self) -> bool {
        self.acyclic && self.pd_check == Some(true) && self.gap_check
    }
}

/// Quantities of the two-ratio sufficient test relating the regularization
/// to the magnitude gap around it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SufficientTest {
    pub statistic: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub lambda: f64,
    pub components: Vec<ComponentConditions>,
    /// Residue support has no cycle.
    pub acyclic: bool,
    /// `I + normalized residue` is positive definite; `None` if some block was skipped.
    pub positive_definite: Option<bool>,
    /// Largest normalized residue magnitude.
    pub normalized_max: f64,
    /// Minimum margin over all pairs with `|S_ij| <= lambda`.
    pub excluded_margin: f64,
    /// Minimum margin over all pairs outside the residue support.
    pub off_support_margin: f64,
    pub sufficient_test: Option<SufficientTest>,
}

impl ConditionReport {
    /// Every component satisfies the exactness conditions.
    pub fn all_exact(&self) -> bool {
        self.components.iter().all(ComponentConditions::exact)
    }

    /// Global exactness conditions with the global margin.
    pub fn exact_conditions(&self) -> bool {
        self.acyclic && self.positive_definite == Some(true) && self.normalized_max.powi(2) <= self.excluded_margin
    }

    /// Conditions under which the closed form is a certified approximation.
    pub fn approx_conditions(&self) -> Option<bool> {
        self.positive_definite.map(|pd| pd && self.normalized_max.powi(2) <= self.off_support_margin)
    }
}

/// Positive definiteness of a unit-diagonal forest block by leaf-first
/// elimination, which creates no fill.
fn forest_block_pd(m: &SparseSymmetricMatrix, g: &SupportGraph, vertices: &[usize]) -> bool {
    let root = vertices[0];
    let mut order = Vec::with_capacity(vertices.len());
    let mut parent = std::collections::HashMap::with_capacity(vertices.len());
    parent.insert(root, usize::MAX);
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &v in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(v) {
                e.insert(u);
                order.push(v);
            }
        }
    }
    let mut pivot: std::collections::HashMap<usize, f64> = vertices.iter().map(|&v| (v, 1.0)).collect();
    for &v in order.iter().rev() {
        let p = pivot[&v];
        if !(p > PIVOT_TOLERANCE) {
            return false;
        }
        let up = parent[&v];
        if up != usize::MAX {
            let e = m.get(v, up);
            *pivot.get_mut(&up).expect("parent in component") -= e * e / p;
        }
    }
    true
}

fn dense_block_pd(m: &SparseSymmetricMatrix, vertices: &[usize]) -> bool {
    let sub = m.submatrix(vertices).to_dense();
    is_positive_definite(&sub)
}

fn component_margin(c: &CovarianceInput, lambda: f64, g: &SupportGraph, vertices: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in vertices.iter().enumerate() {
        let row = c.matrix().row(i);
        let sii = row[i];
        for &j in &vertices[a + 1..] {
            if !g.has_edge(i, j) {
                best = best.min((lambda - row[j].abs()) / (sii * c.get(j, j)).sqrt());
            }
        }
    }
    best
}

pub(crate) fn evaluate(
    res: &ResidueMatrix<'_>,
    mode: ConditionMode,
) -> (ConditionReport, ComponentDecomposition, SupportGraph) {
    let unit = res.unit_matrix();
    let g = SupportGraph::from_sparse(&unit);
    let dec = decompose(&g);
    let mut comp_max = vec![0.0f64; dec.len()];
    for &(i, _, v) in unit.entries() {
        let c = dec.component_of(i);
        comp_max[c] = comp_max[c].max(v.abs());
    }
    let mut components = Vec::with_capacity(dec.len());
    for (c, vertices) in dec.components().iter().enumerate() {
        let acyclic = dec.is_acyclic(c);
        let pd_check = if vertices.len() == 1 {
            Some(true)
        } else if acyclic {
            Some(forest_block_pd(&unit, &g, vertices))
        } else if mode == ConditionMode::Full {
            Some(dense_block_pd(&unit, vertices))
        } else {
            None
        };
        let gap_lhs = comp_max[c] * comp_max[c];
        let gap_rhs = if vertices.len() < 3 { f64::INFINITY } else { component_margin(res.covariance, res.lambda, &g, vertices) };
        components.push(ComponentConditions {
            vertices: vertices.clone(),
            acyclic,
            pd_check,
            gap_lhs,
            gap_rhs,
            gap_check: gap_lhs <= gap_rhs,
        });
    }
    let positive_definite = components.iter().try_fold(true, |acc, c| c.pd_check.map(|p| acc && p));
    let acyclic = (0..dec.len()).all(|c| dec.is_acyclic(c));
    let s = &res.summary;
    let diag = &res.scaling;
    let smax = diag.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let smin = diag.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let sufficient_test = match (s.smallest_kept, s.largest_excluded) {
        (Some(kept), Some(excl)) => {
            let spread = (2.0 * s.largest_magnitude - kept - excl) / smax;
            let gap = (kept - excl) / smax;
            let statistic = spread * spread / gap;
            let ratio = smax / smin;
            let bound = 2.0 / (ratio * ratio);
            Some(SufficientTest { statistic, bound, holds: statistic <= bound })
        }
        _ => None,
    };
    let report = ConditionReport {
        lambda: res.lambda,
        components,
        acyclic,
        positive_definite,
        normalized_max: res.normalized_max(),
        excluded_margin: s.min_excluded_margin,
        off_support_margin: s.min_excluded_margin,
        sufficient_test,
    };
    (report, dec, g)
}

/// Evaluates every exactness and approximation predicate.
pub fn check_conditions(res: &ResidueMatrix<'_>) -> ConditionReport {
    evaluate(res, ConditionMode::Full).0
}

pub fn check_conditions_with(res: &ResidueMatrix<'_>, mode: ConditionMode) -> ConditionReport {
    evaluate(res, mode).0
}

/// Positive definiteness of `D + T`, where `D = diag(S)` and `T` equals
/// `S_ij + lambda sign(X_ij)` on the off-diagonal support of `x`, zero elsewhere.
pub fn dt_positive_definite_check(x: &SparseSymmetricMatrix, c: &CovarianceInput, lambda: f64) -> bool {
    let mut m = SymmetricMatrix::from_diagonal(&c.diagonal());
    for &(i, j, v) in x.entries() {
        m.set(i, j, c.get(i, j) + lambda * v.signum());
    }
    is_positive_definite(&m)
}
