//! Sparse-MVN surrogate of a dense multivariate normal.
//!
//! Given a target N(m, S), pick an ordering and per-point conditioning sets,
//! truncate the product-of-conditionals factorization, and assemble the
//! resulting upper-triangular factor U with surrogate precision Q = U Uᵀ. The
//! surrogate keeps the mean and — with k-nearest-neighbor conditioning —
//! most of the local dependence structure at linear cost in the dimension,
//! while Q stays sparse enough for fast repeated sampling.

use crate::error::{Error, Result};
use crate::linalg::mat::{Cholesky, DenseSpd, Mat};
use crate::linalg::sparse::{SparsePrecision, SparseUpperFactor};

/// How to order the points before truncating conditionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingPolicy {
    /// Sort by first coordinate, ties by second coordinate, ties by index.
    Coordinate,
    /// Keep the input order.
    Given,
}

/// Ordering plus per-point conditioning sets.
#[derive(Debug, Clone)]
pub struct ConditioningPlan {
    /// `ordering[pos]` = original index of the point at this position.
    ordering: Vec<usize>,
    /// Per position, the positions of its conditioning set (all strictly
    /// earlier), sorted ascending.
    neighbors: Vec<Vec<usize>>,
    k: usize,
    duplicates: usize,
}

impl ConditioningPlan {
    pub fn n(&self) -> usize {
        self.ordering.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Conditioning set of the point at `pos`, as original indices.
    pub fn neighbors_original(&self, pos: usize) -> Vec<usize> {
        self.neighbors[pos]
            .iter()
            .map(|&p| self.ordering[p])
            .collect()
    }

    /// Number of exactly coincident location pairs found while building.
    /// Duplicates make the target covariance singular; downstream
    /// factorizations will reject them rather than regularize silently.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Full conditioning: every point conditions on all predecessors, which
    /// makes the surrogate exact.
    pub fn full(n: usize) -> Self {
        ConditioningPlan {
            ordering: (0..n).collect(),
            neighbors: (0..n).map(|i| (0..i).collect()).collect(),
            k: n.saturating_sub(1),
            duplicates: 0,
        }
    }
}

/// Builds the ordering and k-nearest-predecessor conditioning sets.
///
/// `k = 0` yields empty sets everywhere (the independent-normal surrogate).
/// Distance ties are broken by smaller original index.
pub fn build_plan(
    locations: &[[f64; 2]],
    k: usize,
    policy: OrderingPolicy,
) -> Result<ConditioningPlan> {
    let n = locations.len();
    if n == 0 {
        return Err(Error::EmptyInput("build_plan: no locations"));
    }
    let ordering: Vec<usize> = match policy {
        OrderingPolicy::Coordinate => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                let pa = locations[a];
                let pb = locations[b];
                pa[0].total_cmp(&pb[0])
                    .then(pa[1].total_cmp(&pb[1]))
                    .then(a.cmp(&b))
            });
            idx
        }
        OrderingPolicy::Given => (0..n).collect(),
    };

    let duplicates = {
        let mut pts: Vec<[f64; 2]> = locations.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.windows(2).filter(|w| w[0] == w[1]).count()
    };

    let sorted_by_x = policy == OrderingPolicy::Coordinate;
    let mut neighbors = Vec::with_capacity(n);
    // best: (squared distance, original index, position), kept sorted so the
    // worst candidate is last
    let mut best: Vec<(f64, usize, usize)> = Vec::with_capacity(k + 1);
    for i in 0..n {
        best.clear();
        if k > 0 && i > 0 {
            let pi = locations[ordering[i]];
            for j in (0..i).rev() {
                let orig = ordering[j];
                let pj = locations[orig];
                let dx = pi[0] - pj[0];
                if sorted_by_x && best.len() == k && dx * dx > best[k - 1].0 {
                    // predecessors are sorted by x, so the gap only grows
                    break;
                }
                let d2 = dx * dx + (pi[1] - pj[1]) * (pi[1] - pj[1]);
                let cand = (d2, orig, j);
                if best.len() < k {
                    let at = best.partition_point(|b| (b.0, b.1) <= (d2, orig));
                    best.insert(at, cand);
                } else if (d2, orig) < (best[k - 1].0, best[k - 1].1) {
                    best.pop();
                    let at = best.partition_point(|b| (b.0, b.1) <= (d2, orig));
                    best.insert(at, cand);
                }
            }
        }
        let mut nb: Vec<usize> = best.iter().map(|b| b.2).collect();
        nb.sort_unstable();
        neighbors.push(nb);
    }
    Ok(ConditioningPlan {
        ordering,
        neighbors,
        k,
        duplicates,
    })
}

/// The truncated-conditional surrogate: same mean, sparse precision
/// Q = U Uᵀ held through its factor.
#[derive(Debug, Clone)]
pub struct VecchiaSurrogate {
    mean: Vec<f64>,
    factor: SparseUpperFactor,
    plan: ConditioningPlan,
}

impl VecchiaSurrogate {
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    /// Surrogate mean, original index space.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// The factor U in the plan's ordering.
    pub fn factor(&self) -> &SparseUpperFactor {
        &self.factor
    }

    pub fn plan(&self) -> &ConditioningPlan {
        &self.plan
    }

    /// `ln det Q`; invariant under the internal ordering.
    pub fn log_det_precision(&self) -> f64 {
        self.factor.log_det_q()
    }

    /// Materializes Q in the original index space.
    pub fn precision(&self) -> Result<SparsePrecision> {
        self.factor.to_precision(Some(self.plan.ordering()))
    }

    /// `Q x` with `x` in the original index space.
    pub fn mul_q_original(&self, x: &[f64]) -> Vec<f64> {
        let ord = self.plan.ordering();
        let xp: Vec<f64> = ord.iter().map(|&o| x[o]).collect();
        let qp = self.factor.mul_q(&xp);
        let mut out = vec![0.0; x.len()];
        for (pos, &o) in ord.iter().enumerate() {
            out[o] = qp[pos];
        }
        out
    }
}

/// Assembles the surrogate from the target mean and covariance.
///
/// Column `i` of U holds `1/√dᵢ` on the diagonal and `-(S_NN⁻¹ S_Ni)/√dᵢ` on
/// the conditioning rows, where `dᵢ` is the conditional variance of point `i`
/// given its set. A conditional variance at or below `1e-12 · Sᵢᵢ` reports
/// NotPositiveDefinite (duplicated locations are the usual cause).
pub fn build_surrogate(
    mean: &[f64],
    s: &DenseSpd,
    plan: &ConditioningPlan,
) -> Result<VecchiaSurrogate> {
    let n = plan.n();
    if mean.len() != n || s.n() != n {
        return Err(Error::DimensionMismatch {
            context: "build_surrogate",
            expected: n,
            got: mean.len().min(s.n()),
        });
    }
    let mut col_ptr = vec![0usize; n + 1];
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    let mut diag = vec![0.0; n];
    for pos in 0..n {
        let orig = plan.ordering()[pos];
        let nb = &plan.neighbors()[pos];
        let s_ii = s.get(orig, orig);
        let d = if nb.is_empty() {
            s_ii
        } else {
            let m = nb.len();
            let nb_orig: Vec<usize> = nb.iter().map(|&p| plan.ordering()[p]).collect();
            let block = Mat::from_fn(m, m, |a, b| s.get(nb_orig[a], nb_orig[b]));
            let rhs: Vec<f64> = nb_orig.iter().map(|&o| s.get(o, orig)).collect();
            let chol = Cholesky::factor_mat(&block, 0.0).map_err(|_| {
                Error::NotPositiveDefinite {
                    index: orig,
                    pivot: 0.0,
                }
            })?;
            let coef = chol.solve(&rhs)?;
            let d = s_ii - crate::linalg::mat::dot(&rhs, &coef);
            let scale = 1.0 / d.sqrt();
            for (&p, &c) in nb.iter().zip(&coef) {
                row_idx.push(p);
                values.push(-c * scale);
            }
            d
        };
        if d <= 1e-12 * s_ii || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: orig,
                pivot: d,
            });
        }
        diag[pos] = 1.0 / d.sqrt();
        col_ptr[pos + 1] = row_idx.len();
    }
    let factor = SparseUpperFactor::new(n, col_ptr, row_idx, values, diag)?;
    Ok(VecchiaSurrogate {
        mean: mean.to_vec(),
        factor,
        plan: plan.clone(),
    })
}

/// KL divergence D(p ‖ surrogate) for p = N(m, S) sharing the surrogate's
/// mean: ½ [tr(QS) − n − ln det Q − ln det S], computed from factors only.
pub fn kl_divergence(mean: &[f64], s: &DenseSpd, q: &VecchiaSurrogate) -> Result<f64> {
    let n = q.n();
    if mean.len() != n || s.n() != n {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: n,
            got: mean.len().min(s.n()),
        });
    }
    for (a, b) in mean.iter().zip(q.mean()) {
        if (a - b).abs() > 1e-8 * (1.0 + a.abs()) {
            return Err(Error::Validation(
                "kl_divergence requires matching means".into(),
            ));
        }
    }
    let log_det_s = Cholesky::factor(s)?.log_det();
    let log_det_q = q.log_det_precision();
    let trace = q.precision()?.trace_product(s.mat());
    let kl = 0.5 * (trace - n as f64 - log_det_q - log_det_s);
    Ok(kl.max(0.0))
}

/// Undirected adjacency induced by the plan: the sparsity pattern of Q in
/// position space. Edge (i, j) iff one conditions on the other or they share
/// a conditioning child.
pub fn moralize(plan: &ConditioningPlan) -> Vec<Vec<usize>> {
    let n = plan.n();
    let mut adj = vec![Vec::new(); n];
    let push = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for (child, nb) in plan.neighbors().iter().enumerate() {
        for (ai, &a) in nb.iter().enumerate() {
            push(&mut adj, child, a);
            for &b in nb.iter().skip(ai + 1) {
                push(&mut adj, a, b);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}
