//! Compressed sparse column storage for symmetric precision matrices and the
//! upper-triangular factor produced by the Vecchia construction.
//!
//! Layout conventions: 0-based indices, 64-bit floats, CSC with both
//! triangles stored for `SparsePrecision`, strictly-upper off-diagonal
//! pattern plus a separate positive diagonal for `SparseUpperFactor`.

use crate::error::{Error, Result};
use crate::linalg::mat::Mat;

/// Symmetric sparse matrix in column-compressed storage (full pattern, both
/// triangles).
#[derive(Debug, Clone)]
pub struct SparsePrecision {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparsePrecision {
    /// Builds from triplets, accumulating duplicates. The result must be
    /// pattern- and value-symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, _) in t.iter() {
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "triplet ({i},{j}) out of bounds for n={n}"
                )));
            }
        }
        t.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &t {
            if last == Some((j, i)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((j, i));
            }
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let m = SparsePrecision {
            n,
            col_ptr,
            row_idx,
            values,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    pub fn from_dense(a: &Mat, drop_tol: f64) -> Result<Self> {
        let n = a.nrows();
        let mut triplets = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = a.get(i, j);
                if v.abs() > drop_tol {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |p| (self.row_idx[p], self.values[p]))
    }

    /// Value index of entry (i, j), if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .binary_search(&i)
            .ok()
            .map(|off| lo + off)
    }

    /// Value indices of the diagonal entries; every diagonal must be present.
    pub fn diag_positions(&self) -> Result<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                self.find(i, i).ok_or_else(|| {
                    Error::Validation(format!("missing diagonal entry at index {i}"))
                })
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                m.add_to(self.row_idx[p], j, self.values[p]);
            }
        }
        m
    }

    /// `Σ_ij A_ij B_ij` against a dense symmetric matrix, O(nnz).
    pub fn trace_product(&self, b: &Mat) -> f64 {
        assert_eq!(b.nrows(), self.n);
        let mut s = 0.0;
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[p] * b.get(self.row_idx[p], j);
            }
        }
        s
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[p];
                if i == j {
                    continue;
                }
                let mirror = self.find(j, i).ok_or_else(|| {
                    Error::Validation(format!("asymmetric pattern at ({i},{j})"))
                })?;
                if (self.values[p] - self.values[mirror]).abs() > 1e-10 * scale {
                    return Err(Error::Validation(format!(
                        "asymmetric values at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Upper-triangular sparse factor `U` with `Q = U Uᵀ`: the Vecchia output.
///
/// Column `i` holds the off-diagonal entries at the rows of the conditioning
/// set (strictly above the diagonal in the construction ordering) plus a
/// positive diagonal stored separately, so the off-diagonal count of column
/// `i` is exactly the conditioning-set size.
#[derive(Debug, Clone)]
pub struct SparseUpperFactor {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseUpperFactor {
    pub fn new(
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
        diag: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != n + 1 || diag.len() != n {
            return Err(Error::DimensionMismatch {
                context: "SparseUpperFactor::new",
                expected: n,
                got: diag.len(),
            });
        }
        for j in 0..n {
            for p in col_ptr[j]..col_ptr[j + 1] {
                if row_idx[p] >= j {
                    return Err(Error::Validation(format!(
                        "off-diagonal entry at ({}, {j}) is not strictly upper",
                        row_idx[p]
                    )));
                }
            }
        }
        if diag.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Validation("factor diagonal must be positive".into()));
        }
        Ok(SparseUpperFactor {
            n,
            col_ptr,
            row_idx,
            values,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag_count(&self, col: usize) -> usize {
        self.col_ptr[col + 1] - self.col_ptr[col]
    }

    pub fn nnz_off_diag(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |p| (self.row_idx[p], self.values[p]))
    }

    /// `ln det Q = 2 Σ ln U_ii`.
    pub fn log_det_q(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum::<f64>() * 2.0
    }

    /// `U x`.
    pub fn mul_u(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            out[j] += self.diag[j] * xj;
            if xj != 0.0 {
                for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                    out[self.row_idx[p]] += self.values[p] * xj;
                }
            }
        }
        out
    }

    /// `Uᵀ x`.
    pub fn mul_ut(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for j in 0..self.n {
            let mut s = self.diag[j] * x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[p] * x[self.row_idx[p]];
            }
            out[j] = s;
        }
        out
    }

    /// `Q x = U (Uᵀ x)`.
    pub fn mul_q(&self, x: &[f64]) -> Vec<f64> {
        self.mul_u(&self.mul_ut(x))
    }

    /// Solve `Uᵀ w = z` (forward substitution; `Uᵀ` is lower triangular).
    pub fn solve_ut(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n);
        let mut w = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = z[i];
            for p in self.col_ptr[i]..self.col_ptr[i + 1] {
                s -= self.values[p] * w[self.row_idx[p]];
            }
            w[i] = s / self.diag[i];
        }
        w
    }

    /// Solve `U w = z` (backward substitution).
    pub fn solve_u(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n);
        let mut w = z.to_vec();
        for i in (0..self.n).rev() {
            let wi = w[i] / self.diag[i];
            w[i] = wi;
            for p in self.col_ptr[i]..self.col_ptr[i + 1] {
                w[self.row_idx[p]] -= self.values[p] * wi;
            }
        }
        w
    }

    /// Materializes `Q = U Uᵀ` with an optional relabeling of indices
    /// (`relabel[k]` = external index of internal index `k`).
    pub fn to_precision(&self, relabel: Option<&[usize]>) -> Result<SparsePrecision> {
        let mut triplets = Vec::new();
        let mut support: Vec<(usize, f64)> = Vec::new();
        for c in 0..self.n {
            support.clear();
            support.push((c, self.diag[c]));
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                support.push((self.row_idx[p], self.values[p]));
            }
            for a in 0..support.len() {
                let (ia, va) = support[a];
                for &(ib, vb) in support.iter().skip(a) {
                    let (mut i, mut j) = (ia, ib);
                    if let Some(map) = relabel {
                        i = map[i];
                        j = map[j];
                    }
                    triplets.push((i, j, va * vb));
                    if i != j {
                        triplets.push((j, i, va * vb));
                    }
                }
            }
        }
        SparsePrecision::from_triplets(self.n, &triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_accumulate_and_stay_symmetric() {
        let t = [
            (0, 0, 2.0),
            (1, 1, 3.0),
            (0, 1, 0.5),
            (1, 0, 0.5),
            (0, 0, 1.0),
        ];
        let m = SparsePrecision::from_triplets(2, &t).unwrap();
        assert_eq!(m.nnz(), 4);
        let d = m.to_dense();
        assert_eq!(d.get(0, 0), 3.0);
        assert_eq!(d.get(0, 1), 0.5);
    }

    #[test]
    fn asymmetric_rejected() {
        let t = [(0, 0, 1.0), (1, 1, 1.0), (0, 1, 0.5)];
        assert!(SparsePrecision::from_triplets(2, &t).is_err());
    }

    #[test]
    fn factor_product_matches_dense() {
        // U = [[2, -1], [0, 3]] => Q = U Uᵀ = [[5, -3], [-3, 9]].
        let u = SparseUpperFactor::new(2, vec![0, 0, 1], vec![0], vec![-1.0], vec![2.0, 3.0])
            .unwrap();
        let q = u.to_precision(None).unwrap().to_dense();
        assert_eq!(q.get(0, 0), 5.0);
        assert_eq!(q.get(0, 1), -3.0);
        assert_eq!(q.get(1, 1), 9.0);
        assert!((u.log_det_q() - 36.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn factor_solves_are_inverses_of_mul() {
        let u = SparseUpperFactor::new(
            3,
            vec![0, 0, 1, 2],
            vec![0, 1],
            vec![-0.5, 0.25],
            vec![1.5, 2.0, 0.75],
        )
        .unwrap();
        let x = [0.3, -1.2, 2.0];
        let z = u.mul_ut(&x);
        let back = u.solve_ut(&z);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = u.mul_u(&x);
        let back = u.solve_u(&z);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn strictly_upper_enforced() {
        assert!(
            SparseUpperFactor::new(2, vec![0, 1, 1], vec![1], vec![1.0], vec![1.0, 1.0]).is_err()
        );
    }
}
