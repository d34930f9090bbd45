//! Dense row-major matrices, symmetric positive definite wrappers, and the
//! dense Cholesky factorization used by the samplers and by the dense-MVN
//! baseline path.

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Mat { nrows, ncols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `Aᵀ x`.
    pub fn t_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// Gram matrix `AᵀA`.
    pub fn gram(&self) -> Mat {
        let c = self.ncols;
        let mut g = Mat::zeros(c, c);
        for i in 0..self.nrows {
            let r = self.row(i);
            for a in 0..c {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..c {
                    g.add_to(a, b, ra * r[b]);
                }
            }
        }
        for a in 0..c {
            for b in 0..a {
                let v = g.get(b, a);
                g.set(a, b, v);
            }
        }
        g
    }

    /// Gram matrix with row weights, `Aᵀ diag(w) A`.
    pub fn weighted_gram(&self, w: &[f64]) -> Mat {
        assert_eq!(w.len(), self.nrows);
        let c = self.ncols;
        let mut g = Mat::zeros(c, c);
        for i in 0..self.nrows {
            let r = self.row(i);
            let wi = w[i];
            for a in 0..c {
                let ra = wi * r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..c {
                    g.add_to(a, b, ra * r[b]);
                }
            }
        }
        for a in 0..c {
            for b in 0..a {
                let v = g.get(b, a);
                g.set(a, b, v);
            }
        }
        g
    }

    pub fn mat_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Mat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    pub fn add_diag(&mut self, v: f64) {
        let n = self.nrows.min(self.ncols);
        for i in 0..n {
            self.add_to(i, i, v);
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat {
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        }
    }

    /// Relative symmetry check against the largest absolute entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.max_abs().max(1e-300);
        for i in 0..self.nrows {
            for j in 0..i {
                if (self.get(i, j) - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Symmetrize in place, `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric positive definite matrix. Construction validates symmetry to
/// 1e-12 relative tolerance; positive definiteness is established by the
/// first successful factorization.
#[derive(Debug, Clone)]
pub struct DenseSpd {
    mat: Mat,
}

impl DenseSpd {
    pub fn new(mat: Mat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                context: "DenseSpd::new",
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if !mat.is_symmetric(1e-12) {
            return Err(Error::Validation(
                "matrix is not symmetric within 1e-12 relative tolerance".into(),
            ));
        }
        Ok(DenseSpd { mat })
    }

    /// Accepts small asymmetries (e.g. accumulated in a sample covariance)
    /// and symmetrizes them away.
    pub fn from_nearly_symmetric(mut mat: Mat, rel_tol: f64) -> Result<Self> {
        if !mat.is_symmetric(rel_tol) {
            return Err(Error::Validation(format!(
                "matrix is not symmetric within {rel_tol:.1e} relative tolerance"
            )));
        }
        mat.symmetrize();
        Ok(DenseSpd { mat })
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }
}

/// Which triangular system to solve with a lower factor `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `L x = b` by forward substitution.
    Forward,
    /// `Lᵀ x = b` by backward substitution.
    Backward,
}

/// Solve a triangular system against a dense lower factor.
pub fn triangular_solve(l: &Mat, rhs: &[f64], side: Side) -> Result<Vec<f64>> {
    let n = l.nrows();
    if l.ncols() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "triangular_solve",
            expected: n,
            got: rhs.len(),
        });
    }
    let mut x = rhs.to_vec();
    match side {
        Side::Forward => {
            for i in 0..n {
                let s = dot(&l.row(i)[..i], &x[..i]);
                x[i] = (x[i] - s) / l.get(i, i);
            }
        }
        Side::Backward => {
            for i in (0..n).rev() {
                let mut s = x[i];
                for j in (i + 1)..n {
                    s -= l.get(j, i) * x[j];
                }
                x[i] = s / l.get(i, i);
            }
        }
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    pub fn factor(a: &DenseSpd) -> Result<Self> {
        Self::factor_mat(a.mat(), 0.0)
    }

    /// Factor a symmetric matrix given as a plain `Mat`, reading only the
    /// lower triangle. `jitter` is added to the diagonal; default callers
    /// pass 0 and surface the failure instead.
    pub fn factor_mat(a: &Mat, jitter: f64) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                // Row-major rows make this dot contiguous.
                let (head, tail) = l.data.split_at(i * n);
                let lrow_j = &head[j * n..j * n + j];
                let lrow_i = &tail[..j];
                let s = a.get(i, j) - dot(lrow_i, lrow_j);
                l.data[i * n + j] = s / l.data[j * n + j];
            }
            let lrow_i = &l.data[i * n..i * n + i];
            let s = a.get(i, i) + jitter - dot(lrow_i, lrow_i);
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { index: i, pivot: s });
            }
            l.data[i * n + i] = s.sqrt();
        }
        Ok(Cholesky { l })
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = triangular_solve(&self.l, b, Side::Forward)?;
        triangular_solve(&self.l, &y, Side::Backward)
    }

    /// `ln det A = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.n()).map(|i| self.l.get(i, i).ln()).sum::<f64>() * 2.0
    }

    /// `L Lᵀ`, for reconstruction checks.
    pub fn reconstruct(&self) -> Mat {
        let n = self.n();
        Mat::from_fn(n, n, |i, j| {
            let k = i.min(j);
            dot(&self.l.row(i)[..=k], &self.l.row(j)[..=k])
        })
    }

    /// `A⁻¹` as a dense matrix (used for the dense-MVN baseline and the
    /// closed-form plug-in fits).
    pub fn inverse(&self) -> Mat {
        let n = self.n();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e).expect("factor dimensions agree");
            e[j] = 0.0;
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        inv.symmetrize();
        inv
    }
}

/// Spec entry point: dense Cholesky of an SPD matrix, returning the lower
/// factor.
pub fn dense_cholesky(a: &DenseSpd) -> Result<Cholesky> {
    Cholesky::factor(a)
}

/// `ln det` of the matrix behind a dense factor.
pub fn log_det_from_factor(factor: &Cholesky) -> f64 {
    factor.log_det()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_identity() {
        let a = DenseSpd::new(Mat::identity(3)).unwrap();
        let c = dense_cholesky(&a).unwrap();
        assert_eq!(c.l(), &Mat::identity(3));
        assert_eq!(c.log_det(), 0.0);
    }

    #[test]
    fn cholesky_hand_2x2() {
        // [[4,2],[2,3]] factors to [[2,0],[1,sqrt(2)]].
        let a = DenseSpd::new(Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]])).unwrap();
        let c = dense_cholesky(&a).unwrap();
        assert!((c.l().get(0, 0) - 2.0).abs() < 1e-14);
        assert!((c.l().get(1, 0) - 1.0).abs() < 1e-14);
        assert!((c.l().get(1, 1) - 2f64.sqrt()).abs() < 1e-14);
        assert!(c.l().get(0, 1) == 0.0);
        let err = c.reconstruct().sub(a.mat()).frobenius_norm() / a.mat().frobenius_norm();
        assert!(err < 1e-15);
    }

    #[test]
    fn cholesky_reconstruction_random() {
        // AAᵀ + I is SPD; reconstruction must hold to 1e-10 relative.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Mat::from_fn(6, 6, |_, _| next());
        let mut spd = a.mat_mul(&a.transpose());
        spd.add_diag(1.0);
        spd.symmetrize();
        let spd = DenseSpd::new(spd).unwrap();
        let c = dense_cholesky(&spd).unwrap();
        let err = c.reconstruct().sub(spd.mat()).frobenius_norm() / spd.mat().frobenius_norm();
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn not_positive_definite_reported() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match Cholesky::factor_mat(&a, 0.0) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn triangular_solve_cases() {
        let id = Mat::identity(3);
        assert_eq!(
            triangular_solve(&id, &[1.0, 2.0, 3.0], Side::Forward).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        // L=[[2,0],[1,1]], rhs=(2,3) -> (1,2)
        let l = Mat::from_rows(&[vec![2.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(
            triangular_solve(&l, &[2.0, 3.0], Side::Forward).unwrap(),
            vec![1.0, 2.0]
        );
        // Residual check on a random-ish lower factor.
        let l = Mat::from_rows(&[
            vec![1.5, 0.0, 0.0],
            vec![0.3, 2.0, 0.0],
            vec![-0.7, 0.4, 0.9],
        ]);
        let b = [0.2, -1.0, 3.0];
        for side in [Side::Forward, Side::Backward] {
            let x = triangular_solve(&l, &b, side).unwrap();
            let lx: Vec<f64> = match side {
                Side::Forward => l.mul_vec(&x),
                Side::Backward => l.t_mul_vec(&x),
            };
            let resid = lx
                .iter()
                .zip(&b)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(resid < 1e-10 * bmax);
        }
    }

    #[test]
    fn triangular_solve_dimension_mismatch() {
        let l = Mat::identity(3);
        assert!(matches!(
            triangular_solve(&l, &[1.0, 2.0], Side::Forward),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn log_det_diag() {
        let a = DenseSpd::new(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]])).unwrap();
        let c = dense_cholesky(&a).unwrap();
        assert!((log_det_from_factor(&c) - 6.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn spd_rejects_asymmetry() {
        let a = Mat::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]);
        assert!(DenseSpd::new(a).is_err());
    }
}
