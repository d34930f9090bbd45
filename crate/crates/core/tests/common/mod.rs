//! Shared oracles for the integration suites: routines deliberately
//! independent of the library's own factorization paths.
//!
//! Each test binary pulls in the subset it needs.
#![allow(dead_code)]

use sparsemvn::linalg::mat::Mat;

/// Cyclic Jacobi eigenvalues of a symmetric matrix; brute-force oracle for
/// log-determinants and PSD checks.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    m.diag()
}

/// Gauss-Jordan inverse with partial pivoting: an inversion route with no
/// Cholesky inside, for cross-checking factorization-based results.
pub fn gauss_jordan_inverse(a: &Mat) -> Mat {
    let n = a.nrows();
    let mut work = Mat::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            work.set(i, j, a.get(i, j));
        }
        work.set(i, n + i, 1.0);
    }
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if work.get(r, col).abs() > work.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for j in 0..2 * n {
                let tmp = work.get(col, j);
                work.set(col, j, work.get(pivot, j));
                work.set(pivot, j, tmp);
            }
        }
        let d = work.get(col, col);
        assert!(d.abs() > 1e-300, "singular matrix in oracle inverse");
        for j in 0..2 * n {
            let v = work.get(col, j) / d;
            work.set(col, j, v);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work.get(r, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..2 * n {
                let v = work.get(r, j) - f * work.get(col, j);
                work.set(r, j, v);
            }
        }
    }
    Mat::from_fn(n, n, |i, j| work.get(i, n + j))
}

/// Small deterministic generator for oracle-side randomness, independent of
/// the library streams.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Random SPD matrix `AAᵀ + ridge·I`.
pub fn random_spd(rng: &mut XorShift, n: usize, ridge: f64) -> Mat {
    let a = Mat::from_fn(n, n, |_, _| rng.next_f64() - 0.5);
    let mut spd = a.mat_mul(&a.transpose());
    spd.add_diag(ridge);
    spd.symmetrize();
    spd
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
