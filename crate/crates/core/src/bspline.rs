//! Cubic B-spline basis over a closed interval, used for temporally varying
//! intercepts.

use crate::error::{Error, Result};
use crate::linalg::mat::Mat;

/// Evaluates a clamped B-spline basis with `df` columns at the given times.
///
/// The basis is cubic with internal knots equally spaced over
/// `[t_min, t_max]` and includes the intercept in its span (the columns sum
/// to one at every point). `df = 1` degenerates to a single constant column;
/// otherwise `df >= 4` is required for a cubic basis.
pub fn bspline_basis(times: &[f64], t_min: f64, t_max: f64, df: usize) -> Result<Mat> {
    if df == 0 {
        return Err(Error::InvalidParameter {
            name: "df",
            value: 0.0,
        });
    }
    if df == 1 || t_max <= t_min {
        return Ok(Mat::from_fn(times.len(), 1, |_, _| 1.0));
    }
    if df < 4 {
        return Err(Error::InvalidParameter {
            name: "df",
            value: df as f64,
        });
    }
    let degree = 3usize;
    let n_internal = df - degree - 1;
    // clamped knot vector: (degree+1) copies of each endpoint
    let mut knots = Vec::with_capacity(df + degree + 1);
    for _ in 0..=degree {
        knots.push(t_min);
    }
    for i in 1..=n_internal {
        knots.push(t_min + (t_max - t_min) * i as f64 / (n_internal + 1) as f64);
    }
    for _ in 0..=degree {
        knots.push(t_max);
    }

    let mut basis = Mat::zeros(times.len(), df);
    let mut b = vec![0.0; knots.len() - 1];
    for (row, &t) in times.iter().enumerate() {
        let t = t.clamp(t_min, t_max);
        // Cox-de Boor, degree 0 upward
        for (j, bj) in b.iter_mut().enumerate() {
            let hit = knots[j] <= t && t < knots[j + 1];
            // close the last interval at t_max
            let last = t == t_max && knots[j] < knots[j + 1] && knots[j + 1] == t_max;
            *bj = if hit || last { 1.0 } else { 0.0 };
        }
        for d in 1..=degree {
            for j in 0..(knots.len() - d - 1) {
                let left_den = knots[j + d] - knots[j];
                let right_den = knots[j + d + 1] - knots[j + 1];
                let left = if left_den > 0.0 {
                    (t - knots[j]) / left_den * b[j]
                } else {
                    0.0
                };
                let right = if right_den > 0.0 {
                    (knots[j + d + 1] - t) / right_den * b[j + 1]
                } else {
                    0.0
                };
                b[j] = left + right;
            }
        }
        for j in 0..df {
            basis.set(row, j, b[j]);
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let times: Vec<f64> = (1..=40).map(|t| t as f64).collect();
        let basis = bspline_basis(&times, 1.0, 40.0, 14).unwrap();
        assert_eq!(basis.ncols(), 14);
        for i in 0..times.len() {
            let s: f64 = basis.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
            assert!(basis.row(i).iter().all(|&v| v >= -1e-14));
        }
    }

    #[test]
    fn constant_column_for_df_one() {
        let basis = bspline_basis(&[1.0, 2.0, 3.0], 1.0, 3.0, 1).unwrap();
        assert_eq!(basis.ncols(), 1);
        assert!(basis.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn small_df_rejected() {
        assert!(bspline_basis(&[1.0], 1.0, 2.0, 3).is_err());
    }
}
