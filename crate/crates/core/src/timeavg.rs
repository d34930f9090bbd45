//! Mean and covariance of per-subject time-averaged exposures built from
//! per-time predictive summaries, under the assumption that predictive draws
//! are independent across times.

use crate::error::{Error, Result};
use crate::linalg::mat::Mat;

/// A subject's exposure window: the set of time indices averaged over.
#[derive(Debug, Clone)]
pub struct ExposureWindow {
    /// 0-based time indices, sorted, deduplicated, nonempty.
    times: Vec<usize>,
}

impl ExposureWindow {
    pub fn new(subject: usize, mut times: Vec<usize>, t_len: usize) -> Result<Self> {
        times.sort_unstable();
        times.dedup();
        if times.is_empty() || times.iter().any(|&t| t >= t_len) {
            return Err(Error::EmptyWindow { subject, t_len });
        }
        Ok(ExposureWindow { times })
    }

    /// Inclusive 1-based [start, end] range, as windows arrive from file.
    pub fn from_range(subject: usize, start: i64, end: i64, t_len: usize) -> Result<Self> {
        if start < 1 || end < start || end as usize > t_len {
            return Err(Error::EmptyWindow { subject, t_len });
        }
        Ok(ExposureWindow {
            times: ((start - 1) as usize..end as usize).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn contains(&self, t: usize) -> bool {
        self.times.binary_search(&t).is_ok()
    }
}

/// Binary masking matrix for time t: entry (i, j) is 1 iff t lies in both
/// subjects' windows.
pub fn mask_matrix(windows: &[ExposureWindow], t: usize) -> Mat {
    let n = windows.len();
    Mat::from_fn(n, n, |i, j| {
        if windows[i].contains(t) && windows[j].contains(t) {
            1.0
        } else {
            0.0
        }
    })
}

/// Time-averaged means: subject i gets the average of its per-time means
/// over its window.
pub fn averaged_mean(per_time_means: &[Vec<f64>], windows: &[ExposureWindow]) -> Result<Vec<f64>> {
    let t_len = per_time_means.len();
    if t_len == 0 {
        return Err(Error::EmptyInput("averaged_mean: no per-time means"));
    }
    let n = windows.len();
    let mut out = vec![0.0; n];
    for (i, w) in windows.iter().enumerate() {
        for &t in w.times() {
            if t >= t_len {
                return Err(Error::EmptyWindow { subject: i, t_len });
            }
            out[i] += per_time_means[t][i];
        }
        out[i] /= w.len() as f64;
    }
    Ok(out)
}

/// Time-averaged covariance under temporal independence:
/// `S̄ = diag(e⁻¹) (Σ_t S⁽ᵗ⁾ ⊙ M⁽ᵗ⁾) diag(e⁻¹)`, accumulated without
/// materializing the masks.
pub fn averaged_covariance(per_time_covs: &[Mat], windows: &[ExposureWindow]) -> Result<Mat> {
    let t_len = per_time_covs.len();
    if t_len == 0 {
        return Err(Error::EmptyInput("averaged_covariance: no per-time covariances"));
    }
    let n = windows.len();
    for (i, w) in windows.iter().enumerate() {
        if w.times().iter().any(|&t| t >= t_len) {
            return Err(Error::EmptyWindow { subject: i, t_len });
        }
    }
    for s in per_time_covs {
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "averaged_covariance",
                expected: n,
                got: s.nrows(),
            });
        }
    }
    // subjects active at each time
    let mut active: Vec<Vec<usize>> = vec![Vec::new(); t_len];
    for (i, w) in windows.iter().enumerate() {
        for &t in w.times() {
            active[t].push(i);
        }
    }
    let mut out = Mat::zeros(n, n);
    for (t, subjects) in active.iter().enumerate() {
        let s = &per_time_covs[t];
        for (a, &i) in subjects.iter().enumerate() {
            for &j in subjects.iter().skip(a) {
                let v = s.get(i, j);
                out.add_to(i, j, v);
                if i != j {
                    out.add_to(j, i, v);
                }
            }
        }
    }
    for (i, wi) in windows.iter().enumerate() {
        for (j, wj) in windows.iter().enumerate() {
            let v = out.get(i, j) / (wi.len() * wj.len()) as f64;
            out.set(i, j, v);
        }
    }
    Ok(out)
}
