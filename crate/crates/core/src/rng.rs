//! Reproducible random-variate generation.
//!
//! Every replicate and chain owns an [`RngStream`] addressed by `(seed,
//! stream)`. Stream keys are expanded through SplitMix64 into a full ChaCha
//! seed, so any stream can be constructed directly without serial draws and
//! distinct streams are statistically independent.

use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::mat::{triangular_solve, Cholesky, DenseSpd, Side};
use crate::linalg::sparse::SparsePrecision;
use crate::linalg::sparse_chol::{FillOrdering, SparseCholesky};

/// A seeded, stream-addressed random number generator.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: StdRng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut state = seed ^ stream.wrapping_mul(0xa076_1d64_78bd_642f);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            seed,
            stream,
            inner: StdRng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// `N(mean, sd²)`. `sd = 0` degenerates to the mean.
pub fn draw_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if sd < 0.0 || !sd.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sd",
            value: sd,
        });
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Inverse gamma with shape `a` and rate `b`: density ∝ x^{-a-1} e^{-b/x}.
pub fn draw_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0) {
        return Err(Error::InvalidParameter {
            name: "shape",
            value: shape,
        });
    }
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter {
            name: "rate",
            value: rate,
        });
    }
    let gamma = Gamma::new(shape, 1.0 / rate).map_err(|_| Error::InvalidParameter {
        name: "shape",
        value: shape,
    })?;
    // Tiny shapes can underflow the gamma draw to zero; redraw instead of
    // returning infinity.
    loop {
        let g = gamma.sample(rng);
        if g > 0.0 && g.is_finite() {
            let x = 1.0 / g;
            if x.is_finite() {
                return Ok(x);
            }
        }
    }
}

/// One draw from `N(mean, cov)` by dense Cholesky: cubic in the dimension.
pub fn draw_mvn_dense<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &[f64],
    cov: &DenseSpd,
) -> Result<Vec<f64>> {
    if mean.len() != cov.n() {
        return Err(Error::DimensionMismatch {
            context: "draw_mvn_dense",
            expected: cov.n(),
            got: mean.len(),
        });
    }
    let chol = Cholesky::factor(cov)?;
    Ok(draw_mvn_dense_factored(rng, mean, &chol))
}

/// Draw reusing an existing covariance factor: `mean + L z`.
pub fn draw_mvn_dense_factored<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &[f64],
    chol: &Cholesky,
) -> Vec<f64> {
    let n = chol.n();
    let z = standard_normal_vec(rng, n);
    let mut out = mean.to_vec();
    for i in 0..n {
        let li = &chol.l().row(i)[..=i];
        out[i] += crate::linalg::mat::dot(li, &z[..=i]);
    }
    out
}

/// Draw from the canonical form `N(P⁻¹ b, P⁻¹)` given a dense *precision*
/// factor `P = L Lᵀ`.
pub fn draw_mvn_dense_precision_factored<R: Rng + ?Sized>(
    rng: &mut R,
    b: &[f64],
    chol: &Cholesky,
) -> Result<Vec<f64>> {
    let mean = chol.solve(b)?;
    let z = standard_normal_vec(rng, chol.n());
    let noise = triangular_solve(chol.l(), &z, Side::Backward)?;
    Ok(mean.iter().zip(&noise).map(|(m, w)| m + w).collect())
}

/// Draw from `N(P⁻¹ b, P⁻¹)` for a sparse SPD precision: factorize, solve for
/// the mean, then backward-solve a standard-normal vector.
pub fn draw_mvn_sparse_precision<R: Rng + ?Sized>(
    rng: &mut R,
    b: &[f64],
    p: &SparsePrecision,
) -> Result<Vec<f64>> {
    if b.len() != p.n() {
        return Err(Error::DimensionMismatch {
            context: "draw_mvn_sparse_precision",
            expected: p.n(),
            got: b.len(),
        });
    }
    let factor = SparseCholesky::factorize(p, FillOrdering::MinDegree)?;
    Ok(draw_mvn_sparse_factored(rng, b, &factor))
}

/// Draw from `N(P⁻¹ b, P⁻¹)` reusing an existing sparse factor.
pub fn draw_mvn_sparse_factored<R: Rng + ?Sized>(
    rng: &mut R,
    b: &[f64],
    factor: &SparseCholesky,
) -> Vec<f64> {
    let mean = factor.solve(b);
    let z = standard_normal_vec(rng, factor.n());
    let noise = factor.noise_from_std_normal(&z);
    mean.iter().zip(&noise).map(|(m, w)| m + w).collect()
}
