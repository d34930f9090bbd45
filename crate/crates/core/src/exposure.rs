//! First-stage exposure model: discrete process convolution over a fixed
//! grid, its Gibbs sampler, posterior prediction at participant locations,
//! and summarization of predictive draws into a mean and covariance.

use rand::Rng;

use crate::clock::Timer;
use crate::error::{Error, Result};
use crate::linalg::mat::{dot, Cholesky, Mat};
use crate::rng::{draw_inverse_gamma, draw_mvn_dense_precision_factored};

/// Gaussian convolution kernel matrix: entry (h, l) is
/// `(2π σ_k²)⁻¹ exp(-‖s_h - u_l‖² / (2 σ_k²))`.
pub fn kernel_matrix(sites: &[[f64; 2]], grid: &[[f64; 2]], sigma_k: f64) -> Result<Mat> {
    if !(sigma_k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma_k",
            value: sigma_k,
        });
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_k * sigma_k);
    let inv_two_s2 = 1.0 / (2.0 * sigma_k * sigma_k);
    Ok(Mat::from_fn(sites.len(), grid.len(), |h, l| {
        let dx = sites[h][0] - grid[l][0];
        let dy = sites[h][1] - grid[l][1];
        norm * (-(dx * dx + dy * dy) * inv_two_s2).exp()
    }))
}

/// Regular `nx × ny` grid over a rectangle, cell-centered like the benchmark
/// layout (5×5 over [0,2]² puts points at {0.2, 0.6, 1.0, 1.4, 1.8}²).
pub fn regular_grid(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Vec<[f64; 2]> {
    let mut grid = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let fx = (ix as f64 + 0.5) / nx as f64;
            let fy = (iy as f64 + 0.5) / ny as f64;
            grid.push([
                x_range.0 + fx * (x_range.1 - x_range.0),
                y_range.0 + fy * (y_range.1 - y_range.0),
            ]);
        }
    }
    grid
}

/// Process-convolution configuration: grid locations and kernel bandwidth.
#[derive(Debug, Clone)]
pub struct DpcConfig {
    pub grid: Vec<[f64; 2]>,
    pub sigma_k: f64,
}

impl DpcConfig {
    pub fn l(&self) -> usize {
        self.grid.len()
    }
}

/// Priors for the static exposure model: normal mean, inverse-gamma
/// variances.
#[derive(Debug, Clone)]
pub struct DpcPriors {
    pub mu_mean: f64,
    pub mu_var: f64,
    /// (shape, rate) for the latent-process variance.
    pub sigma2_g: (f64, f64),
    /// (shape, rate) for the measurement-error variance.
    pub sigma2_w: (f64, f64),
}

impl DpcPriors {
    /// Diffuse defaults: mean prior N(w_bar, 10²), variances IG(0.01, 0.01).
    pub fn diffuse(w_bar: f64) -> Self {
        DpcPriors {
            mu_mean: w_bar,
            mu_var: 100.0,
            sigma2_g: (0.01, 0.01),
            sigma2_w: (0.01, 0.01),
        }
    }
}

/// Burn-in, kept draws, and thinning interval; the chain runs
/// `burn_in + kept * thin` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Schedule {
    pub burn_in: usize,
    pub kept: usize,
    pub thin: usize,
}

impl Schedule {
    pub fn new(burn_in: usize, kept: usize, thin: usize) -> Result<Self> {
        if kept == 0 {
            return Err(Error::InvalidParameter {
                name: "kept",
                value: 0.0,
            });
        }
        if thin == 0 {
            return Err(Error::InvalidParameter {
                name: "thin",
                value: 0.0,
            });
        }
        Ok(Schedule {
            burn_in,
            kept,
            thin,
        })
    }

    pub fn total_iterations(&self) -> usize {
        self.burn_in + self.kept * self.thin
    }
}

/// Kept draws from the first-stage sampler.
#[derive(Debug, Clone)]
pub struct FirstStageDraws {
    pub mu: Vec<f64>,
    /// kept × L.
    pub g: Mat,
    pub sigma2_g: Vec<f64>,
    pub sigma2_w: Vec<f64>,
    pub seconds: f64,
}

/// Parameter state of the first-stage sampler.
#[derive(Debug, Clone)]
pub struct FirstStageState {
    pub mu: f64,
    pub g: Vec<f64>,
    pub sigma2_g: f64,
    pub sigma2_w: f64,
}

/// Precomputed pieces of the first-stage model, exposing one Gibbs sweep at a
/// time so callers can drive custom chains (stationarity checks, the joint
/// sampler's degenerate case).
#[derive(Debug, Clone)]
pub struct FirstStageModel {
    n_w: usize,
    l: usize,
    w: Vec<f64>,
    kernel: Mat,
    gram: Mat,
    design_t_w: Vec<f64>,
    priors: DpcPriors,
}

impl FirstStageModel {
    pub fn new(
        sites: &[[f64; 2]],
        w: &[f64],
        cfg: &DpcConfig,
        priors: &DpcPriors,
    ) -> Result<Self> {
        let n_w = sites.len();
        if n_w == 0 {
            return Err(Error::EmptyInput("first stage: no measurements"));
        }
        if w.len() != n_w {
            return Err(Error::DimensionMismatch {
                context: "first stage",
                expected: n_w,
                got: w.len(),
            });
        }
        let l = cfg.l();
        let kernel = kernel_matrix(sites, &cfg.grid, cfg.sigma_k)?;
        // design [1, K]; its Gram and data product are sweep-invariant
        let design = Mat::from_fn(
            n_w,
            1 + l,
            |h, c| if c == 0 { 1.0 } else { kernel.get(h, c - 1) },
        );
        Ok(FirstStageModel {
            n_w,
            l,
            w: w.to_vec(),
            gram: design.gram(),
            design_t_w: design.t_mul_vec(w),
            kernel,
            priors: priors.clone(),
        })
    }

    /// Neutral start: μ at the data average, G at zero, unit variances.
    pub fn initial_state(&self) -> FirstStageState {
        FirstStageState {
            mu: self.w.iter().sum::<f64>() / self.n_w as f64,
            g: vec![0.0; self.l],
            sigma2_g: 1.0,
            sigma2_w: 1.0,
        }
    }

    /// One sweep: a joint normal draw of (μ, G) from the canonical form
    /// `Q = σ_W⁻² K̃ᵀK̃ + diag(σ_μ⁻², σ_G⁻² I)`, then conjugate inverse-gamma
    /// draws of σ_G² and σ_W².
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut FirstStageState, rng: &mut R) -> Result<()> {
        let l = self.l;
        let inv_w = 1.0 / state.sigma2_w;
        let mut q = Mat::from_fn(1 + l, 1 + l, |r, c| self.gram.get(r, c) * inv_w);
        q.add_to(0, 0, 1.0 / self.priors.mu_var);
        for j in 1..=l {
            q.add_to(j, j, 1.0 / state.sigma2_g);
        }
        let mut b: Vec<f64> = self.design_t_w.iter().map(|v| v * inv_w).collect();
        b[0] += self.priors.mu_mean / self.priors.mu_var;
        let chol = Cholesky::factor_mat(&q, 0.0)?;
        let draw = draw_mvn_dense_precision_factored(rng, &b, &chol)?;
        state.mu = draw[0];
        state.g.copy_from_slice(&draw[1..]);

        let ss_g: f64 = dot(&state.g, &state.g);
        state.sigma2_g = draw_inverse_gamma(
            rng,
            self.priors.sigma2_g.0 + l as f64 / 2.0,
            self.priors.sigma2_g.1 + ss_g / 2.0,
        )?;

        let mut rss = 0.0;
        for h in 0..self.n_w {
            let fit = state.mu + dot(self.kernel.row(h), &state.g);
            rss += (self.w[h] - fit) * (self.w[h] - fit);
        }
        state.sigma2_w = draw_inverse_gamma(
            rng,
            self.priors.sigma2_w.0 + self.n_w as f64 / 2.0,
            self.priors.sigma2_w.1 + rss / 2.0,
        )?;
        Ok(())
    }
}

/// First-stage Gibbs sampler for the static process-convolution model.
pub fn gibbs_first_stage<R: Rng + ?Sized>(
    sites: &[[f64; 2]],
    w: &[f64],
    cfg: &DpcConfig,
    priors: &DpcPriors,
    schedule: Schedule,
    rng: &mut R,
) -> Result<FirstStageDraws> {
    let model = FirstStageModel::new(sites, w, cfg, priors)?;
    let mut state = model.initial_state();
    let l = cfg.l();

    let mut out = FirstStageDraws {
        mu: Vec::with_capacity(schedule.kept),
        g: Mat::zeros(schedule.kept, l),
        sigma2_g: Vec::with_capacity(schedule.kept),
        sigma2_w: Vec::with_capacity(schedule.kept),
        seconds: 0.0,
    };

    let timer = Timer::start();
    let total = schedule.total_iterations();
    let mut stored = 0usize;
    for iter in 0..total {
        model.sweep(&mut state, rng)?;
        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out.mu.push(state.mu);
            out.g.row_mut(stored).copy_from_slice(&state.g);
            out.sigma2_g.push(state.sigma2_g);
            out.sigma2_w.push(state.sigma2_w);
            stored += 1;
        }
    }
    out.seconds = timer.elapsed_s();
    debug_assert_eq!(stored, schedule.kept);
    Ok(out)
}

/// Evaluates each kept draw at new sites: row ℓ of the result is
/// `μ(ℓ) 1 + K* G(ℓ)`.
pub fn predict_at(sites: &[[f64; 2]], cfg: &DpcConfig, draws: &FirstStageDraws) -> Result<Mat> {
    if draws.mu.is_empty() {
        return Err(Error::EmptyInput("predict_at: no draws"));
    }
    let kernel = kernel_matrix(sites, &cfg.grid, cfg.sigma_k)?;
    let kept = draws.mu.len();
    let mut out = Mat::zeros(kept, sites.len());
    for ell in 0..kept {
        let g = draws.g.row(ell);
        let row = out.row_mut(ell);
        for (i, r) in row.iter_mut().enumerate() {
            *r = draws.mu[ell] + dot(kernel.row(i), g);
        }
    }
    Ok(out)
}

/// Posterior-predictive summary: sample mean and covariance of the draws.
#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    pub mean: Vec<f64>,
    /// Sample covariance, n_y × n_y. PSD but typically rank-deficient when
    /// the predictive lives on a low-dimensional surface.
    pub cov: Mat,
    pub n_samples: usize,
}

impl PredictiveSummary {
    pub fn variances(&self) -> Vec<f64> {
        self.cov.diag()
    }
}

/// Sample mean `m = N⁻¹ Σ X⁽ℓ⁾` and covariance
/// `S = (N-1)⁻¹ Σ (X⁽ℓ⁾-m)(X⁽ℓ⁾-m)ᵀ` over draw rows.
pub fn summarize(x_draws: &Mat) -> Result<PredictiveSummary> {
    let n_samples = x_draws.nrows();
    let dim = x_draws.ncols();
    if n_samples < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: n_samples,
        });
    }
    let mut mean = vec![0.0; dim];
    for ell in 0..n_samples {
        for (m, &v) in mean.iter_mut().zip(x_draws.row(ell)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n_samples as f64;
    }
    let mut cov = Mat::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for ell in 0..n_samples {
        for (c, (&v, &m)) in centered.iter_mut().zip(x_draws.row(ell).iter().zip(&mean)) {
            *c = v - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = cov.row_mut(i);
            for (j, &cj) in centered.iter().enumerate().skip(i) {
                row[j] += ci * cj;
            }
        }
    }
    let denom = (n_samples - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(PredictiveSummary {
        mean,
        cov,
        n_samples,
    })
}

// --- spatiotemporal extension ------------------------------------------------

/// One exposure measurement at (site, time); missing (site, time) pairs are
/// simply absent.
#[derive(Debug, Clone, Copy)]
pub struct StObservation {
    pub site: usize,
    /// 0-based time index.
    pub t: usize,
    pub w: f64,
}

/// Priors for the spatiotemporal model: spline coefficients N(0, alpha_var I)
/// plus the inverse-gamma variance pair.
#[derive(Debug, Clone)]
pub struct StPriors {
    pub alpha_var: f64,
    pub sigma2_g: (f64, f64),
    pub sigma2_w: (f64, f64),
}

impl StPriors {
    pub fn diffuse() -> Self {
        StPriors {
            alpha_var: 100.0 * 100.0,
            sigma2_g: (0.01, 0.01),
            sigma2_w: (0.01, 0.01),
        }
    }
}

/// Kept draws from the spatiotemporal sampler.
#[derive(Debug, Clone)]
pub struct StDraws {
    /// kept × df spline coefficients.
    pub alpha: Mat,
    /// Per time: kept × L latent-process draws.
    pub g: Vec<Mat>,
    pub sigma2_g: Vec<f64>,
    pub sigma2_w: Vec<f64>,
    /// T × df basis used for the temporal intercept.
    pub basis: Mat,
    pub seconds: f64,
}

impl StDraws {
    /// Temporal intercept μ(t) for one kept draw.
    pub fn mu_at(&self, ell: usize, t: usize) -> f64 {
        dot(self.basis.row(t), self.alpha.row(ell))
    }
}

/// Spatiotemporal extension: temporally varying intercept through a B-spline
/// basis, independent latent processes per time, pooled variance updates over
/// `T × L` and per-observation residual terms. Missing (site, time) rows are
/// dropped from the likelihood.
pub fn gibbs_first_stage_spatiotemporal<R: Rng + ?Sized>(
    sites: &[[f64; 2]],
    obs: &[StObservation],
    t_len: usize,
    cfg: &DpcConfig,
    spline_df: usize,
    priors: &StPriors,
    schedule: Schedule,
    rng: &mut R,
) -> Result<StDraws> {
    if t_len == 0 || obs.is_empty() {
        return Err(Error::EmptyInput("gibbs_first_stage_spatiotemporal"));
    }
    let l = cfg.l();
    let df = if t_len == 1 { 1 } else { spline_df };
    for o in obs {
        if o.site >= sites.len() || o.t >= t_len {
            return Err(Error::Validation(format!(
                "observation at site {} time {} out of range",
                o.site, o.t
            )));
        }
    }
    let kernel = kernel_matrix(sites, &cfg.grid, cfg.sigma_k)?;
    let times: Vec<f64> = (1..=t_len).map(|t| t as f64).collect();
    let basis = crate::bspline::bspline_basis(&times, 1.0, t_len as f64, df)?;
    let df = basis.ncols();

    // per-time observation lists and cached per-time kernel Grams
    let mut per_t: Vec<Vec<usize>> = vec![Vec::new(); t_len];
    for (i, o) in obs.iter().enumerate() {
        per_t[o.t].push(i);
    }
    let mut k_gram_t: Vec<Mat> = Vec::with_capacity(t_len);
    for rows in &per_t {
        let kt = Mat::from_fn(rows.len(), l, |r, c| kernel.get(obs[rows[r]].site, c));
        k_gram_t.push(kt.gram());
    }
    // spline Gram over all observations
    let mut basis_gram = Mat::zeros(df, df);
    for (t, rows) in per_t.iter().enumerate() {
        let phi = basis.row(t);
        let w = rows.len() as f64;
        for a in 0..df {
            for b in 0..df {
                basis_gram.add_to(a, b, w * phi[a] * phi[b]);
            }
        }
    }

    let n_obs = obs.len() as f64;
    let mut alpha = vec![0.0; df];
    let w_bar = obs.iter().map(|o| o.w).sum::<f64>() / n_obs;
    alpha[0] = w_bar; // partition-of-unity basis makes this a level start
    let mut g: Vec<Vec<f64>> = vec![vec![0.0; l]; t_len];
    let mut sigma2_g = 1.0;
    let mut sigma2_w = 1.0;

    let mut out = StDraws {
        alpha: Mat::zeros(schedule.kept, df),
        g: (0..t_len).map(|_| Mat::zeros(schedule.kept, l)).collect(),
        sigma2_g: Vec::with_capacity(schedule.kept),
        sigma2_w: Vec::with_capacity(schedule.kept),
        basis: basis.clone(),
        seconds: 0.0,
    };

    let timer = Timer::start();
    let total = schedule.total_iterations();
    let mut stored = 0usize;
    for iter in 0..total {
        let inv_w = 1.0 / sigma2_w;

        // alpha | G: precision sigma_W^-2 Phi'Phi + alpha_var^-1 I
        let mut q = Mat::from_fn(df, df, |r, c| basis_gram.get(r, c) * inv_w);
        for r in 0..df {
            q.add_to(r, r, 1.0 / priors.alpha_var);
        }
        let mut b = vec![0.0; df];
        for (t, rows) in per_t.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let phi = basis.row(t);
            let mut resid_sum = 0.0;
            for &i in rows {
                let o = &obs[i];
                resid_sum += o.w - dot(kernel.row(o.site), &g[t]);
            }
            for a in 0..df {
                b[a] += inv_w * phi[a] * resid_sum;
            }
        }
        let chol = Cholesky::factor_mat(&q, 0.0)?;
        alpha = draw_mvn_dense_precision_factored(rng, &b, &chol)?;

        // G(., t) | alpha, per time
        for (t, rows) in per_t.iter().enumerate() {
            let mu_t = dot(basis.row(t), &alpha);
            let mut q = Mat::from_fn(l, l, |r, c| k_gram_t[t].get(r, c) * inv_w);
            for r in 0..l {
                q.add_to(r, r, 1.0 / sigma2_g);
            }
            let mut b = vec![0.0; l];
            for &i in rows {
                let o = &obs[i];
                let r = o.w - mu_t;
                for (bc, &kv) in b.iter_mut().zip(kernel.row(o.site)) {
                    *bc += inv_w * kv * r;
                }
            }
            let chol = Cholesky::factor_mat(&q, 0.0)?;
            g[t] = draw_mvn_dense_precision_factored(rng, &b, &chol)?;
        }

        // pooled variances over T x L and all observed residuals
        let ss_g: f64 = g.iter().map(|gt| dot(gt, gt)).sum();
        sigma2_g = draw_inverse_gamma(
            rng,
            priors.sigma2_g.0 + (t_len * l) as f64 / 2.0,
            priors.sigma2_g.1 + ss_g / 2.0,
        )?;
        let mut rss = 0.0;
        for (t, rows) in per_t.iter().enumerate() {
            let mu_t = dot(basis.row(t), &alpha);
            for &i in rows {
                let o = &obs[i];
                let fit = mu_t + dot(kernel.row(o.site), &g[t]);
                rss += (o.w - fit) * (o.w - fit);
            }
        }
        sigma2_w = draw_inverse_gamma(
            rng,
            priors.sigma2_w.0 + n_obs / 2.0,
            priors.sigma2_w.1 + rss / 2.0,
        )?;

        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out.alpha.row_mut(stored).copy_from_slice(&alpha);
            for t in 0..t_len {
                out.g[t].row_mut(stored).copy_from_slice(&g[t]);
            }
            out.sigma2_g.push(sigma2_g);
            out.sigma2_w.push(sigma2_w);
            stored += 1;
        }
    }
    out.seconds = timer.elapsed_s();
    Ok(out)
}

/// Per-draw prediction at new sites for one time slice of a spatiotemporal
/// fit.
pub fn predict_at_time(
    sites: &[[f64; 2]],
    cfg: &DpcConfig,
    draws: &StDraws,
    t: usize,
) -> Result<Mat> {
    let kernel = kernel_matrix(sites, &cfg.grid, cfg.sigma_k)?;
    let kept = draws.alpha.nrows();
    let mut out = Mat::zeros(kept, sites.len());
    for ell in 0..kept {
        let mu = draws.mu_at(ell, t);
        let g = draws.g[t].row(ell);
        for (i, r) in out.row_mut(ell).iter_mut().enumerate() {
            *r = mu + dot(kernel.row(i), g);
        }
    }
    Ok(out)
}
