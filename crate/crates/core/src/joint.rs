//! Fully Bayesian joint samplers: exposure and health stages fitted
//! together under the process-convolution model, the gold-standard
//! comparator for the two-stage strategies.
//!
//! The (μ, G) update uses the information form
//! `Q = σ_W⁻² K̃ᵀK̃ + (β_x²/σ_Y²) K̆₂ᵀK̆₂ + prior diag`
//! (for the continuous model; the binary model replaces the health block
//! weights by β_x² ω). This is algebraically the stacked-regression update
//! with error covariance `diag(σ_W² 1, (σ_Y²/β_x²) 1)` but stays
//! well-defined as β_x passes through zero.

use rand::Rng;

use crate::clock::Timer;
use crate::error::{Error, Result};
use crate::exposure::{DpcConfig, DpcPriors, Schedule};
use crate::health::{ChainOutput, HealthPriors, OutcomeKind, QUANTILE_RULE};
use crate::linalg::mat::{dot, Cholesky, Mat};
use crate::polya_gamma::draw_polya_gamma_1;
use crate::rng::{draw_inverse_gamma, draw_mvn_dense_precision_factored, standard_normal_vec};

/// Data for a joint fit: exposure measurements plus health outcomes, spatially
/// aligned within one study window.
#[derive(Debug, Clone)]
pub struct JointData {
    pub monitor_sites: Vec<[f64; 2]>,
    pub w: Vec<f64>,
    pub participant_sites: Vec<[f64; 2]>,
    /// Continuous values or 0/1 indicators, per `outcome`.
    pub y: Vec<f64>,
    /// n_y × p covariates.
    pub z: Mat,
    pub outcome: OutcomeKind,
}

/// Model configuration and priors for the joint samplers.
#[derive(Debug, Clone)]
pub struct JointConfig {
    pub dpc: DpcConfig,
    pub exposure_priors: DpcPriors,
    pub health_priors: HealthPriors,
    /// Keep per-sweep exposure draws at participant sites.
    pub store_x: bool,
}

struct JointState {
    mu: f64,
    g: Vec<f64>,
    sigma2_g: f64,
    sigma2_w: f64,
    beta: Vec<f64>,
    sigma2_y: f64,
    omega: Vec<f64>,
}

/// Shared sweep machinery for both outcome kinds.
struct JointEngine {
    l: usize,
    n_w: usize,
    n_y: usize,
    ncoef: usize,
    kernel_w: Mat,
    kernel_y: Mat,
    // Grams of [1, K] over monitors and [1, K*] over participants
    gram_w: Mat,
    gram_y: Mat,
    design_w_t_w: Vec<f64>,
}

impl JointEngine {
    fn new(data: &JointData, cfg: &JointConfig) -> Result<Self> {
        let n_w = data.monitor_sites.len();
        let n_y = data.participant_sites.len();
        if n_w == 0 {
            return Err(Error::EmptyInput("joint fit: no exposure measurements"));
        }
        if data.w.len() != n_w {
            return Err(Error::DimensionMismatch {
                context: "joint fit",
                expected: n_w,
                got: data.w.len(),
            });
        }
        if data.y.len() != n_y || data.z.nrows() != n_y {
            return Err(Error::DimensionMismatch {
                context: "joint fit",
                expected: n_y,
                got: data.y.len().min(data.z.nrows()),
            });
        }
        let l = cfg.dpc.l();
        let kernel_w =
            crate::exposure::kernel_matrix(&data.monitor_sites, &cfg.dpc.grid, cfg.dpc.sigma_k)?;
        let kernel_y = crate::exposure::kernel_matrix(
            &data.participant_sites,
            &cfg.dpc.grid,
            cfg.dpc.sigma_k,
        )?;
        let design_w = Mat::from_fn(n_w, 1 + l, |h, c| {
            if c == 0 {
                1.0
            } else {
                kernel_w.get(h, c - 1)
            }
        });
        let design_y = Mat::from_fn(n_y, 1 + l, |i, c| {
            if c == 0 {
                1.0
            } else {
                kernel_y.get(i, c - 1)
            }
        });
        Ok(JointEngine {
            l,
            n_w,
            n_y,
            ncoef: 2 + data.z.ncols(),
            gram_w: design_w.gram(),
            gram_y: design_y.gram(),
            design_w_t_w: design_w.t_mul_vec(&data.w),
            kernel_w,
            kernel_y,
        })
    }

    /// Exposure at participant sites implied by the current (μ, G).
    fn x_star(&self, state: &JointState) -> Vec<f64> {
        (0..self.n_y)
            .map(|i| state.mu + dot(self.kernel_y.row(i), &state.g))
            .collect()
    }

    /// Joint (μ, G) draw. The health block enters with per-row precision
    /// weight β_x²/σ_Y² (continuous) or β_x² ω_i (binary).
    fn draw_mu_g<R: Rng + ?Sized>(
        &self,
        data: &JointData,
        cfg: &JointConfig,
        state: &mut JointState,
        rng: &mut R,
    ) -> Result<()> {
        let dim = 1 + self.l;
        let inv_w = 1.0 / state.sigma2_w;
        let beta_x = state.beta[1];

        let mut q = Mat::from_fn(dim, dim, |r, c| self.gram_w.get(r, c) * inv_w);
        let mut b: Vec<f64> = self.design_w_t_w.iter().map(|v| v * inv_w).collect();
        match data.outcome {
            OutcomeKind::Continuous => {
                let wgt = beta_x * beta_x / state.sigma2_y;
                if wgt > 0.0 {
                    for r in 0..dim {
                        for c in 0..dim {
                            q.add_to(r, c, self.gram_y.get(r, c) * wgt);
                        }
                    }
                }
                let scale = beta_x / state.sigma2_y;
                if scale != 0.0 {
                    for i in 0..self.n_y {
                        let resid =
                            data.y[i] - state.beta[0] - dot(data.z.row(i), &state.beta[2..]);
                        let kv = self.kernel_y.row(i);
                        b[0] += scale * resid;
                        for (bc, &k) in b[1..].iter_mut().zip(kv) {
                            *bc += scale * k * resid;
                        }
                    }
                }
            }
            OutcomeKind::Binary => {
                for i in 0..self.n_y {
                    let wgt = beta_x * beta_x * state.omega[i];
                    let kv = self.kernel_y.row(i);
                    if wgt != 0.0 {
                        q.add_to(0, 0, wgt);
                        for (c, &kc) in kv.iter().enumerate() {
                            q.add_to(0, c + 1, wgt * kc);
                            q.add_to(c + 1, 0, wgt * kc);
                        }
                        for (rr, &kr) in kv.iter().enumerate() {
                            for (cc, &kc) in kv.iter().enumerate() {
                                q.add_to(rr + 1, cc + 1, wgt * kr * kc);
                            }
                        }
                    }
                    let fixed = state.beta[0] + dot(data.z.row(i), &state.beta[2..]);
                    let target = beta_x * ((data.y[i] - 0.5) - state.omega[i] * fixed);
                    b[0] += target;
                    for (bc, &k) in b[1..].iter_mut().zip(kv) {
                        *bc += target * k;
                    }
                }
            }
        }
        q.add_to(0, 0, 1.0 / cfg.exposure_priors.mu_var);
        for j in 1..dim {
            q.add_to(j, j, 1.0 / state.sigma2_g);
        }
        b[0] += cfg.exposure_priors.mu_mean / cfg.exposure_priors.mu_var;
        let chol = Cholesky::factor_mat(&q, 0.0)?;
        let draw = draw_mvn_dense_precision_factored(rng, &b, &chol)?;
        state.mu = draw[0];
        state.g.copy_from_slice(&draw[1..]);
        Ok(())
    }

    fn draw_exposure_variances<R: Rng + ?Sized>(
        &self,
        data: &JointData,
        cfg: &JointConfig,
        state: &mut JointState,
        rng: &mut R,
    ) -> Result<()> {
        let pr = &cfg.exposure_priors;
        let ss_g = dot(&state.g, &state.g);
        state.sigma2_g = draw_inverse_gamma(
            rng,
            pr.sigma2_g.0 + self.l as f64 / 2.0,
            pr.sigma2_g.1 + ss_g / 2.0,
        )?;
        let mut rss = 0.0;
        for h in 0..self.n_w {
            let fit = state.mu + dot(self.kernel_w.row(h), &state.g);
            rss += (data.w[h] - fit) * (data.w[h] - fit);
        }
        state.sigma2_w = draw_inverse_gamma(
            rng,
            pr.sigma2_w.0 + self.n_w as f64 / 2.0,
            pr.sigma2_w.1 + rss / 2.0,
        )?;
        Ok(())
    }
}

fn design_matrix(x: &[f64], z: &Mat) -> Mat {
    Mat::from_fn(x.len(), 2 + z.ncols(), |i, c| match c {
        0 => 1.0,
        1 => x[i],
        _ => z.get(i, c - 2),
    })
}

/// Fully Bayesian sampler for the continuous outcome: per sweep draw
/// (μ, G), the exposure variances, σ_Y², and β.
pub fn gibbs_joint_linear<R: Rng + ?Sized>(
    data: &JointData,
    cfg: &JointConfig,
    schedule: Schedule,
    rng: &mut R,
) -> Result<ChainOutput> {
    if data.outcome != OutcomeKind::Continuous {
        return Err(Error::Validation(
            "gibbs_joint_linear needs a continuous outcome".into(),
        ));
    }
    let engine = JointEngine::new(data, cfg)?;
    let p = data.z.ncols();
    let ncoef = engine.ncoef;
    let n_y = engine.n_y;
    let y_dot_y = dot(&data.y, &data.y);

    let mut state = JointState {
        mu: data.w.iter().sum::<f64>() / engine.n_w as f64,
        g: vec![0.0; engine.l],
        sigma2_g: 1.0,
        sigma2_w: 1.0,
        beta: vec![0.0; ncoef],
        sigma2_y: 1.0,
        omega: Vec::new(),
    };

    let mut out_beta = Mat::zeros(schedule.kept, ncoef);
    let mut out_sigma = Vec::with_capacity(schedule.kept);
    let mut out_x = if cfg.store_x {
        Some(Mat::zeros(schedule.kept, n_y))
    } else {
        None
    };
    let timer = Timer::start();
    let mut stored = 0usize;
    for iter in 0..schedule.total_iterations() {
        engine.draw_mu_g(data, cfg, &mut state, rng)?;
        engine.draw_exposure_variances(data, cfg, &mut state, rng)?;

        // health block given the implied x*
        let x = engine.x_star(&state);
        let phi = design_matrix(&x, &data.z);
        let mut m = phi.gram();
        for j in 0..ncoef {
            m.add_to(j, j, 1.0 / cfg.health_priors.beta_prior_scale);
        }
        let chol = Cholesky::factor_mat(&m, 0.0)?;
        let phity = phi.t_mul_vec(&data.y);
        let beta_hat = chol.solve(&phity)?;
        let quad = dot(&beta_hat, &phity);
        let rate = cfg.health_priors.b_y + 0.5 * (y_dot_y - quad).max(0.0);
        state.sigma2_y = draw_inverse_gamma(rng, cfg.health_priors.a_y + n_y as f64 / 2.0, rate)?;
        let zvec = standard_normal_vec(rng, ncoef);
        let noise = crate::linalg::mat::triangular_solve(
            chol.l(),
            &zvec,
            crate::linalg::mat::Side::Backward,
        )?;
        for j in 0..ncoef {
            state.beta[j] = beta_hat[j] + state.sigma2_y.sqrt() * noise[j];
        }

        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out_beta.row_mut(stored).copy_from_slice(&state.beta);
            out_sigma.push(state.sigma2_y);
            if let Some(ox) = out_x.as_mut() {
                ox.row_mut(stored).copy_from_slice(&x);
            }
            stored += 1;
        }
    }
    let seconds = timer.elapsed_s();

    let mut names = vec!["beta0".to_string(), "beta_x".to_string()];
    for j in 1..=p {
        names.push(format!("beta_z{j}"));
    }
    names.push("sigma2_y".into());
    Ok(ChainOutput {
        param_names: names,
        beta: out_beta,
        sigma2_y: Some(out_sigma),
        x_draws: out_x,
        schedule,
        seconds,
        prior_tag: "fully-bayes".into(),
        jitter: 0.0,
        quantile_rule: QUANTILE_RULE,
    })
}

/// Fully Bayesian sampler for the binary outcome with Pólya-Gamma
/// augmentation on the health block.
pub fn gibbs_joint_logistic<R: Rng + ?Sized>(
    data: &JointData,
    cfg: &JointConfig,
    schedule: Schedule,
    rng: &mut R,
) -> Result<ChainOutput> {
    if data.outcome != OutcomeKind::Binary {
        return Err(Error::Validation(
            "gibbs_joint_logistic needs a binary outcome".into(),
        ));
    }
    if data.y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Validation("binary outcome must be 0/1".into()));
    }
    let engine = JointEngine::new(data, cfg)?;
    let p = data.z.ncols();
    let ncoef = engine.ncoef;
    let n_y = engine.n_y;
    let kappa: Vec<f64> = data.y.iter().map(|&v| v - 0.5).collect();

    let mut state = JointState {
        mu: data.w.iter().sum::<f64>() / engine.n_w as f64,
        g: vec![0.0; engine.l],
        sigma2_g: 1.0,
        sigma2_w: 1.0,
        beta: vec![0.0; ncoef],
        sigma2_y: 1.0,
        omega: vec![0.25; n_y],
    };

    let mut out_beta = Mat::zeros(schedule.kept, ncoef);
    let mut out_x = if cfg.store_x {
        Some(Mat::zeros(schedule.kept, n_y))
    } else {
        None
    };
    let timer = Timer::start();
    let mut stored = 0usize;
    for iter in 0..schedule.total_iterations() {
        engine.draw_mu_g(data, cfg, &mut state, rng)?;
        engine.draw_exposure_variances(data, cfg, &mut state, rng)?;

        let x = engine.x_star(&state);
        let phi = design_matrix(&x, &data.z);
        let mut m = phi.weighted_gram(&state.omega);
        for j in 0..ncoef {
            m.add_to(j, j, 1.0 / cfg.health_priors.beta_prior_scale);
        }
        let chol = Cholesky::factor_mat(&m, 0.0)?;
        let b = phi.t_mul_vec(&kappa);
        let mean = chol.solve(&b)?;
        let zvec = standard_normal_vec(rng, ncoef);
        let noise = crate::linalg::mat::triangular_solve(
            chol.l(),
            &zvec,
            crate::linalg::mat::Side::Backward,
        )?;
        for j in 0..ncoef {
            state.beta[j] = mean[j] + noise[j];
        }
        for i in 0..n_y {
            let eta = dot(phi.row(i), &state.beta);
            state.omega[i] = draw_polya_gamma_1(rng, eta);
        }

        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out_beta.row_mut(stored).copy_from_slice(&state.beta);
            if let Some(ox) = out_x.as_mut() {
                ox.row_mut(stored).copy_from_slice(&x);
            }
            stored += 1;
        }
    }
    let seconds = timer.elapsed_s();

    let mut names = vec!["beta0".to_string(), "beta_x".to_string()];
    for j in 1..=p {
        names.push(format!("beta_z{j}"));
    }
    Ok(ChainOutput {
        param_names: names,
        beta: out_beta,
        sigma2_y: None,
        x_draws: out_x,
        schedule,
        seconds,
        prior_tag: "fully-bayes".into(),
        jitter: 0.0,
        quantile_rule: QUANTILE_RULE,
    })
}
