//! Second-stage health models under the four exposure-uncertainty
//! propagation strategies: plug-in, independent normal, sparse MVN
//! (Vecchia), and dense MVN.
//!
//! Both samplers share the same X* update: draw from
//! `N((Σ₀⁻¹+D)⁻¹ b, (Σ₀⁻¹+D)⁻¹)` where Σ₀⁻¹ is the prior precision of the
//! active variant and D is the diagonal likelihood contribution. With the
//! sparse prior the precision keeps the Vecchia pattern for every sweep, so
//! the factorization is analyzed symbolically once and refactorized
//! numerically per sweep.

use rand::Rng;

use crate::clock::Timer;
use crate::error::{Error, Result};
use crate::linalg::mat::{dot, Cholesky, DenseSpd, Mat};
use crate::linalg::sparse::SparsePrecision;
use crate::linalg::sparse_chol::{FillOrdering, SparseCholesky};
use crate::polya_gamma::draw_polya_gamma_1;
use crate::rng::{draw_inverse_gamma, standard_normal_vec};
use crate::vecchia::VecchiaSurrogate;

pub use crate::exposure::Schedule;

/// Outcome family of the health regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Continuous,
    Binary,
}

/// Second-stage prior on the unknown exposures X*.
#[derive(Debug, Clone)]
pub enum ExposurePrior {
    /// Exposures fixed at a point estimate; the X* update is skipped.
    PlugIn { mean: Vec<f64> },
    /// Independent normals keeping only marginal variances.
    IndependentNormal { mean: Vec<f64>, variances: Vec<f64> },
    /// Sparse MVN through a Vecchia surrogate: N(m, Q⁻¹) with Q = U Uᵀ.
    SparseMvn(VecchiaSurrogate),
    /// Dense MVN baseline N(m, S); cubic-cost updates.
    DenseMvn { mean: Vec<f64>, cov: DenseSpd },
}

impl ExposurePrior {
    pub fn dim(&self) -> usize {
        match self {
            ExposurePrior::PlugIn { mean } => mean.len(),
            ExposurePrior::IndependentNormal { mean, .. } => mean.len(),
            ExposurePrior::SparseMvn(s) => s.n(),
            ExposurePrior::DenseMvn { mean, .. } => mean.len(),
        }
    }

    pub fn mean(&self) -> &[f64] {
        match self {
            ExposurePrior::PlugIn { mean } => mean,
            ExposurePrior::IndependentNormal { mean, .. } => mean,
            ExposurePrior::SparseMvn(s) => s.mean(),
            ExposurePrior::DenseMvn { mean, .. } => mean,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            ExposurePrior::PlugIn { .. } => "plugin".into(),
            ExposurePrior::IndependentNormal { .. } => "independent".into(),
            ExposurePrior::SparseMvn(s) => format!("sparse:{}", s.plan().k()),
            ExposurePrior::DenseMvn { .. } => "dense".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let ExposurePrior::IndependentNormal { mean, variances } = self {
            if variances.len() != mean.len() {
                return Err(Error::DimensionMismatch {
                    context: "ExposurePrior::IndependentNormal",
                    expected: mean.len(),
                    got: variances.len(),
                });
            }
            if variances.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Validation(
                    "independent-normal prior variances must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Priors for the regression block: `β ~ N(0, scale·I)` (scaled by σ_Y² in
/// the continuous model) and `σ_Y² ~ IG(a, b)`.
#[derive(Debug, Clone)]
pub struct HealthPriors {
    pub beta_prior_scale: f64,
    pub a_y: f64,
    pub b_y: f64,
}

impl HealthPriors {
    pub fn diffuse() -> Self {
        HealthPriors {
            beta_prior_scale: 100.0,
            a_y: 0.01,
            b_y: 0.01,
        }
    }
}

/// Knobs that do not change the model: draw storage, the dense-path size
/// guard, and the jitter already applied upstream (recorded in the output).
#[derive(Debug, Clone)]
pub struct ChainOptions {
    pub store_x: bool,
    pub dense_size_limit: usize,
    pub force_dense: bool,
    pub jitter: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            store_x: false,
            dense_size_limit: 20_000,
            force_dense: false,
            jitter: 0.0,
        }
    }
}

pub const QUANTILE_RULE: &str = "type7-linear-interpolation";

/// Stored draws and metadata from one second-stage chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Names aligned with `beta` columns: beta0, beta_x, beta_z1, ...
    pub param_names: Vec<String>,
    /// kept × (2+p) coefficient draws.
    pub beta: Mat,
    pub sigma2_y: Option<Vec<f64>>,
    /// kept × n_y exposure draws when requested.
    pub x_draws: Option<Mat>,
    pub schedule: Schedule,
    /// Wall-clock seconds around the Gibbs loop only.
    pub seconds: f64,
    pub prior_tag: String,
    pub jitter: f64,
    pub quantile_rule: &'static str,
}

impl ChainOutput {
    pub fn beta_x(&self) -> Vec<f64> {
        self.beta.column(1)
    }
}

/// Precision of the X* full conditional, in the representation native to the
/// prior variant.
#[derive(Debug, Clone)]
pub enum XPrecision {
    Diagonal(Vec<f64>),
    Sparse(SparsePrecision),
    Dense(Mat),
}

/// Coefficient state entering the X* update.
#[derive(Debug, Clone, Copy)]
pub struct CoefState<'a> {
    pub beta0: f64,
    pub beta_x: f64,
    pub beta_z: &'a [f64],
}

/// Likelihood contribution to the X* update: Gaussian noise (continuous) or
/// Pólya-Gamma weights (binary).
#[derive(Debug, Clone, Copy)]
pub enum XNoise<'a> {
    Gaussian { sigma2_y: f64 },
    PolyaGamma { omega: &'a [f64] },
}

/// Canonical parameters (P, b) of the X* full conditional
/// `N(P⁻¹ b, P⁻¹)` with `P = Σ₀⁻¹ + D`.
///
/// Continuous: `D = (β_x²/σ_Y²) I`, `b = Σ₀⁻¹μ₀ + (β_x/σ_Y²)(y - β₀1 - Zβ_z)`.
/// Binary: `D = β_x² diag(ω)`,
/// `b = Σ₀⁻¹μ₀ + β_x[(y - ½) - ω ⊙ (β₀1 + Zβ_z)]`.
pub fn x_full_conditional_params(
    prior: &ExposurePrior,
    y: &[f64],
    z: &Mat,
    coef: CoefState,
    noise: XNoise,
) -> Result<(XPrecision, Vec<f64>)> {
    prior.validate()?;
    let n = prior.dim();
    if y.len() != n || z.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "x_full_conditional_params",
            expected: n,
            got: y.len().min(z.nrows()),
        });
    }
    let (d, resid_term) = likelihood_terms(y, z, coef, noise);
    match prior {
        ExposurePrior::PlugIn { .. } => Err(Error::VariantMismatch("PlugIn")),
        ExposurePrior::IndependentNormal { mean, variances } => {
            let p: Vec<f64> = variances
                .iter()
                .zip(&d)
                .map(|(v, di)| 1.0 / v + di)
                .collect();
            let b: Vec<f64> = mean
                .iter()
                .zip(variances)
                .zip(&resid_term)
                .map(|((m, v), r)| m / v + r)
                .collect();
            Ok((XPrecision::Diagonal(p), b))
        }
        ExposurePrior::SparseMvn(surr) => {
            let mut q = surr.precision()?;
            let diag_pos = q.diag_positions()?;
            for (i, &pos) in diag_pos.iter().enumerate() {
                q.values_mut()[pos] += d[i];
            }
            let b0 = surr.mul_q_original(surr.mean());
            let b: Vec<f64> = b0.iter().zip(&resid_term).map(|(a, r)| a + r).collect();
            Ok((XPrecision::Sparse(q), b))
        }
        ExposurePrior::DenseMvn { mean, cov } => {
            let chol = Cholesky::factor(cov)?;
            let s_inv = chol.inverse();
            let mut p = s_inv.clone();
            for (i, &di) in d.iter().enumerate() {
                p.add_to(i, i, di);
            }
            let b0 = s_inv.mul_vec(mean);
            let b: Vec<f64> = b0.iter().zip(&resid_term).map(|(a, r)| a + r).collect();
            Ok((XPrecision::Dense(p), b))
        }
    }
}

/// Symbolic factorization of a prior precision that will be refactorized
/// numerically every sweep: try the minimum-degree and minimum-fill
/// orderings, keep whichever fills less.
pub fn factorize_prior_precision(p: &SparsePrecision) -> Result<SparseCholesky> {
    let md = SparseCholesky::factorize(p, FillOrdering::MinDegree)?;
    let mf = SparseCholesky::factorize(p, FillOrdering::MinFill)?;
    Ok(if mf.nnz_l() < md.nnz_l() { mf } else { md })
}

/// (D diagonal, likelihood part of b) shared by all variants.
fn likelihood_terms(y: &[f64], z: &Mat, coef: CoefState, noise: XNoise) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut d = vec![0.0; n];
    let mut b = vec![0.0; n];
    match noise {
        XNoise::Gaussian { sigma2_y } => {
            let dv = coef.beta_x * coef.beta_x / sigma2_y;
            let scale = coef.beta_x / sigma2_y;
            for i in 0..n {
                d[i] = dv;
                let fixed = coef.beta0 + dot(z.row(i), coef.beta_z);
                b[i] = scale * (y[i] - fixed);
            }
        }
        XNoise::PolyaGamma { omega } => {
            for i in 0..n {
                d[i] = coef.beta_x * coef.beta_x * omega[i];
                let fixed = coef.beta0 + dot(z.row(i), coef.beta_z);
                b[i] = coef.beta_x * ((y[i] - 0.5) - omega[i] * fixed);
            }
        }
    }
    (d, b)
}

/// Per-chain sampling engine for the X* full conditional. The sparse variant
/// runs the symbolic analysis once and refactorizes values per sweep.
enum XEngine {
    PlugIn,
    Independent {
        inv_var: Vec<f64>,
        b0: Vec<f64>,
    },
    Sparse {
        p: SparsePrecision,
        base_values: Vec<f64>,
        diag_pos: Vec<usize>,
        b0: Vec<f64>,
        factor: SparseCholesky,
    },
    Dense {
        s_inv: Mat,
        b0: Vec<f64>,
    },
}

impl XEngine {
    fn build(prior: &ExposurePrior, opts: &ChainOptions) -> Result<Self> {
        prior.validate()?;
        match prior {
            ExposurePrior::PlugIn { .. } => Ok(XEngine::PlugIn),
            ExposurePrior::IndependentNormal { mean, variances } => Ok(XEngine::Independent {
                inv_var: variances.iter().map(|v| 1.0 / v).collect(),
                b0: mean.iter().zip(variances).map(|(m, v)| m / v).collect(),
            }),
            ExposurePrior::SparseMvn(surr) => {
                let p = surr.precision()?;
                let base_values = p.values().to_vec();
                let diag_pos = p.diag_positions()?;
                let b0 = surr.mul_q_original(surr.mean());
                let factor = factorize_prior_precision(&p)?;
                Ok(XEngine::Sparse {
                    p,
                    base_values,
                    diag_pos,
                    b0,
                    factor,
                })
            }
            ExposurePrior::DenseMvn { mean, cov } => {
                if cov.n() > opts.dense_size_limit && !opts.force_dense {
                    return Err(Error::Validation(format!(
                        "dense MVN path refused at n = {} (limit {}); use force_dense",
                        cov.n(),
                        opts.dense_size_limit
                    )));
                }
                let chol = Cholesky::factor(cov)?;
                let s_inv = chol.inverse();
                let b0 = s_inv.mul_vec(mean);
                Ok(XEngine::Dense { s_inv, b0 })
            }
        }
    }

    /// Draws X* given the likelihood terms (D, resid). Returns None for the
    /// plug-in engine.
    fn draw<R: Rng + ?Sized>(
        &mut self,
        d: &[f64],
        resid: &[f64],
        rng: &mut R,
    ) -> Result<Option<Vec<f64>>> {
        match self {
            XEngine::PlugIn => Ok(None),
            XEngine::Independent { inv_var, b0 } => {
                let n = inv_var.len();
                let mut x = vec![0.0; n];
                let z = standard_normal_vec(rng, n);
                for i in 0..n {
                    let prec = inv_var[i] + d[i];
                    let mean = (b0[i] + resid[i]) / prec;
                    x[i] = mean + z[i] / prec.sqrt();
                }
                Ok(Some(x))
            }
            XEngine::Sparse {
                p,
                base_values,
                diag_pos,
                b0,
                factor,
            } => {
                {
                    let vals = p.values_mut();
                    vals.copy_from_slice(base_values);
                    for (i, &pos) in diag_pos.iter().enumerate() {
                        vals[pos] += d[i];
                    }
                }
                factor.refactorize(p)?;
                let b: Vec<f64> = b0.iter().zip(resid).map(|(a, r)| a + r).collect();
                Ok(Some(crate::rng::draw_mvn_sparse_factored(rng, &b, factor)))
            }
            XEngine::Dense { s_inv, b0 } => {
                let mut pmat = s_inv.clone();
                for (i, &di) in d.iter().enumerate() {
                    pmat.add_to(i, i, di);
                }
                let chol = Cholesky::factor_mat(&pmat, 0.0)?;
                let b: Vec<f64> = b0.iter().zip(resid).map(|(a, r)| a + r).collect();
                Ok(Some(crate::rng::draw_mvn_dense_precision_factored(
                    rng, &b, &chol,
                )?))
            }
        }
    }
}

fn design_matrix(x: &[f64], z: &Mat) -> Mat {
    let n = x.len();
    let p = z.ncols();
    Mat::from_fn(n, 2 + p, |i, c| match c {
        0 => 1.0,
        1 => x[i],
        _ => z.get(i, c - 2),
    })
}

fn param_names(p: usize, continuous: bool) -> Vec<String> {
    let mut names = vec!["beta0".to_string(), "beta_x".to_string()];
    for j in 1..=p {
        names.push(format!("beta_z{j}"));
    }
    if continuous {
        names.push("sigma2_y".to_string());
    }
    names
}

/// Second-stage Gibbs sampler for the normal linear model under a conjugate
/// normal-inverse-gamma coefficient prior.
///
/// Sweep: draw X* from its full conditional (skipped for plug-in), then
/// `σ_Y² | Y, X*`, then `β | σ_Y², Y, X*` around the ridge estimate
/// `(Σ_β⁻¹ + ΦᵀΦ)⁻¹ ΦᵀY`.
pub fn gibbs_linear<R: Rng + ?Sized>(
    prior: &ExposurePrior,
    y: &[f64],
    z: &Mat,
    priors: &HealthPriors,
    schedule: Schedule,
    opts: &ChainOptions,
    rng: &mut R,
) -> Result<ChainOutput> {
    let n = prior.dim();
    if y.len() != n || z.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "gibbs_linear",
            expected: n,
            got: y.len().min(z.nrows()),
        });
    }
    let p = z.ncols();
    let ncoef = 2 + p;
    let mut engine = XEngine::build(prior, opts)?;
    let plug_in = matches!(engine, XEngine::PlugIn);

    let y_dot_y = dot(y, y);
    let mut x = prior.mean().to_vec();
    let mut beta = vec![0.0; ncoef];
    let mut sigma2_y = 1.0;

    let mut phi = design_matrix(&x, z);
    let mut gram_chol: Option<(Cholesky, Vec<f64>)> = None;

    let mut out_beta = Mat::zeros(schedule.kept, ncoef);
    let mut out_sigma = Vec::with_capacity(schedule.kept);
    let mut out_x = if opts.store_x {
        Some(Mat::zeros(schedule.kept, n))
    } else {
        None
    };

    let timer = Timer::start();
    let mut stored = 0usize;
    for iter in 0..schedule.total_iterations() {
        // Step 1: X*
        if !plug_in {
            let coef = CoefState {
                beta0: beta[0],
                beta_x: beta[1],
                beta_z: &beta[2..],
            };
            let (d, resid) = likelihood_terms(y, z, coef, XNoise::Gaussian { sigma2_y });
            if let Some(new_x) = engine.draw(&d, &resid, rng)? {
                x = new_x;
                phi = design_matrix(&x, z);
                gram_chol = None;
            }
        }

        // ridge system M = Sigma_beta^-1 + Phi'Phi, shared by steps 2 and 3;
        // fixed across sweeps for the plug-in path
        if gram_chol.is_none() {
            let mut m = phi.gram();
            for j in 0..ncoef {
                m.add_to(j, j, 1.0 / priors.beta_prior_scale);
            }
            let chol = Cholesky::factor_mat(&m, 0.0)?;
            let phity = phi.t_mul_vec(y);
            gram_chol = Some((chol, phity));
        }
        let (chol, phity) = gram_chol.as_ref().expect("built above");
        let beta_hat = chol.solve(phity)?;

        // Step 2: sigma_Y^2 from the marginalized quadratic form
        let quad = dot(&beta_hat, phity);
        let rate = priors.b_y + 0.5 * (y_dot_y - quad).max(0.0);
        sigma2_y = draw_inverse_gamma(rng, priors.a_y + n as f64 / 2.0, rate)?;

        // Step 3: beta | sigma_Y^2
        let zvec = standard_normal_vec(rng, ncoef);
        let noise = crate::linalg::mat::triangular_solve(
            chol.l(),
            &zvec,
            crate::linalg::mat::Side::Backward,
        )?;
        for j in 0..ncoef {
            beta[j] = beta_hat[j] + sigma2_y.sqrt() * noise[j];
        }

        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out_beta.row_mut(stored).copy_from_slice(&beta);
            out_sigma.push(sigma2_y);
            if let Some(ox) = out_x.as_mut() {
                ox.row_mut(stored).copy_from_slice(&x);
            }
            stored += 1;
        }
    }
    let seconds = timer.elapsed_s();

    Ok(ChainOutput {
        param_names: param_names(p, true),
        beta: out_beta,
        sigma2_y: Some(out_sigma),
        x_draws: out_x,
        schedule,
        seconds,
        prior_tag: prior.tag(),
        jitter: opts.jitter,
        quantile_rule: QUANTILE_RULE,
    })
}

/// Second-stage Gibbs sampler for the logistic model with Pólya-Gamma
/// augmentation.
///
/// Sweep: X* from its full conditional (skipped for plug-in), then
/// `β | Y, X*, ω` from the weighted ridge normal, then
/// `ω_i ~ PG(1, φ_iᵀβ)`.
pub fn gibbs_logistic<R: Rng + ?Sized>(
    prior: &ExposurePrior,
    y: &[f64],
    z: &Mat,
    priors: &HealthPriors,
    schedule: Schedule,
    opts: &ChainOptions,
    rng: &mut R,
) -> Result<ChainOutput> {
    let n = prior.dim();
    if y.len() != n || z.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "gibbs_logistic",
            expected: n,
            got: y.len().min(z.nrows()),
        });
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Validation("binary outcome must be 0/1".into()));
    }
    let p = z.ncols();
    let ncoef = 2 + p;
    let mut engine = XEngine::build(prior, opts)?;
    let plug_in = matches!(engine, XEngine::PlugIn);

    let mut x = prior.mean().to_vec();
    let mut beta = vec![0.0; ncoef];
    let mut omega = vec![0.25; n];
    let mut phi = design_matrix(&x, z);
    let kappa: Vec<f64> = y.iter().map(|&v| v - 0.5).collect();

    let mut out_beta = Mat::zeros(schedule.kept, ncoef);
    let mut out_x = if opts.store_x {
        Some(Mat::zeros(schedule.kept, n))
    } else {
        None
    };

    let timer = Timer::start();
    let mut stored = 0usize;
    for iter in 0..schedule.total_iterations() {
        // Step 1: X*
        if !plug_in {
            let coef = CoefState {
                beta0: beta[0],
                beta_x: beta[1],
                beta_z: &beta[2..],
            };
            let (d, resid) = likelihood_terms(y, z, coef, XNoise::PolyaGamma { omega: &omega });
            if let Some(new_x) = engine.draw(&d, &resid, rng)? {
                x = new_x;
                phi = design_matrix(&x, z);
            }
        }

        // Step 2: beta | omega from the weighted ridge normal
        let mut m = phi.weighted_gram(&omega);
        for j in 0..ncoef {
            m.add_to(j, j, 1.0 / priors.beta_prior_scale);
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
            beta[j] = mean[j] + noise[j];
        }

        // Step 3: omega_i ~ PG(1, phi_i' beta)
        for i in 0..n {
            let eta = dot(phi.row(i), &beta);
            omega[i] = draw_polya_gamma_1(rng, eta);
        }

        if iter >= schedule.burn_in
            && (iter - schedule.burn_in) % schedule.thin == 0
            && stored < schedule.kept
        {
            out_beta.row_mut(stored).copy_from_slice(&beta);
            if let Some(ox) = out_x.as_mut() {
                ox.row_mut(stored).copy_from_slice(&x);
            }
            stored += 1;
        }
    }
    let seconds = timer.elapsed_s();

    Ok(ChainOutput {
        param_names: param_names(p, false),
        beta: out_beta,
        sigma2_y: None,
        x_draws: out_x,
        schedule,
        seconds,
        prior_tag: prior.tag(),
        jitter: opts.jitter,
        quantile_rule: QUANTILE_RULE,
    })
}

// --- summaries ----------------------------------------------------------------

/// Posterior summary of one scalar parameter.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Type-7 quantile (linear interpolation of order statistics) on sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn summarize_column(name: &str, draws: &[f64]) -> ParamSummary {
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = if draws.len() > 1 {
        (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ParamSummary {
        name: name.to_string(),
        mean,
        sd,
        lo95: quantile_type7(&sorted, 0.025),
        hi95: quantile_type7(&sorted, 0.975),
    }
}

/// Posterior mean, sd, and central 95% interval per parameter.
pub fn summarize_chain(chain: &ChainOutput) -> Result<Vec<ParamSummary>> {
    if chain.beta.nrows() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: chain.beta.nrows(),
        });
    }
    let mut out = Vec::new();
    for (j, name) in chain
        .param_names
        .iter()
        .enumerate()
        .take(chain.beta.ncols())
    {
        out.push(summarize_column(name, &chain.beta.column(j)));
    }
    if let Some(s) = &chain.sigma2_y {
        out.push(summarize_column("sigma2_y", s));
    }
    Ok(out)
}

/// Monte Carlo standard error of the chain mean by nonoverlapping batch
/// means.
pub fn mcse_batch_means(draws: &[f64]) -> f64 {
    let n = draws.len();
    if n < 4 {
        return f64::NAN;
    }
    let n_batches = ((n as f64).sqrt().floor() as usize).clamp(2, 50);
    let batch = n / n_batches;
    let used = batch * n_batches;
    let grand = draws[..used].iter().sum::<f64>() / used as f64;
    let mut var = 0.0;
    for b in 0..n_batches {
        let m = draws[b * batch..(b + 1) * batch].iter().sum::<f64>() / batch as f64;
        var += (m - grand).powi(2);
    }
    var *= batch as f64 / (n_batches as f64 - 1.0);
    (var / used as f64).sqrt()
}

// --- closed-form plug-in fits --------------------------------------------------

/// Non-Bayesian fit: estimates and asymptotic standard errors.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub names: Vec<String>,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
}

impl GlmFit {
    pub fn ci95(&self, j: usize) -> (f64, f64) {
        let z = 1.959_963_984_540_054;
        (
            self.estimate[j] - z * self.se[j],
            self.estimate[j] + z * self.se[j],
        )
    }
}

/// Ordinary least squares of y on [1, x, Z] with asymptotic standard errors.
pub fn ols_fit(y: &[f64], x: &[f64], z: &Mat) -> Result<GlmFit> {
    let n = y.len();
    let phi = design_matrix(x, z);
    let ncoef = phi.ncols();
    if n <= ncoef {
        return Err(Error::InsufficientSamples {
            need: ncoef + 1,
            got: n,
        });
    }
    let chol = Cholesky::factor_mat(&phi.gram(), 0.0)?;
    let est = chol.solve(&phi.t_mul_vec(y))?;
    let fitted = phi.mul_vec(&est);
    let rss: f64 = y
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let sigma2 = rss / (n - ncoef) as f64;
    let inv = chol.inverse();
    let se: Vec<f64> = (0..ncoef)
        .map(|j| (sigma2 * inv.get(j, j)).sqrt())
        .collect();
    Ok(GlmFit {
        names: param_names(z.ncols(), false),
        estimate: est,
        se,
    })
}

/// Logistic maximum likelihood by iteratively reweighted least squares with
/// Wald standard errors.
pub fn logistic_mle_fit(y: &[f64], x: &[f64], z: &Mat, max_iter: usize) -> Result<GlmFit> {
    let n = y.len();
    let phi = design_matrix(x, z);
    let ncoef = phi.ncols();
    let mut beta = vec![0.0; ncoef];
    let mut last_chol: Option<Cholesky> = None;
    for _ in 0..max_iter {
        let mut w = vec![0.0; n];
        let mut score_resid = vec![0.0; n];
        for i in 0..n {
            let eta = dot(phi.row(i), &beta);
            let p = 1.0 / (1.0 + (-eta).exp());
            w[i] = (p * (1.0 - p)).max(1e-10);
            score_resid[i] = y[i] - p;
        }
        let m = phi.weighted_gram(&w);
        let chol = Cholesky::factor_mat(&m, 0.0)?;
        let grad = phi.t_mul_vec(&score_resid);
        let step = chol.solve(&grad)?;
        let mut max_step = 0.0f64;
        for j in 0..ncoef {
            beta[j] += step[j];
            max_step = max_step.max(step[j].abs());
        }
        last_chol = Some(chol);
        if max_step < 1e-10 {
            break;
        }
    }
    let chol = last_chol.ok_or(Error::InvalidParameter {
        name: "max_iter",
        value: max_iter as f64,
    })?;
    let cov = chol.inverse();
    let se: Vec<f64> = (0..ncoef).map(|j| cov.get(j, j).sqrt()).collect();
    Ok(GlmFit {
        names: param_names(z.ncols(), false),
        estimate: beta,
        se,
    })
}
