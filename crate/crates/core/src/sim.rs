//! Simulation harness: benchmark scenario definitions, per-replicate data
//! generation, method orchestration with bias/RMSE/coverage metrics, and the
//! KL-vs-sampling-time benchmark for the surrogate quality study.

use rand::Rng;

use crate::clock::Timer;
use crate::error::{Error, Result};
use crate::exposure::{
    gibbs_first_stage, predict_at, regular_grid, summarize, DpcConfig, DpcPriors, Schedule,
};
use crate::health::{
    gibbs_linear, gibbs_logistic, summarize_chain, ChainOptions, ChainOutput, ExposurePrior,
    HealthPriors, OutcomeKind,
};
use crate::joint::{gibbs_joint_linear, gibbs_joint_logistic, JointConfig, JointData};
use crate::linalg::mat::{dot, Cholesky, DenseSpd, Mat};
use crate::pool;
use crate::rng::{draw_normal, standard_normal_vec, RngStream};
use crate::vecchia::{build_plan, build_surrogate, OrderingPolicy};

/// Benchmark scenario: smoother (A) or more heterogeneous (B) true exposure
/// surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ScenarioTag {
    A,
    B,
}

impl std::str::FromStr for ScenarioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ScenarioTag::A),
            "B" | "b" => Ok(ScenarioTag::B),
            other => Err(Error::Validation(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Full data-generating configuration for one benchmark scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub tag: ScenarioTag,
    pub outcome: OutcomeKind,
    pub n_w: usize,
    pub n_y: usize,
    pub mu: f64,
    pub sigma_k: f64,
    pub sigma_w: f64,
    pub beta0: f64,
    pub beta_x: f64,
    pub beta_z: f64,
    pub sigma2_y: f64,
    pub domain: (f64, f64),
}

impl ScenarioSpec {
    /// Benchmark defaults: 5×5 grid over [0,2]², μ = 3, σ_k = 0.4,
    /// σ_W = 0.1, n_w = 20; continuous outcome β = (0, 1, 2), σ_Y² = 0.64;
    /// binary outcome β = (-7, 1, 2).
    pub fn benchmark(tag: ScenarioTag, outcome: OutcomeKind, n_y: usize) -> Self {
        let beta0 = match outcome {
            OutcomeKind::Continuous => 0.0,
            OutcomeKind::Binary => -7.0,
        };
        ScenarioSpec {
            tag,
            outcome,
            n_w: 20,
            n_y,
            mu: 3.0,
            sigma_k: 0.4,
            sigma_w: 0.1,
            beta0,
            beta_x: 1.0,
            beta_z: 2.0,
            sigma2_y: 0.64,
            domain: (0.0, 2.0),
        }
    }

    /// The fixed 5×5 latent grid at {0.2, 0.6, 1.0, 1.4, 1.8}².
    pub fn grid() -> Vec<[f64; 2]> {
        regular_grid(5, 5, (0.0, 2.0), (0.0, 2.0))
    }

    /// True latent-process values on the grid, by scenario.
    pub fn true_g(tag: ScenarioTag) -> Vec<f64> {
        let grid = Self::grid();
        let at = |x: f64, y: f64, gx: f64, gy: f64| (x - gx).abs() < 1e-9 && (y - gy).abs() < 1e-9;
        grid.iter()
            .map(|&[x, y]| match tag {
                ScenarioTag::A => {
                    if at(x, y, 0.2, 1.0) {
                        3.0
                    } else if at(x, y, 0.2, 0.2) || at(x, y, 1.0, 0.2) || at(x, y, 0.2, 1.8) {
                        2.0
                    } else if at(x, y, 1.8, 0.6)
                        || at(x, y, 1.0, 1.0)
                        || at(x, y, 1.8, 1.4)
                        || at(x, y, 1.0, 1.8)
                    {
                        1.0
                    } else {
                        0.0
                    }
                }
                ScenarioTag::B => {
                    if at(x, y, 1.0, 1.0) {
                        3.0
                    } else if at(x, y, 1.4, 0.2) || at(x, y, 0.6, 0.6) || at(x, y, 0.2, 1.8) {
                        2.0
                    } else if at(x, y, 1.0, 0.2)
                        || at(x, y, 1.8, 0.2)
                        || at(x, y, 0.2, 1.0)
                        || at(x, y, 1.4, 1.4)
                        || at(x, y, 0.6, 1.8)
                    {
                        1.0
                    } else if at(x, y, 0.2, 0.2) || at(x, y, 1.8, 1.0) || at(x, y, 1.4, 1.8) {
                        -1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    pub fn dpc_config(&self) -> DpcConfig {
        DpcConfig {
            grid: Self::grid(),
            sigma_k: self.sigma_k,
        }
    }

    /// True exposure surface at arbitrary points.
    pub fn true_surface(&self, sites: &[[f64; 2]]) -> Result<Vec<f64>> {
        let g = Self::true_g(self.tag);
        let kernel = crate::exposure::kernel_matrix(sites, &Self::grid(), self.sigma_k)?;
        Ok((0..sites.len())
            .map(|i| self.mu + dot(kernel.row(i), &g))
            .collect())
    }
}

/// One simulated dataset.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub monitor_sites: Vec<[f64; 2]>,
    /// Noisy measurements at monitors.
    pub w: Vec<f64>,
    /// True exposure at monitors.
    pub x_monitor: Vec<f64>,
    pub participant_sites: Vec<[f64; 2]>,
    /// True exposure at participants.
    pub x_true: Vec<f64>,
    /// n_y × 1 covariates.
    pub z: Mat,
    pub y: Vec<f64>,
}

fn uniform_points<R: Rng + ?Sized>(rng: &mut R, n: usize, domain: (f64, f64)) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let x = domain.0 + (domain.1 - domain.0) * rng.gen::<f64>();
            let y = domain.0 + (domain.1 - domain.0) * rng.gen::<f64>();
            [x, y]
        })
        .collect()
}

/// Draws one replicate: uniform monitor and participant locations, the fixed
/// true surface, noisy measurements, uniform covariates, and outcomes from
/// the linear or logistic model.
pub fn generate_replicate<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Replicate> {
    let monitor_sites = uniform_points(rng, spec.n_w, spec.domain);
    let participant_sites = uniform_points(rng, spec.n_y, spec.domain);
    let x_monitor = spec.true_surface(&monitor_sites)?;
    let x_true = spec.true_surface(&participant_sites)?;
    let w: Vec<f64> = x_monitor
        .iter()
        .map(|&x| draw_normal(rng, x, spec.sigma_w))
        .collect::<Result<_>>()?;
    let z = Mat::from_fn(spec.n_y, 1, |_, _| rng.gen::<f64>());
    let y: Vec<f64> = match spec.outcome {
        OutcomeKind::Continuous => (0..spec.n_y)
            .map(|i| {
                let mean = spec.beta0 + spec.beta_x * x_true[i] + spec.beta_z * z.get(i, 0);
                draw_normal(rng, mean, spec.sigma2_y.sqrt())
            })
            .collect::<Result<_>>()?,
        OutcomeKind::Binary => (0..spec.n_y)
            .map(|i| {
                let eta = spec.beta0 + spec.beta_x * x_true[i] + spec.beta_z * z.get(i, 0);
                let p = 1.0 / (1.0 + (-eta).exp());
                Ok(if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
            })
            .collect::<Result<_>>()?,
    };
    Ok(Replicate {
        monitor_sites,
        w,
        x_monitor,
        participant_sites,
        x_true,
        z,
        y,
    })
}

/// A second-stage method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TrueExposure,
    PlugIn,
    Independent,
    Sparse(usize),
    Dense,
    FullyBayes,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::TrueExposure => "true-exposure".into(),
            Method::PlugIn => "plugin".into(),
            Method::Independent => "independent".into(),
            Method::Sparse(k) => format!("sparse:{k}"),
            Method::Dense => "dense".into(),
            Method::FullyBayes => "fully-bayes".into(),
        }
    }

    pub fn needs_first_stage(&self) -> bool {
        matches!(
            self,
            Method::PlugIn | Method::Independent | Method::Sparse(_) | Method::Dense
        )
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true-exposure" => Ok(Method::TrueExposure),
            "plugin" => Ok(Method::PlugIn),
            "independent" => Ok(Method::Independent),
            "dense" => Ok(Method::Dense),
            "fully-bayes" => Ok(Method::FullyBayes),
            other => {
                if let Some(k) = other.strip_prefix("sparse:") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad method `{other}`")))?;
                    Ok(Method::Sparse(k))
                } else {
                    Err(Error::Validation(format!("unknown method `{other}`")))
                }
            }
        }
    }
}

/// Aggregated metrics for one method over the completed replicates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricRow {
    pub method: String,
    pub bias: f64,
    pub rmse: f64,
    pub ci_len: f64,
    pub coverage_pct: f64,
    pub time_s: f64,
    /// Replicates dropped because the fit errored (excluded from the
    /// aggregates above).
    pub failed: usize,
}

/// Per-replicate fit record.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReplicateDetail {
    pub replicate: usize,
    pub method: String,
    pub estimate: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub covered: bool,
    pub seconds: f64,
    pub error: Option<String>,
}

/// Benchmark configuration shared by all methods.
#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub scenario: ScenarioSpec,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub first_stage_schedule: Schedule,
    pub second_stage_schedule: Schedule,
    pub seed: u64,
    /// Relative ridge added to the predictive covariance before building
    /// covariance-based priors, applied as `jitter_rel · mean(diag S) · I`
    /// and recorded in every chain output. The process-convolution
    /// predictive is exactly rank-deficient (rank ≤ L+1) and sample
    /// covariances of nearly coincident sites are ill-conditioned, which
    /// otherwise sends truncated-conditional coefficients off the rails;
    /// the default 1e-3 sits two orders of magnitude below the Monte Carlo
    /// noise already present in a sample covariance over hundreds of draws.
    pub jitter_rel: f64,
    pub store_x: bool,
}

impl BenchmarkConfig {
    pub fn desk_scale(scenario: ScenarioSpec, methods: Vec<Method>, seed: u64) -> Self {
        BenchmarkConfig {
            scenario,
            methods,
            replicates: 50,
            first_stage_schedule: Schedule::new(2000, 400, 5).expect("static schedule"),
            second_stage_schedule: Schedule::new(2000, 400, 5).expect("static schedule"),
            seed,
            jitter_rel: 1e-3,
            store_x: false,
        }
    }
}

/// Result of a benchmark run: one metrics row per method plus per-replicate
/// details.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub rows: Vec<MetricRow>,
    pub details: Vec<ReplicateDetail>,
}

// stream ids per replicate: data, first stage, then one per method
const STREAM_STRIDE: u64 = 64;

fn fit_one_method(
    method: Method,
    rep: &Replicate,
    spec: &ScenarioSpec,
    summary: Option<&crate::exposure::PredictiveSummary>,
    s_used: Option<&DenseSpd>,
    jitter_abs: f64,
    schedule: Schedule,
    store_x: bool,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    let opts = ChainOptions {
        store_x,
        jitter: if matches!(method, Method::Sparse(_) | Method::Dense | Method::Independent) {
            jitter_abs
        } else {
            0.0
        },
        ..ChainOptions::default()
    };
    let health_priors = HealthPriors::diffuse();
    let run_second_stage = |prior: &ExposurePrior, rng: &mut RngStream| match spec.outcome {
        OutcomeKind::Continuous => {
            gibbs_linear(prior, &rep.y, &rep.z, &health_priors, schedule, &opts, rng)
        }
        OutcomeKind::Binary => {
            gibbs_logistic(prior, &rep.y, &rep.z, &health_priors, schedule, &opts, rng)
        }
    };
    match method {
        Method::TrueExposure => run_second_stage(
            &ExposurePrior::PlugIn {
                mean: rep.x_true.clone(),
            },
            rng,
        ),
        Method::PlugIn => {
            let summary = summary.expect("first stage ran");
            run_second_stage(
                &ExposurePrior::PlugIn {
                    mean: summary.mean.clone(),
                },
                rng,
            )
        }
        Method::Independent => {
            let summary = summary.expect("first stage ran");
            let s = s_used.expect("jittered covariance built");
            run_second_stage(
                &ExposurePrior::IndependentNormal {
                    mean: summary.mean.clone(),
                    variances: s.mat().diag(),
                },
                rng,
            )
        }
        Method::Sparse(k) => {
            let summary = summary.expect("first stage ran");
            let s = s_used.expect("jittered covariance built");
            let plan = build_plan(&rep.participant_sites, k, OrderingPolicy::Coordinate)?;
            let surr = build_surrogate(&summary.mean, s, &plan)?;
            run_second_stage(&ExposurePrior::SparseMvn(surr), rng)
        }
        Method::Dense => {
            let summary = summary.expect("first stage ran");
            let s = s_used.expect("jittered covariance built");
            run_second_stage(
                &ExposurePrior::DenseMvn {
                    mean: summary.mean.clone(),
                    cov: s.clone(),
                },
                rng,
            )
        }
        Method::FullyBayes => {
            let data = JointData {
                monitor_sites: rep.monitor_sites.clone(),
                w: rep.w.clone(),
                participant_sites: rep.participant_sites.clone(),
                y: rep.y.clone(),
                z: rep.z.clone(),
                outcome: spec.outcome,
            };
            let w_bar = rep.w.iter().sum::<f64>() / rep.w.len() as f64;
            let cfg = JointConfig {
                dpc: spec.dpc_config(),
                exposure_priors: DpcPriors::diffuse(w_bar),
                health_priors,
                store_x: false,
            };
            match spec.outcome {
                OutcomeKind::Continuous => gibbs_joint_linear(&data, &cfg, schedule, rng),
                OutcomeKind::Binary => gibbs_joint_logistic(&data, &cfg, schedule, rng),
            }
        }
    }
}

/// Runs all methods over all replicates and aggregates the health-effect
/// metrics. Replicates execute in the worker pool, each on its own stream;
/// aggregation is ordered by replicate index, so results are
/// seed-deterministic regardless of thread count.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    let spec = &cfg.scenario;
    let need_first_stage = cfg.methods.iter().any(|m| m.needs_first_stage());

    let per_replicate: Vec<Vec<ReplicateDetail>> = pool::run_indexed(cfg.replicates, |r| {
        let mut details = Vec::with_capacity(cfg.methods.len());
        let base = r as u64 * STREAM_STRIDE;
        let mut data_rng = RngStream::new(cfg.seed, base);
        let rep = match generate_replicate(spec, &mut data_rng) {
            Ok(rep) => rep,
            Err(e) => {
                for m in &cfg.methods {
                    details.push(ReplicateDetail {
                        replicate: r,
                        method: m.label(),
                        estimate: f64::NAN,
                        lo95: f64::NAN,
                        hi95: f64::NAN,
                        covered: false,
                        seconds: 0.0,
                        error: Some(e.to_string()),
                    });
                }
                return details;
            }
        };

        let mut summary = None;
        let mut s_used: Option<DenseSpd> = None;
        let mut jitter_abs = 0.0;
        let mut first_stage_error: Option<String> = None;
        if need_first_stage {
            let mut fs_rng = RngStream::new(cfg.seed, base + 1);
            let w_bar = rep.w.iter().sum::<f64>() / rep.w.len() as f64;
            let fs = gibbs_first_stage(
                &rep.monitor_sites,
                &rep.w,
                &spec.dpc_config(),
                &DpcPriors::diffuse(w_bar),
                cfg.first_stage_schedule,
                &mut fs_rng,
            )
            .and_then(|draws| {
                let x_draws = predict_at(&rep.participant_sites, &spec.dpc_config(), &draws)?;
                summarize(&x_draws)
            });
            match fs {
                Ok(s) => {
                    let mean_diag =
                        s.cov.diag().iter().sum::<f64>() / s.cov.nrows().max(1) as f64;
                    jitter_abs = cfg.jitter_rel * mean_diag;
                    let mut cov = s.cov.clone();
                    cov.add_diag(jitter_abs);
                    s_used = DenseSpd::from_nearly_symmetric(cov, 1e-9).ok();
                    summary = Some(s);
                }
                Err(e) => first_stage_error = Some(e.to_string()),
            }
        }

        for (m_idx, method) in cfg.methods.iter().enumerate() {
            if method.needs_first_stage() {
                if let Some(err) = &first_stage_error {
                    details.push(ReplicateDetail {
                        replicate: r,
                        method: method.label(),
                        estimate: f64::NAN,
                        lo95: f64::NAN,
                        hi95: f64::NAN,
                        covered: false,
                        seconds: 0.0,
                        error: Some(format!("first stage failed: {err}")),
                    });
                    continue;
                }
            }
            let mut chain_rng = RngStream::new(cfg.seed, base + 2 + m_idx as u64);
            let fit = fit_one_method(
                *method,
                &rep,
                spec,
                summary.as_ref(),
                s_used.as_ref(),
                jitter_abs,
                cfg.second_stage_schedule,
                cfg.store_x,
                &mut chain_rng,
            )
            .and_then(|chain| {
                let seconds = chain.seconds;
                let summ = summarize_chain(&chain)?;
                let bx = summ
                    .iter()
                    .find(|p| p.name == "beta_x")
                    .expect("beta_x present")
                    .clone();
                Ok((bx, seconds))
            });
            match fit {
                Ok((bx, seconds)) => details.push(ReplicateDetail {
                    replicate: r,
                    method: method.label(),
                    estimate: bx.mean,
                    lo95: bx.lo95,
                    hi95: bx.hi95,
                    covered: bx.lo95 <= spec.beta_x && spec.beta_x <= bx.hi95,
                    seconds,
                    error: None,
                }),
                Err(e) => details.push(ReplicateDetail {
                    replicate: r,
                    method: method.label(),
                    estimate: f64::NAN,
                    lo95: f64::NAN,
                    hi95: f64::NAN,
                    covered: false,
                    seconds: 0.0,
                    error: Some(e.to_string()),
                }),
            }
        }
        details
    });

    let details: Vec<ReplicateDetail> = per_replicate.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for method in &cfg.methods {
        let label = method.label();
        let ok: Vec<&ReplicateDetail> = details
            .iter()
            .filter(|d| d.method == label && d.error.is_none())
            .collect();
        let failed = details
            .iter()
            .filter(|d| d.method == label && d.error.is_some())
            .count();
        if ok.is_empty() {
            rows.push(MetricRow {
                method: label,
                bias: f64::NAN,
                rmse: f64::NAN,
                ci_len: f64::NAN,
                coverage_pct: f64::NAN,
                time_s: f64::NAN,
                failed,
            });
            continue;
        }
        let n = ok.len() as f64;
        let bias = ok.iter().map(|d| d.estimate - spec.beta_x).sum::<f64>() / n;
        let rmse = (ok
            .iter()
            .map(|d| (d.estimate - spec.beta_x).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let ci_len = ok.iter().map(|d| d.hi95 - d.lo95).sum::<f64>() / n;
        let coverage_pct = 100.0 * ok.iter().filter(|d| d.covered).count() as f64 / n;
        let time_s = ok.iter().map(|d| d.seconds).sum::<f64>() / n;
        rows.push(MetricRow {
            method: label,
            bias,
            rmse,
            ci_len,
            coverage_pct,
            time_s,
            failed,
        });
    }
    Ok(BenchmarkResult { rows, details })
}

// --- KL / sampling-time benchmark ---------------------------------------------

/// Configuration of the surrogate-quality and sampling-time study.
#[derive(Debug, Clone)]
pub struct KlBenchConfig {
    pub n_list: Vec<usize>,
    /// Conditioning sizes; k = 0 is the independent-normal surrogate.
    pub k_list: Vec<usize>,
    pub replicates: usize,
    pub include_dense: bool,
    pub seed: u64,
    pub domain: (f64, f64),
    /// Draws averaged for each per-sample timing.
    pub timing_draws: usize,
    /// Skip the KL computation (which needs a dense factorization of the
    /// target) for timing-only runs.
    pub compute_kl: bool,
}

impl Default for KlBenchConfig {
    fn default() -> Self {
        KlBenchConfig {
            n_list: vec![1000],
            k_list: vec![0, 3, 5],
            replicates: 20,
            include_dense: false,
            seed: 1,
            domain: (0.0, 2.0),
            timing_draws: 5,
            compute_kl: true,
        }
    }
}

/// One output row; `k = -1` labels the dense baseline.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KlBenchRow {
    pub n: usize,
    pub k: i64,
    pub kl_mean: f64,
    pub sample_time_mean_s: f64,
    pub build_time_s: f64,
}

/// Mean-zero MVN with exponential covariance `exp(-‖s_i - s_j‖)` on random
/// uniform points: measure surrogate KL divergence and per-sample draw time.
///
/// Build time covers the one-time work per distribution (surrogate
/// construction plus the Cholesky of its precision; the dense covariance
/// factorization for the baseline). Per-sample time covers what one more
/// draw costs: a backsolve of a standard-normal vector for the sparse path,
/// a triangular multiply for the dense path. The Gibbs samplers refactorize
/// each sweep because their diagonal shift moves; that cost shows up in the
/// benchmark tables' per-method times, not here.
pub fn kl_timing_benchmark(cfg: &KlBenchConfig) -> Result<Vec<KlBenchRow>> {
    #[derive(Default, Clone)]
    struct Acc {
        kl: f64,
        sample_time: f64,
        build_time: f64,
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let mut acc: Vec<Acc> = vec![Acc::default(); cfg.k_list.len()];
        let mut dense_acc = Acc::default();
        for rep in 0..cfg.replicates {
            let mut rng = RngStream::new(cfg.seed, (n as u64) << 24 | rep as u64);
            let pts = uniform_points(&mut rng, n, cfg.domain);
            let cov_mat = Mat::from_fn(n, n, |i, j| {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                (-(dx * dx + dy * dy).sqrt()).exp()
            });
            let s = DenseSpd::new(cov_mat)?;
            let mean = vec![0.0; n];

            // dense baseline: the standard dense MVN draw refactorizes the
            // covariance, so its per-sample cost is cubic; the last factor
            // also serves the KL log-determinant
            let mut kept_chol = None;
            if cfg.include_dense {
                let timer = Timer::start();
                let dense_draws = cfg.timing_draws.clamp(1, 2);
                for _ in 0..dense_draws {
                    let chol = Cholesky::factor(&s)?;
                    let draw = crate::rng::draw_mvn_dense_factored(&mut rng, &mean, &chol);
                    std::hint::black_box(&draw);
                    kept_chol = Some(chol);
                }
                dense_acc.sample_time += timer.elapsed_s() / dense_draws as f64;
            }
            let log_det_s = if cfg.compute_kl {
                match kept_chol {
                    Some(chol) => chol.log_det(),
                    None => Cholesky::factor(&s)?.log_det(),
                }
            } else {
                f64::NAN
            };

            for (ki, &k) in cfg.k_list.iter().enumerate() {
                let timer = Timer::start();
                let plan = build_plan(&pts, k, OrderingPolicy::Coordinate)?;
                let surr = build_surrogate(&mean, &s, &plan)?;
                let q = surr.precision()?;
                let factor = crate::health::factorize_prior_precision(&q)?;
                acc[ki].build_time += timer.elapsed_s();

                if cfg.compute_kl {
                    let trace = q.trace_product(s.mat());
                    let kl = 0.5
                        * (trace - n as f64 - surr.log_det_precision() - log_det_s).max(0.0);
                    acc[ki].kl += kl;
                } else {
                    acc[ki].kl = f64::NAN;
                }

                let timer = Timer::start();
                for _ in 0..cfg.timing_draws {
                    let z = standard_normal_vec(&mut rng, n);
                    let draw = factor.noise_from_std_normal(&z);
                    std::hint::black_box(&draw);
                }
                acc[ki].sample_time += timer.elapsed_s() / cfg.timing_draws as f64;
            }
        }
        let r = cfg.replicates as f64;
        for (ki, &k) in cfg.k_list.iter().enumerate() {
            rows.push(KlBenchRow {
                n,
                k: k as i64,
                kl_mean: acc[ki].kl / r,
                sample_time_mean_s: acc[ki].sample_time / r,
                build_time_s: acc[ki].build_time / r,
            });
        }
        if cfg.include_dense {
            rows.push(KlBenchRow {
                n,
                k: -1,
                kl_mean: 0.0,
                sample_time_mean_s: dense_acc.sample_time / r,
                build_time_s: dense_acc.build_time / r,
            });
        }
    }
    Ok(rows)
}
