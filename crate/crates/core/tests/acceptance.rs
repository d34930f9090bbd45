//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured quantities. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

mod common;

use common::{gauss_jordan_inverse, mean, random_spd, sample_sd, XorShift};

use sparsemvn::exposure::{
    gibbs_first_stage, predict_at, summarize, DpcPriors, FirstStageModel, FirstStageState,
    Schedule,
};
use sparsemvn::health::{
    gibbs_linear, mcse_batch_means, summarize_chain, ChainOptions, ExposurePrior, HealthPriors,
    OutcomeKind,
};
use sparsemvn::joint::{gibbs_joint_linear, JointConfig, JointData};
use sparsemvn::linalg::mat::{Cholesky, DenseSpd, Mat};
use sparsemvn::polya_gamma::{draw_polya_gamma_1, norm_cdf, polya_gamma_1_mean};
use sparsemvn::rng::{draw_mvn_dense_factored, draw_normal, RngStream};
use sparsemvn::sim::{
    generate_replicate, kl_timing_benchmark, run_benchmark, BenchmarkConfig, KlBenchConfig,
    Method, ScenarioSpec, ScenarioTag,
};
use sparsemvn::timeavg::{averaged_covariance, ExposureWindow};
use sparsemvn::vecchia::{
    build_plan, build_surrogate, kl_divergence, ConditioningPlan, OrderingPolicy,
};

/// 1. Full conditioning reproduces the exact precision: for random SPD
/// targets, the densified surrogate precision matches S⁻¹ and the KL
/// divergence vanishes.
#[test]
fn criterion_01_vecchia_exactness() {
    let mut rng = XorShift(0xC0FFEE);
    let mut worst_rel = 0.0f64;
    let mut worst_kl = 0.0f64;
    for case in 0..100 {
        let n = 2 + case % 9;
        let s_mat = random_spd(&mut rng, n, 1.0 + n as f64 * 0.2);
        let s = DenseSpd::new(s_mat).unwrap();
        let mean_vec: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let surr = build_surrogate(&mean_vec, &s, &ConditioningPlan::full(n)).unwrap();
        let q = surr.precision().unwrap().to_dense();
        let s_inv = Cholesky::factor(&s).unwrap().inverse();
        let rel = q.sub(&s_inv).frobenius_norm() / s_inv.frobenius_norm();
        let kl = kl_divergence(&mean_vec, &s, &surr).unwrap();
        worst_rel = worst_rel.max(rel);
        worst_kl = worst_kl.max(kl);
    }
    assert!(worst_rel < 1e-9, "worst relative error {worst_rel}");
    assert!(worst_kl < 1e-9, "worst KL {worst_kl}");
    println!(
        "criterion 01 (vecchia exactness): PASS — worst ‖Q-S⁻¹‖/‖S⁻¹‖ = {worst_rel:.2e}, worst KL = {worst_kl:.2e}"
    );
}

/// 2. The surrogate precision equals the explicit product of truncated
/// conditionals, with conditional moments obtained through an independent
/// Gauss-Jordan inversion and accumulated densely.
#[test]
fn criterion_02_product_of_conditionals_oracle() {
    let mut rng = XorShift(0xBEEF);
    let mut worst = 0.0f64;
    for n in 4..=8usize {
        for k in 1..=3usize {
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.next_f64() * 2.0, rng.next_f64() * 2.0])
                .collect();
            let s_mat = random_spd(&mut rng, n, 1.5);
            let s = DenseSpd::new(s_mat).unwrap();
            let plan = build_plan(&pts, k, OrderingPolicy::Coordinate).unwrap();
            let surr = build_surrogate(&vec![0.0; n], &s, &plan).unwrap();
            let q = surr.precision().unwrap().to_dense();

            // oracle: accumulate u uᵀ / d over the truncated conditionals
            let mut q_oracle = Mat::zeros(n, n);
            for pos in 0..n {
                let orig = plan.ordering()[pos];
                let nb: Vec<usize> = plan.neighbors_original(pos);
                let m = nb.len();
                let mut idx = nb.clone();
                idx.push(orig);
                let block = Mat::from_fn(m + 1, m + 1, |a, b| s.get(idx[a], idx[b]));
                let prec = gauss_jordan_inverse(&block);
                let p_ii = prec.get(m, m);
                let d = 1.0 / p_ii;
                // coefficient vector u: 1 at the point, -a over the set
                let mut u = vec![0.0; n];
                u[orig] = 1.0;
                for (j, &nbj) in nb.iter().enumerate() {
                    u[nbj] = prec.get(m, j) / p_ii;
                }
                for a in 0..n {
                    if u[a] == 0.0 {
                        continue;
                    }
                    for b in 0..n {
                        q_oracle.add_to(a, b, u[a] * u[b] / d);
                    }
                }
            }
            let rel = q.sub(&q_oracle).frobenius_norm() / q_oracle.frobenius_norm();
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-10, "worst relative deviation {worst}");
    println!(
        "criterion 02 (product-of-conditionals oracle): PASS — worst relative deviation {worst:.2e}"
    );
}

/// 3. Surrogate quality at benchmark scale: mean KL over 20 replicates at
/// n = 1000 for k = 0/3/5 lands within ±15% of 1452.7 / 47.9 / 23.4.
#[test]
fn criterion_03_kl_reference_values() {
    let cfg = KlBenchConfig {
        n_list: vec![1000],
        k_list: vec![0, 3, 5],
        replicates: 20,
        include_dense: false,
        seed: 314,
        domain: (0.0, 2.0),
        timing_draws: 1,
        compute_kl: true,
    };
    let rows = kl_timing_benchmark(&cfg).unwrap();
    let reference = [(0i64, 1452.7), (3, 47.9), (5, 23.4)];
    let mut report = String::new();
    for (k, want) in reference {
        let row = rows.iter().find(|r| r.k == k).unwrap();
        let rel = (row.kl_mean - want).abs() / want;
        assert!(
            rel < 0.15,
            "k={k}: mean KL {} vs reference {want} ({:.1}% off)",
            row.kl_mean,
            rel * 100.0
        );
        report.push_str(&format!("k={k}: {:.1} (ref {want}, {:+.1}%)  ", row.kl_mean, rel * 100.0));
    }
    println!("criterion 03 (KL reference values): PASS — {report}");
}

/// 4. Scaling: per-sample draw time from n = 1000 to n = 5000 grows at most
/// 8x for the sparse 5-NN surrogate and at least 25x for the dense baseline.
/// Timing uses the minimum over repeated measurement runs, since scheduler
/// interruptions only ever inflate wall-clock readings.
#[test]
fn criterion_04_sampling_time_scaling() {
    let run = |n: usize, draws: usize, dense: bool, seed: u64| {
        kl_timing_benchmark(&KlBenchConfig {
            n_list: vec![n],
            k_list: vec![5],
            replicates: if dense { 2 } else { 1 },
            include_dense: dense,
            seed,
            domain: (0.0, 2.0),
            timing_draws: draws,
            compute_kl: false,
        })
        .unwrap()
    };
    let time_of = |rows: &[sparsemvn::sim::KlBenchRow], k: i64| {
        rows.iter().find(|r| r.k == k).unwrap().sample_time_mean_s
    };
    let min_sparse = |n: usize, draws: usize| {
        (0..3)
            .map(|i| time_of(&run(n, draws, false, 271 + i), 5))
            .fold(f64::MAX, f64::min)
    };
    let sparse_ratio = min_sparse(5000, 400) / min_sparse(1000, 3000);
    let dense_ratio =
        time_of(&run(5000, 2, true, 280), -1) / time_of(&run(1000, 20, true, 280), -1);
    assert!(
        sparse_ratio <= 8.0,
        "sparse per-sample ratio {sparse_ratio:.2} exceeds 8"
    );
    assert!(
        dense_ratio >= 25.0,
        "dense per-sample ratio {dense_ratio:.2} below 25"
    );
    println!(
        "criterion 04 (sampling-time scaling): PASS — sparse 5nn ratio {sparse_ratio:.2} (≤ 8), dense ratio {dense_ratio:.1} (≥ 25)"
    );
}

/// 5. Pólya-Gamma moment suite: sample means match tanh(z/2)/(2z) within
/// three standard errors at 10⁵ draws.
#[test]
fn criterion_05_polya_gamma_moments() {
    let n = 100_000;
    let mut report = String::new();
    for (si, z) in [0.0, 0.1, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let mut rng = RngStream::new(413, si as u64);
        let draws: Vec<f64> = (0..n).map(|_| draw_polya_gamma_1(&mut rng, z)).collect();
        let m = mean(&draws);
        let se = sample_sd(&draws) / (n as f64).sqrt();
        let want = polya_gamma_1_mean(z);
        assert!(
            (m - want).abs() < 3.0 * se,
            "z={z}: mean {m} vs {want} (se {se})"
        );
        report.push_str(&format!("z={z}: {:+.2}se  ", (m - want) / se));
    }
    println!("criterion 05 (PG moment suite): PASS — {report}");
}

/// 6. Conjugacy: the plug-in linear chain matches the closed-form
/// normal-inverse-gamma posterior on a 200-point dataset.
#[test]
fn criterion_06_conjugacy_oracle() {
    let n = 200;
    let mut rng = RngStream::new(500, 0);
    let x: Vec<f64> = (0..n)
        .map(|_| draw_normal(&mut rng, 0.0, 1.0).unwrap())
        .collect();
    let z = Mat::from_fn(n, 1, |i, _| ((i * 31 % 97) as f64) / 97.0);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            0.4 + 1.3 * x[i] + 2.0 * z.get(i, 0) + draw_normal(&mut rng, 0.0, 0.8).unwrap()
        })
        .collect();
    let priors = HealthPriors {
        beta_prior_scale: 100.0,
        a_y: 0.01,
        b_y: 0.01,
    };

    // closed form: M = Σβ⁻¹ + ΦᵀΦ, β̂ = M⁻¹ΦᵀY, σ² | Y ~ IG(a + n/2, b + (YᵀY - β̂ᵀMβ̂)/2)
    let phi = Mat::from_fn(n, 3, |i, c| match c {
        0 => 1.0,
        1 => x[i],
        _ => z.get(i, 0),
    });
    let mut m = phi.gram();
    m.add_diag(1.0 / priors.beta_prior_scale);
    let chol = Cholesky::factor_mat(&m, 0.0).unwrap();
    let phity = phi.t_mul_vec(&y);
    let beta_hat = chol.solve(&phity).unwrap();
    let y_dot_y: f64 = y.iter().map(|v| v * v).sum();
    let quad: f64 = beta_hat.iter().zip(&phity).map(|(a, b)| a * b).sum();
    let a_post = priors.a_y + n as f64 / 2.0;
    let b_post = priors.b_y + 0.5 * (y_dot_y - quad);
    let e_sigma2 = b_post / (a_post - 1.0);
    let m_inv = chol.inverse();

    let prior = ExposurePrior::PlugIn { mean: x.clone() };
    let schedule = Schedule::new(1000, 4000, 1).unwrap();
    let chain = gibbs_linear(
        &prior,
        &y,
        &z,
        &priors,
        schedule,
        &ChainOptions::default(),
        &mut rng,
    )
    .unwrap();
    let summ = summarize_chain(&chain).unwrap();
    let mut report = String::new();
    for j in 0..3 {
        let draws = chain.beta.column(j);
        let mcse = mcse_batch_means(&draws);
        let want_mean = beta_hat[j];
        let want_sd = (e_sigma2 * m_inv.get(j, j)).sqrt();
        assert!(
            (summ[j].mean - want_mean).abs() < 3.0 * mcse,
            "beta[{j}] mean {} vs {} (mcse {mcse})",
            summ[j].mean,
            want_mean
        );
        let sd_rel = (summ[j].sd - want_sd).abs() / want_sd;
        assert!(
            sd_rel < 0.05,
            "beta[{j}] sd {} vs {} ({:.1}% off)",
            summ[j].sd,
            want_sd,
            sd_rel * 100.0
        );
        report.push_str(&format!("β{j}: {:+.2}mcse, sd {:+.1}%  ", (summ[j].mean - want_mean) / mcse, sd_rel * 100.0));
    }
    println!("criterion 06 (conjugacy oracle): PASS — {report}");
}

/// 7. Desk-scale qualitative reproduction of the continuous-outcome
/// benchmark table: plug-in undercovers, the sparse 5-NN prior restores
/// coverage at lower RMSE, and interval widths order plug-in/independent
/// below sparse 3-NN below sparse 5-NN.
#[test]
fn criterion_07_desk_scale_benchmark_table() {
    let spec = ScenarioSpec::benchmark(ScenarioTag::A, OutcomeKind::Continuous, 500);
    let cfg = BenchmarkConfig {
        scenario: spec,
        methods: vec![
            Method::PlugIn,
            Method::Independent,
            Method::Sparse(3),
            Method::Sparse(5),
        ],
        replicates: 50,
        first_stage_schedule: Schedule::new(2000, 400, 5).unwrap(),
        second_stage_schedule: Schedule::new(2000, 400, 5).unwrap(),
        seed: 20_240_801,
        jitter_rel: 1e-3,
        store_x: false,
    };
    let result = run_benchmark(&cfg).unwrap();
    let row = |label: &str| {
        result
            .rows
            .iter()
            .find(|r| r.method == label)
            .unwrap_or_else(|| panic!("missing row {label}"))
    };
    let plugin = row("plugin");
    let indep = row("independent");
    let s3 = row("sparse:3");
    let s5 = row("sparse:5");
    for r in &result.rows {
        assert_eq!(r.failed, 0, "{}: {} replicates failed", r.method, r.failed);
        println!(
            "  {:<12} bias {:+.4} rmse {:.4} ci {:.4} cover {:.1}% time {:.3}s",
            r.method, r.bias, r.rmse, r.ci_len, r.coverage_pct, r.time_s
        );
    }
    assert!(
        plugin.coverage_pct <= 80.0,
        "plug-in coverage {:.1}% above 80%",
        plugin.coverage_pct
    );
    assert!(
        (88.0..=100.0).contains(&s5.coverage_pct),
        "sparse 5nn coverage {:.1}% outside [88, 100]",
        s5.coverage_pct
    );
    assert!(
        s5.rmse < plugin.rmse,
        "sparse 5nn rmse {:.4} not below plug-in {:.4}",
        s5.rmse,
        plugin.rmse
    );
    // interval-width ordering and coverage ordering
    assert!(plugin.ci_len < s3.ci_len && plugin.ci_len < s5.ci_len);
    assert!(indep.ci_len < s3.ci_len && indep.ci_len < s5.ci_len);
    assert!(s3.ci_len < s5.ci_len);
    assert!(plugin.coverage_pct < s5.coverage_pct);
    assert!(indep.ci_len < s3.ci_len);
    println!(
        "criterion 07 (desk-scale benchmark table): PASS — plug-in {:.1}% / sparse5 {:.1}% coverage, rmse {:.4} vs {:.4}",
        plugin.coverage_pct, s5.coverage_pct, plugin.rmse, s5.rmse
    );
}

/// 8. Two-stage agreement: with a full-conditioning sparse prior (exact
/// surrogate) and the dense prior on shared data and seed, the posterior
/// means of the health effect agree within Monte Carlo error.
#[test]
fn criterion_08_sparse_dense_two_stage_agreement() {
    let n_y = 200;
    let replicates = 20;
    let spec = ScenarioSpec::benchmark(ScenarioTag::A, OutcomeKind::Continuous, n_y);
    let fs_schedule = Schedule::new(1000, 300, 3).unwrap();
    let schedule = Schedule::new(1000, 400, 2).unwrap();
    let mut diffs = Vec::new();
    let mut mcse2 = 0.0;
    for r in 0..replicates {
        let mut data_rng = RngStream::new(808, r * 64);
        let rep = generate_replicate(&spec, &mut data_rng).unwrap();
        let mut fs_rng = RngStream::new(808, r * 64 + 1);
        let w_bar = mean(&rep.w);
        let draws = gibbs_first_stage(
            &rep.monitor_sites,
            &rep.w,
            &spec.dpc_config(),
            &DpcPriors::diffuse(w_bar),
            fs_schedule,
            &mut fs_rng,
        )
        .unwrap();
        let x_draws = predict_at(&rep.participant_sites, &spec.dpc_config(), &draws).unwrap();
        let summary = summarize(&x_draws).unwrap();
        let jitter = 1e-3 * mean(&summary.cov.diag());
        let mut cov = summary.cov.clone();
        cov.add_diag(jitter);
        let s = DenseSpd::from_nearly_symmetric(cov, 1e-9).unwrap();

        let sparse_prior = ExposurePrior::SparseMvn(
            build_surrogate(&summary.mean, &s, &ConditioningPlan::full(n_y)).unwrap(),
        );
        let dense_prior = ExposurePrior::DenseMvn {
            mean: summary.mean.clone(),
            cov: s,
        };
        let opts = ChainOptions {
            jitter,
            ..ChainOptions::default()
        };
        let shared = RngStream::new(808, r * 64 + 2);
        let priors = HealthPriors::diffuse();
        let chain_sparse = gibbs_linear(
            &sparse_prior,
            &rep.y,
            &rep.z,
            &priors,
            schedule,
            &opts,
            &mut shared.clone(),
        )
        .unwrap();
        let chain_dense = gibbs_linear(
            &dense_prior,
            &rep.y,
            &rep.z,
            &priors,
            schedule,
            &opts,
            &mut shared.clone(),
        )
        .unwrap();
        let bx_s = chain_sparse.beta_x();
        let bx_d = chain_dense.beta_x();
        diffs.push(mean(&bx_s) - mean(&bx_d));
        mcse2 += mcse_batch_means(&bx_s).powi(2) + mcse_batch_means(&bx_d).powi(2);
    }
    let avg_diff = mean(&diffs);
    let combined_mcse = (mcse2).sqrt() / replicates as f64;
    assert!(
        avg_diff.abs() < 2.0 * combined_mcse,
        "mean difference {avg_diff:.5} vs 2x combined MCSE {:.5}",
        2.0 * combined_mcse
    );
    println!(
        "criterion 08 (sparse/dense two-stage agreement): PASS — mean Δβ̂x = {avg_diff:+.5}, 2×MCSE = {:.5}",
        2.0 * combined_mcse
    );
}

/// 9. The fully Bayesian fit and the dense-prior two-stage fit agree on the
/// average posterior mean of the health effect.
#[test]
fn criterion_09_fully_bayes_vs_dense_two_stage() {
    let n_y = 300;
    let replicates = 30;
    let spec = ScenarioSpec::benchmark(ScenarioTag::A, OutcomeKind::Continuous, n_y);
    let fs_schedule = Schedule::new(1000, 300, 3).unwrap();
    let schedule = Schedule::new(1000, 300, 4).unwrap();
    let mut dense_means = Vec::new();
    let mut joint_means = Vec::new();
    for r in 0..replicates {
        let mut data_rng = RngStream::new(909, r * 64);
        let rep = generate_replicate(&spec, &mut data_rng).unwrap();
        let w_bar = mean(&rep.w);

        let mut fs_rng = RngStream::new(909, r * 64 + 1);
        let draws = gibbs_first_stage(
            &rep.monitor_sites,
            &rep.w,
            &spec.dpc_config(),
            &DpcPriors::diffuse(w_bar),
            fs_schedule,
            &mut fs_rng,
        )
        .unwrap();
        let x_draws = predict_at(&rep.participant_sites, &spec.dpc_config(), &draws).unwrap();
        let summary = summarize(&x_draws).unwrap();
        let jitter = 1e-3 * mean(&summary.cov.diag());
        let mut cov = summary.cov.clone();
        cov.add_diag(jitter);
        let dense_prior = ExposurePrior::DenseMvn {
            mean: summary.mean.clone(),
            cov: DenseSpd::from_nearly_symmetric(cov, 1e-9).unwrap(),
        };
        let opts = ChainOptions {
            jitter,
            ..ChainOptions::default()
        };
        let mut chain_rng = RngStream::new(909, r * 64 + 2);
        let dense_chain = gibbs_linear(
            &dense_prior,
            &rep.y,
            &rep.z,
            &HealthPriors::diffuse(),
            schedule,
            &opts,
            &mut chain_rng,
        )
        .unwrap();
        dense_means.push(mean(&dense_chain.beta_x()));

        let data = JointData {
            monitor_sites: rep.monitor_sites.clone(),
            w: rep.w.clone(),
            participant_sites: rep.participant_sites.clone(),
            y: rep.y.clone(),
            z: rep.z.clone(),
            outcome: OutcomeKind::Continuous,
        };
        let jcfg = JointConfig {
            dpc: spec.dpc_config(),
            exposure_priors: DpcPriors::diffuse(w_bar),
            health_priors: HealthPriors::diffuse(),
            store_x: false,
        };
        let mut joint_rng = RngStream::new(909, r * 64 + 3);
        let joint_chain = gibbs_joint_linear(&data, &jcfg, schedule, &mut joint_rng).unwrap();
        joint_means.push(mean(&joint_chain.beta_x()));
    }
    let gap = (mean(&dense_means) - mean(&joint_means)).abs();
    assert!(gap < 0.02, "mean posterior means differ by {gap:.4}");
    println!(
        "criterion 09 (fully Bayes vs dense two-stage): PASS — |E β̂x(dense) − E β̂x(joint)| = {gap:.4} < 0.02"
    );
}

/// 10. Time-averaged covariance matches the sample covariance of per-draw
/// window averages over independent-in-time draws.
#[test]
fn criterion_10_time_averaging_monte_carlo() {
    let n = 4;
    let t_len = 5;
    let windows = vec![
        ExposureWindow::from_range(0, 1, 3, t_len).unwrap(),
        ExposureWindow::from_range(1, 2, 5, t_len).unwrap(),
        ExposureWindow::from_range(2, 1, 5, t_len).unwrap(),
        ExposureWindow::from_range(3, 2, 4, t_len).unwrap(),
    ];
    // strongly correlated per-time covariances keep every surviving entry
    // far above the Monte Carlo noise floor
    let mut covs = Vec::new();
    for t in 0..t_len {
        let scale = 1.5 + 0.2 * t as f64;
        let m = Mat::from_fn(n, n, |i, j| {
            if i == j {
                scale
            } else {
                0.85 * scale
            }
        });
        covs.push(m);
    }
    let want = averaged_covariance(&covs, &windows).unwrap();

    let chols: Vec<Cholesky> = covs
        .iter()
        .map(|c| Cholesky::factor_mat(c, 0.0).unwrap())
        .collect();
    let reps = 100_000;
    let zero = vec![0.0; n];
    let mut rng = RngStream::new(1010, 0);
    let mut acc = vec![0.0; n];
    let mut acc2 = Mat::zeros(n, n);
    for _ in 0..reps {
        let per_t: Vec<Vec<f64>> = chols
            .iter()
            .map(|c| draw_mvn_dense_factored(&mut rng, &zero, c))
            .collect();
        let mut avg = vec![0.0; n];
        for (i, w) in windows.iter().enumerate() {
            for &t in w.times() {
                avg[i] += per_t[t][i];
            }
            avg[i] /= w.len() as f64;
        }
        for i in 0..n {
            acc[i] += avg[i];
            for j in 0..n {
                acc2.add_to(i, j, avg[i] * avg[j]);
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mi = acc[i] / reps as f64;
            let mj = acc[j] / reps as f64;
            let emp = acc2.get(i, j) / reps as f64 - mi * mj;
            let tv = want.get(i, j);
            if tv.abs() > 1e-3 {
                let rel = (emp - tv).abs() / tv.abs();
                assert!(rel < 0.05, "entry ({i},{j}): {emp} vs {tv} ({rel:.3})");
                worst = worst.max(rel);
            }
        }
    }
    println!(
        "criterion 10 (time-averaging Monte Carlo oracle): PASS — worst elementwise deviation {:.2}%",
        worst * 100.0
    );
}

/// 11. Geweke successive-conditional check of the first-stage sampler on a
/// tiny model: marginal-conditional and successive-conditional simulators
/// agree on the summaries of (μ, σ_G², σ_W²).
#[test]
fn criterion_11_geweke_first_stage() {
    let sites = [[0.3, 0.4], [1.2, 0.8], [0.7, 1.6]];
    let grid = vec![[0.5, 0.6], [1.3, 1.2]];
    let cfg = sparsemvn::exposure::DpcConfig {
        grid,
        sigma_k: 0.6,
    };
    // moderate hyperparameters keep the compared summaries finite-variance
    let priors = DpcPriors {
        mu_mean: 0.5,
        mu_var: 0.8,
        sigma2_g: (3.0, 2.0),
        sigma2_w: (3.0, 1.5),
    };
    let l = cfg.l();
    let n_w = sites.len();
    let kernel = sparsemvn::exposure::kernel_matrix(&sites, &cfg.grid, cfg.sigma_k).unwrap();

    let stats = |mu: f64, s2g: f64, s2w: f64| [mu, s2g.ln(), s2w.ln()];

    // marginal-conditional: iid draws from prior then likelihood
    let mut rng = RngStream::new(3, 0);
    let m_draws = 40_000;
    let mut marginal = vec![Vec::with_capacity(m_draws); 3];
    for _ in 0..m_draws {
        let mu = draw_normal(&mut rng, priors.mu_mean, priors.mu_var.sqrt()).unwrap();
        let s2g =
            sparsemvn::rng::draw_inverse_gamma(&mut rng, priors.sigma2_g.0, priors.sigma2_g.1)
                .unwrap();
        let s2w =
            sparsemvn::rng::draw_inverse_gamma(&mut rng, priors.sigma2_w.0, priors.sigma2_w.1)
                .unwrap();
        let s = stats(mu, s2g, s2w);
        for (acc, v) in marginal.iter_mut().zip(s) {
            acc.push(v);
        }
    }

    // successive-conditional: redraw data, then one Gibbs sweep
    let mut rng = RngStream::new(3, 1);
    let chain_len = 120_000;
    let mut state = FirstStageState {
        mu: draw_normal(&mut rng, priors.mu_mean, priors.mu_var.sqrt()).unwrap(),
        g: (0..l).map(|_| 0.0).collect(),
        sigma2_g: sparsemvn::rng::draw_inverse_gamma(&mut rng, priors.sigma2_g.0, priors.sigma2_g.1)
            .unwrap(),
        sigma2_w: sparsemvn::rng::draw_inverse_gamma(&mut rng, priors.sigma2_w.0, priors.sigma2_w.1)
            .unwrap(),
    };
    for gi in state.g.iter_mut() {
        *gi = draw_normal(&mut rng, 0.0, state.sigma2_g.sqrt()).unwrap();
    }
    let mut successive = vec![Vec::with_capacity(chain_len); 3];
    let mut w = vec![0.0; n_w];
    for _ in 0..chain_len {
        for (h, wh) in w.iter_mut().enumerate() {
            let fit = state.mu + sparsemvn::linalg::mat::dot(kernel.row(h), &state.g);
            *wh = draw_normal(&mut rng, fit, state.sigma2_w.sqrt()).unwrap();
        }
        let model = FirstStageModel::new(&sites, &w, &cfg, &priors).unwrap();
        model.sweep(&mut state, &mut rng).unwrap();
        let s = stats(state.mu, state.sigma2_g, state.sigma2_w);
        for (acc, v) in successive.iter_mut().zip(s) {
            acc.push(v);
        }
    }

    let names = ["mu", "ln sigma2_G", "ln sigma2_W"];
    let mut report = String::new();
    for i in 0..3 {
        let m1 = mean(&marginal[i]);
        let se1 = sample_sd(&marginal[i]) / (m_draws as f64).sqrt();
        let m2 = mean(&successive[i]);
        let mcse2 = mcse_batch_means(&successive[i]);
        let z = (m1 - m2) / (se1 * se1 + mcse2 * mcse2).sqrt();
        let p = 2.0 * (1.0 - norm_cdf(z.abs()));
        assert!(
            p > 0.01,
            "{}: z = {z:.3}, p = {p:.4} fails the 0.01 level",
            names[i]
        );
        report.push_str(&format!("{} p={p:.3}  ", names[i]));
    }
    println!("criterion 11 (Geweke first-stage check): PASS — {report}");
}
