//! Command-line interface: simulation benchmarks, exposure and health fits,
//! the joint sampler, the surrogate-quality benchmark, and window averaging.
//!
//! Exit codes: 0 success, 2 validation/parse errors, 3 numeric failures,
//! 4 I/O errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use sparsemvn::error::{Error, Result};
use sparsemvn::exposure::{
    gibbs_first_stage, gibbs_first_stage_spatiotemporal, predict_at, predict_at_time, summarize,
    DpcConfig, DpcPriors, Schedule, StObservation, StPriors,
};
use sparsemvn::health::{
    gibbs_linear, gibbs_logistic, summarize_chain, ChainOptions, ChainOutput, ExposurePrior,
    HealthPriors, OutcomeKind,
};
use sparsemvn::io::{
    self, parse_exposure_config, read_draws_any, read_exposure_csv, read_health_csv,
    read_windows_csv, write_draws_bin, write_draws_csv, write_kl_bench_csv, ExposureConfig,
    ResultBundle,
};
use sparsemvn::joint::{gibbs_joint_linear, gibbs_joint_logistic, JointConfig, JointData};
use sparsemvn::linalg::mat::{DenseSpd, Mat};
use sparsemvn::rng::RngStream;
use sparsemvn::sim::{
    kl_timing_benchmark, run_benchmark, BenchmarkConfig, KlBenchConfig, Method, ScenarioSpec,
    ScenarioTag,
};
use sparsemvn::timeavg::{averaged_covariance, averaged_mean, ExposureWindow};
use sparsemvn::vecchia::{build_plan, build_surrogate, OrderingPolicy};

const USAGE: &str = "\
sparsemvn <subcommand> [flags]

subcommands:
  simulate       run the scenario benchmark and emit metrics.csv/details.csv
  fit-exposure   fit the first-stage exposure model, emit predictive draws
  fit-health     fit the second-stage health model under a chosen prior
  fit-joint      fit exposure and health jointly (fully Bayesian)
  bench-vecchia  surrogate KL divergence and per-sample timing benchmark
  avg-window     time-averaged exposure summaries from per-time draws

common flags: --seed <u64>, --out <dir>; run a subcommand with --help for
its flag list. SPARSEMVN_THREADS caps the replicate worker pool.
";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = run(&args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(args: &[String]) -> Result<()> {
    let Some((cmd, rest)) = args.split_first() else {
        print!("{USAGE}");
        return Ok(());
    };
    match cmd.as_str() {
        "simulate" => cmd_simulate(rest),
        "fit-exposure" => cmd_fit_exposure(rest),
        "fit-health" => cmd_fit_health(rest),
        "fit-joint" => cmd_fit_joint(rest),
        "bench-vecchia" => cmd_bench_vecchia(rest),
        "avg-window" => cmd_avg_window(rest),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(Error::Validation(format!(
            "unknown subcommand `{other}`; see `sparsemvn help`"
        ))),
    }
}

// --- flag parsing ---------------------------------------------------------------

struct Flags {
    pairs: Vec<(String, String)>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], known_switches: &[&str]) -> Result<Flags> {
        let mut pairs = Vec::new();
        let mut switches = Vec::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(name) = arg.strip_prefix("--") else {
                return Err(Error::Validation(format!("unexpected argument `{arg}`")));
            };
            if known_switches.contains(&name) {
                switches.push(name.to_string());
            } else {
                let value = it
                    .next()
                    .ok_or_else(|| Error::Validation(format!("flag --{name} needs a value")))?;
                pairs.push((name.to_string(), value.clone()));
            }
        }
        Ok(Flags { pairs, switches })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn get_all(&self, name: &str) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    fn req(&self, name: &str) -> Result<&str> {
        self.get(name)
            .ok_or_else(|| Error::Validation(format!("missing required flag --{name}")))
    }

    fn parse_or<T: FromStr>(&self, name: &str, default: T) -> Result<T> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Validation(format!("bad value for --{name}: `{v}`"))),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }
}

fn parse_schedule(text: &str) -> Result<Schedule> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!(
            "schedule must be burnin,kept,thin (got `{text}`)"
        )));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Validation(format!("bad schedule component `{p}`")))
        })
        .collect::<Result<_>>()?;
    Schedule::new(nums[0], nums[1], nums[2])
}

fn parse_outcome(text: &str) -> Result<OutcomeKind> {
    match text {
        "continuous" => Ok(OutcomeKind::Continuous),
        "binary" => Ok(OutcomeKind::Binary),
        other => Err(Error::Validation(format!("unknown outcome `{other}`"))),
    }
}

fn out_dir(flags: &Flags) -> PathBuf {
    PathBuf::from(flags.get("out").unwrap_or("out"))
}

// --- simulate ---------------------------------------------------------------------

fn cmd_simulate(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "simulate --scenario A|B --outcome continuous|binary --ny N --replicates R \
             --methods m1,m2,... --schedule b,k,t [--first-stage-schedule b,k,t] \
             [--jitter rel] [--seed S] [--store-x] --out DIR\n\
             methods: true-exposure plugin independent sparse:<k> dense fully-bayes"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &["store-x"])?;
    let tag = ScenarioTag::from_str(flags.get("scenario").unwrap_or("A"))?;
    let outcome = parse_outcome(flags.get("outcome").unwrap_or("continuous"))?;
    let n_y: usize = flags.parse_or("ny", 500)?;
    let replicates: usize = flags.parse_or("replicates", 50)?;
    let seed: u64 = flags.parse_or("seed", 20_240_801)?;
    let jitter_rel: f64 = flags.parse_or("jitter", 1e-3)?;
    let methods: Vec<Method> = flags
        .get("methods")
        .unwrap_or("plugin,independent,sparse:3,sparse:5")
        .split(',')
        .map(|m| m.trim().parse())
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::Validation("no methods given".into()));
    }
    let second = parse_schedule(flags.get("schedule").unwrap_or("2000,400,5"))?;
    let first = match flags.get("first-stage-schedule") {
        Some(t) => parse_schedule(t)?,
        None => second,
    };
    let spec = ScenarioSpec::benchmark(tag, outcome, n_y);
    let cfg = BenchmarkConfig {
        scenario: spec,
        methods: methods.clone(),
        replicates,
        first_stage_schedule: first,
        second_stage_schedule: second,
        seed,
        jitter_rel,
        store_x: flags.has("store-x"),
    };

    let config_echo = serde_json::json!({
        "subcommand": "simulate",
        "schema_version": 1,
        "scenario": format!("{tag:?}"),
        "outcome": if outcome == OutcomeKind::Continuous { "continuous" } else { "binary" },
        "ny": n_y,
        "n_w": cfg.scenario.n_w,
        "replicates": replicates,
        "methods": methods.iter().map(|m| m.label()).collect::<Vec<_>>(),
        "first_stage_schedule": first,
        "second_stage_schedule": second,
        "seed": seed,
        "jitter_rel": jitter_rel,
    });

    let started = std::time::Instant::now();
    let result = run_benchmark(&cfg)?;
    let wall = started.elapsed().as_secs_f64();
    for row in &result.rows {
        println!(
            "{:<16} bias {:+.4}  rmse {:.4}  ci_len {:.4}  coverage {:.1}%  time {:.2}s{}",
            row.method,
            row.bias,
            row.rmse,
            row.ci_len,
            row.coverage_pct,
            row.time_s,
            if row.failed > 0 {
                format!("  ({} failed)", row.failed)
            } else {
                String::new()
            }
        );
    }
    let bundle = ResultBundle {
        metrics: result.rows.clone(),
        details: result.details,
        summary: serde_json::json!({
            "seed": seed,
            "wall_s": wall,
            "rows": result.rows,
            "quantile_rule": sparsemvn::health::QUANTILE_RULE,
        }),
        config_echo,
    };
    let dir = out_dir(&flags);
    io::write_results(&bundle, &dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}

// --- fit-exposure -------------------------------------------------------------------

fn cmd_fit_exposure(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "fit-exposure --data w.csv [--config cfg.json] [--predict-at sites.csv] \
             [--schedule b,k,t] [--draws-format csv|bin] [--seed S] --out DIR\n\
             data columns: site_id,x,y[,t],w ; a t column switches to the \
             spatiotemporal model"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &[])?;
    let data_path = PathBuf::from(flags.req("data")?);
    let table = read_exposure_csv(&data_path)?;
    let cfg: ExposureConfig = match flags.get("config") {
        Some(p) => parse_exposure_config(Path::new(p))?,
        None => ExposureConfig::default(),
    };
    let schedule = match flags.get("schedule") {
        Some(t) => parse_schedule(t)?,
        None => cfg.schedule,
    };
    let seed: u64 = flags.parse_or("seed", 1)?;
    let draws_format = flags.get("draws-format").unwrap_or("csv").to_string();
    if draws_format != "csv" && draws_format != "bin" {
        return Err(Error::Validation(format!(
            "unknown draws format `{draws_format}`"
        )));
    }
    let grid = match &cfg.grid {
        Some(g) => g.resolve()?,
        None => sparsemvn::exposure::regular_grid(5, 5, (0.0, 2.0), (0.0, 2.0)),
    };
    let dpc = DpcConfig {
        grid,
        sigma_k: cfg.sigma_k,
    };

    let (pred_ids, pred_sites) = match flags.get("predict-at") {
        Some(p) => read_sites_csv(Path::new(p))?,
        None => unique_sites(&table),
    };
    if pred_sites.is_empty() {
        return Err(Error::EmptyInput("no prediction sites"));
    }
    warn_duplicates(&pred_sites);

    let dir = out_dir(&flags);
    std::fs::create_dir_all(&dir)?;
    let mut rng = RngStream::new(seed, 0);
    let config_echo = serde_json::json!({
        "subcommand": "fit-exposure",
        "schema_version": cfg.schema_version,
        "config": cfg,
        "schedule": schedule,
        "seed": seed,
        "draws_format": draws_format,
        "data": data_path.display().to_string(),
    });

    let mut summary_rows: Vec<(String, Option<usize>, f64, f64)> = Vec::new();
    let wall;
    if let Some(t_idx) = &table.t {
        // spatiotemporal fit on unique measurement sites
        let (site_ids, sites) = unique_sites(&table);
        let site_of: Vec<usize> = table
            .ids
            .iter()
            .map(|id| site_ids.iter().position(|s| s == id).expect("indexed above"))
            .collect();
        let t_len = t_idx.iter().copied().max().unwrap_or(0) + 1;
        let obs: Vec<StObservation> = (0..table.values.len())
            .map(|i| StObservation {
                site: site_of[i],
                t: t_idx[i],
                w: table.values[i],
            })
            .collect();
        let draws = gibbs_first_stage_spatiotemporal(
            &sites,
            &obs,
            t_len,
            &dpc,
            cfg.spline_df,
            &StPriors::diffuse(),
            schedule,
            &mut rng,
        )?;
        wall = draws.seconds;
        for t in 0..t_len {
            let x = predict_at_time(&pred_sites, &dpc, &draws, t)?;
            let name = format!("draws_t{:03}", t + 1);
            write_draws(&dir, &name, &draws_format, &pred_ids, &x)?;
            let s = summarize(&x)?;
            for (i, id) in pred_ids.iter().enumerate() {
                summary_rows.push((id.clone(), Some(t + 1), s.mean[i], s.cov.get(i, i).sqrt()));
            }
        }
    } else {
        let w_bar = table.values.iter().sum::<f64>() / table.values.len() as f64;
        let priors = DpcPriors {
            mu_mean: cfg.mu_prior.map(|p| p.0).unwrap_or(w_bar),
            mu_var: cfg.mu_prior.map(|p| p.1).unwrap_or(100.0),
            sigma2_g: cfg.sigma2_g_prior,
            sigma2_w: cfg.sigma2_w_prior,
        };
        let draws =
            gibbs_first_stage(&table.sites, &table.values, &dpc, &priors, schedule, &mut rng)?;
        wall = draws.seconds;
        let x = predict_at(&pred_sites, &dpc, &draws)?;
        write_draws(&dir, "draws", &draws_format, &pred_ids, &x)?;
        let s = summarize(&x)?;
        for (i, id) in pred_ids.iter().enumerate() {
            summary_rows.push((id.clone(), None, s.mean[i], s.cov.get(i, i).sqrt()));
        }
    }

    let has_t = summary_rows.iter().any(|r| r.1.is_some());
    let mut text = String::new();
    text.push_str(if has_t {
        "site,t,mean,sd\n"
    } else {
        "site,mean,sd\n"
    });
    for (id, t, mean, sd) in &summary_rows {
        if let Some(t) = t {
            text.push_str(&format!("{id},{t},{mean},{sd}\n"));
        } else {
            text.push_str(&format!("{id},{mean},{sd}\n"));
        }
    }
    std::fs::write(dir.join("summary.csv"), text)?;

    let bundle = ResultBundle {
        metrics: vec![],
        details: vec![],
        summary: serde_json::json!({
            "seed": seed,
            "wall_s": wall,
            "n_measurements": table.values.len(),
            "n_prediction_sites": pred_sites.len(),
        }),
        config_echo,
    };
    io::write_results(&bundle, &dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn write_draws(dir: &Path, stem: &str, format: &str, ids: &[String], x: &Mat) -> Result<()> {
    if format == "bin" {
        write_draws_bin(&dir.join(format!("{stem}.bin")), x)
    } else {
        write_draws_csv(&dir.join(format!("{stem}.csv")), ids, x)
    }
}

/// Sites file with columns id (or site_id), x, y; extra columns ignored.
fn read_sites_csv(path: &Path) -> Result<(Vec<String>, Vec<[f64; 2]>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or(Error::EmptyInput("sites csv"))?
        .split(',')
        .map(|c| c.trim())
        .collect();
    let find = |names: &[&str]| -> Result<usize> {
        header
            .iter()
            .position(|c| names.contains(c))
            .ok_or_else(|| Error::MissingColumn {
                column: names[0].into(),
                path: path.display().to_string(),
            })
    };
    let id_col = find(&["id", "site_id"])?;
    let x_col = find(&["x"])?;
    let y_col = find(&["y"])?;
    let mut ids = Vec::new();
    let mut sites = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        ids.push(fields[id_col].trim().to_string());
        let parse = |col: usize, name: &str| -> Result<f64> {
            fields
                .get(col)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::BadNumeric {
                    path: path.display().to_string(),
                    row: row + 1,
                    column: name.into(),
                })
        };
        sites.push([parse(x_col, "x")?, parse(y_col, "y")?]);
    }
    Ok((ids, sites))
}

fn unique_sites(table: &io::SpatialTable) -> (Vec<String>, Vec<[f64; 2]>) {
    let mut ids = Vec::new();
    let mut sites = Vec::new();
    for (id, site) in table.ids.iter().zip(&table.sites) {
        if !ids.contains(id) {
            ids.push(id.clone());
            sites.push(*site);
        }
    }
    (ids, sites)
}

fn warn_duplicates(sites: &[[f64; 2]]) {
    let mut sorted = sites.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let dups = sorted.windows(2).filter(|w| w[0] == w[1]).count();
    if dups > 0 {
        eprintln!(
            "warning: {dups} duplicated location(s); covariance-based priors will be singular"
        );
    }
}

// --- fit-health --------------------------------------------------------------------

fn cmd_fit_health(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "fit-health --outcome continuous|binary --prior plugin|independent|sparse:<k>|dense \
             --exposure-summary draws.{{csv|bin}} --data health.csv \
             [--schedule b,k,t] [--jitter rel] [--seed S] [--store-chain] [--store-x] \
             [--force] --out DIR"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &["store-chain", "store-x", "force"])?;
    let outcome = parse_outcome(flags.req("outcome")?)?;
    let prior_name = flags.req("prior")?.to_string();
    let data = read_health_csv(Path::new(flags.req("data")?))?;
    let draws = read_draws_any(Path::new(flags.req("exposure-summary")?))?;
    if draws.ncols() != data.ids.len() {
        return Err(Error::DimensionMismatch {
            context: "fit-health: draw columns vs health rows",
            expected: data.ids.len(),
            got: draws.ncols(),
        });
    }
    let schedule = parse_schedule(flags.get("schedule").unwrap_or("10000,2000,5"))?;
    let seed: u64 = flags.parse_or("seed", 1)?;
    let jitter_rel: f64 = flags.parse_or("jitter", 0.0)?;

    let summary = summarize(&draws)?;
    let mut cov = summary.cov.clone();
    let mean_diag = cov.diag().iter().sum::<f64>() / cov.nrows().max(1) as f64;
    let jitter_abs = jitter_rel * mean_diag;
    if jitter_abs > 0.0 {
        cov.add_diag(jitter_abs);
    }

    let prior = match prior_name.as_str() {
        "plugin" => ExposurePrior::PlugIn {
            mean: summary.mean.clone(),
        },
        "independent" => ExposurePrior::IndependentNormal {
            mean: summary.mean.clone(),
            variances: cov.diag(),
        },
        "dense" => ExposurePrior::DenseMvn {
            mean: summary.mean.clone(),
            cov: DenseSpd::from_nearly_symmetric(cov.clone(), 1e-9)?,
        },
        other => {
            let Some(k) = other.strip_prefix("sparse:") else {
                return Err(Error::Validation(format!("unknown prior `{other}`")));
            };
            let k: usize = k
                .parse()
                .map_err(|_| Error::Validation(format!("bad prior `{other}`")))?;
            warn_duplicates(&data.sites);
            let plan = build_plan(&data.sites, k, OrderingPolicy::Coordinate)?;
            let s = DenseSpd::from_nearly_symmetric(cov.clone(), 1e-9)?;
            ExposurePrior::SparseMvn(build_surrogate(&summary.mean, &s, &plan)?)
        }
    };

    let opts = ChainOptions {
        store_x: flags.has("store-x"),
        force_dense: flags.has("force"),
        jitter: jitter_abs,
        ..ChainOptions::default()
    };
    let mut rng = RngStream::new(seed, 0);
    let health_priors = HealthPriors::diffuse();
    let chain = match outcome {
        OutcomeKind::Continuous => gibbs_linear(
            &prior,
            &data.y,
            &data.z,
            &health_priors,
            schedule,
            &opts,
            &mut rng,
        )?,
        OutcomeKind::Binary => gibbs_logistic(
            &prior,
            &data.y,
            &data.z,
            &health_priors,
            schedule,
            &opts,
            &mut rng,
        )?,
    };
    write_fit_outputs(&flags, &chain, seed, &prior_name, outcome)
}

fn write_fit_outputs(
    flags: &Flags,
    chain: &ChainOutput,
    seed: u64,
    prior_name: &str,
    outcome: OutcomeKind,
) -> Result<()> {
    let dir = out_dir(flags);
    std::fs::create_dir_all(&dir)?;
    let summaries = summarize_chain(chain)?;
    for s in &summaries {
        println!(
            "{:<10} mean {:+.4}  sd {:.4}  95% [{:+.4}, {:+.4}]",
            s.name, s.mean, s.sd, s.lo95, s.hi95
        );
    }
    let config_echo = serde_json::json!({
        "subcommand": "fit",
        "schema_version": 1,
        "outcome": if outcome == OutcomeKind::Continuous { "continuous" } else { "binary" },
        "prior": prior_name,
        "schedule": chain.schedule,
        "seed": seed,
        "jitter": chain.jitter,
    });
    let bundle = ResultBundle {
        metrics: vec![],
        details: vec![],
        summary: serde_json::json!({
            "seed": seed,
            "prior": chain.prior_tag,
            "wall_s": chain.seconds,
            "jitter": chain.jitter,
            "quantile_rule": chain.quantile_rule,
            "estimates": summaries,
        }),
        config_echo,
    };
    io::write_results(&bundle, &dir)?;
    if let Some(x) = &chain.x_draws {
        let labels: Vec<String> = (0..x.ncols()).map(|i| format!("x{i}")).collect();
        write_draws_csv(&dir.join("x_draws.csv"), &labels, x)?;
    }
    if flags.has("store-chain") {
        let mut labels = chain.param_names.clone();
        labels.truncate(chain.beta.ncols());
        let mut m = chain.beta.clone();
        if let Some(s) = &chain.sigma2_y {
            labels.push("sigma2_y".into());
            let mut wide = Mat::zeros(m.nrows(), m.ncols() + 1);
            for r in 0..m.nrows() {
                wide.row_mut(r)[..m.ncols()].copy_from_slice(m.row(r));
                wide.set(r, m.ncols(), s[r]);
            }
            m = wide;
        }
        write_draws_csv(&dir.join("chain.csv"), &labels, &m)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}

// --- fit-joint ---------------------------------------------------------------------

fn cmd_fit_joint(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "fit-joint --outcome continuous|binary --exposure-data w.csv --data health.csv \
             [--config cfg.json] [--schedule b,k,t] [--seed S] [--store-chain] --out DIR"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &["store-chain"])?;
    let outcome = parse_outcome(flags.req("outcome")?)?;
    let exposure = read_exposure_csv(Path::new(flags.req("exposure-data")?))?;
    if exposure.t.is_some() {
        return Err(Error::Validation(
            "fit-joint needs temporally aligned (static) exposure data".into(),
        ));
    }
    let health = read_health_csv(Path::new(flags.req("data")?))?;
    let cfg: ExposureConfig = match flags.get("config") {
        Some(p) => parse_exposure_config(Path::new(p))?,
        None => ExposureConfig::default(),
    };
    let schedule = match flags.get("schedule") {
        Some(t) => parse_schedule(t)?,
        None => cfg.schedule,
    };
    let seed: u64 = flags.parse_or("seed", 1)?;
    let grid = match &cfg.grid {
        Some(g) => g.resolve()?,
        None => sparsemvn::exposure::regular_grid(5, 5, (0.0, 2.0), (0.0, 2.0)),
    };
    let w_bar = exposure.values.iter().sum::<f64>() / exposure.values.len() as f64;
    let data = JointData {
        monitor_sites: exposure.sites.clone(),
        w: exposure.values.clone(),
        participant_sites: health.sites.clone(),
        y: health.y.clone(),
        z: health.z.clone(),
        outcome,
    };
    let jcfg = JointConfig {
        dpc: DpcConfig {
            grid,
            sigma_k: cfg.sigma_k,
        },
        exposure_priors: DpcPriors {
            mu_mean: cfg.mu_prior.map(|p| p.0).unwrap_or(w_bar),
            mu_var: cfg.mu_prior.map(|p| p.1).unwrap_or(100.0),
            sigma2_g: cfg.sigma2_g_prior,
            sigma2_w: cfg.sigma2_w_prior,
        },
        health_priors: HealthPriors::diffuse(),
        store_x: false,
    };
    let mut rng = RngStream::new(seed, 0);
    let chain = match outcome {
        OutcomeKind::Continuous => gibbs_joint_linear(&data, &jcfg, schedule, &mut rng)?,
        OutcomeKind::Binary => gibbs_joint_logistic(&data, &jcfg, schedule, &mut rng)?,
    };
    write_fit_outputs(&flags, &chain, seed, "fully-bayes", outcome)
}

// --- bench-vecchia ------------------------------------------------------------------

fn cmd_bench_vecchia(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "bench-vecchia --n N [--n N ...] --k K [--k K ...] [--replicates R] \
             [--domain 2x2] [--covariance exponential] [--timing-draws D] [--dense] \
             [--seed S] [--out FILE]\n\
             emits CSV (n,k,kl_mean,sample_time_mean_s,build_time_s); the dense \
             baseline appears as k = -1"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &["dense"])?;
    let n_list: Vec<usize> = {
        let given = flags.get_all("n");
        if given.is_empty() {
            vec![1000]
        } else {
            given
                .iter()
                .map(|v| {
                    v.parse()
                        .map_err(|_| Error::Validation(format!("bad --n `{v}`")))
                })
                .collect::<Result<_>>()?
        }
    };
    let k_list: Vec<usize> = {
        let given = flags.get_all("k");
        if given.is_empty() {
            vec![0, 3, 5]
        } else {
            given
                .iter()
                .map(|v| {
                    v.parse()
                        .map_err(|_| Error::Validation(format!("bad --k `{v}`")))
                })
                .collect::<Result<_>>()?
        }
    };
    let domain = flags.get("domain").unwrap_or("2x2");
    if domain != "2x2" {
        return Err(Error::Validation(format!(
            "only the 2x2 domain is supported, got `{domain}`"
        )));
    }
    let covariance = flags.get("covariance").unwrap_or("exponential");
    if covariance != "exponential" {
        return Err(Error::Validation(format!(
            "only the exponential covariance is supported, got `{covariance}`"
        )));
    }
    let cfg = KlBenchConfig {
        n_list,
        k_list,
        replicates: flags.parse_or("replicates", 20)?,
        include_dense: flags.has("dense"),
        seed: flags.parse_or("seed", 1)?,
        domain: (0.0, 2.0),
        timing_draws: flags.parse_or("timing-draws", 5)?,
        compute_kl: true,
    };
    let rows = kl_timing_benchmark(&cfg)?;
    match flags.get("out") {
        Some(p) => {
            write_kl_bench_csv(Path::new(p), &rows)?;
            println!("wrote {p}");
        }
        None => {
            println!("n,k,kl_mean,sample_time_mean_s,build_time_s");
            for r in &rows {
                println!(
                    "{},{},{},{},{}",
                    r.n, r.k, r.kl_mean, r.sample_time_mean_s, r.build_time_s
                );
            }
        }
    }
    Ok(())
}

// --- avg-window --------------------------------------------------------------------

fn cmd_avg_window(args: &[String]) -> Result<()> {
    if args.iter().any(|a| a == "--help") {
        println!(
            "avg-window --windows windows.csv --draws-dir DIR --out DIR\n\
             windows columns: subject_id,t_start,t_end (inclusive, 1-based); \
             DIR holds draws_t001.csv/bin ... one file per time"
        );
        return Ok(());
    }
    let flags = Flags::parse(args, &[])?;
    let windows_raw = read_windows_csv(Path::new(flags.req("windows")?))?;
    let draws_dir = PathBuf::from(flags.req("draws-dir")?);

    let mut per_time_paths = Vec::new();
    for t in 1.. {
        let csv = draws_dir.join(format!("draws_t{t:03}.csv"));
        let bin = draws_dir.join(format!("draws_t{t:03}.bin"));
        if csv.exists() {
            per_time_paths.push(csv);
        } else if bin.exists() {
            per_time_paths.push(bin);
        } else {
            break;
        }
    }
    if per_time_paths.is_empty() {
        return Err(Error::EmptyInput("no draws_t* files in --draws-dir"));
    }
    let t_len = per_time_paths.len();

    let mut per_time_means = Vec::with_capacity(t_len);
    let mut per_time_covs = Vec::with_capacity(t_len);
    let mut n_y = 0usize;
    for p in &per_time_paths {
        let draws = read_draws_any(p)?;
        let s = summarize(&draws)?;
        n_y = s.mean.len();
        per_time_means.push(s.mean);
        per_time_covs.push(s.cov);
    }
    if windows_raw.len() != n_y {
        return Err(Error::DimensionMismatch {
            context: "avg-window: subjects vs draw columns",
            expected: n_y,
            got: windows_raw.len(),
        });
    }
    let windows: Vec<ExposureWindow> = windows_raw
        .iter()
        .enumerate()
        .map(|(i, (_, start, end))| ExposureWindow::from_range(i, *start, *end, t_len))
        .collect::<Result<_>>()?;

    let mean = averaged_mean(&per_time_means, &windows)?;
    let cov = averaged_covariance(&per_time_covs, &windows)?;

    let dir = out_dir(&flags);
    std::fs::create_dir_all(&dir)?;
    let mut text = String::from("subject_id,mean,sd\n");
    for (i, (id, _, _)) in windows_raw.iter().enumerate() {
        text.push_str(&format!("{id},{},{}\n", mean[i], cov.get(i, i).sqrt()));
    }
    std::fs::write(dir.join("avg_summary.csv"), text)?;
    let labels: Vec<String> = windows_raw.iter().map(|(id, _, _)| id.clone()).collect();
    write_draws_csv(&dir.join("avg_cov.csv"), &labels, &cov)?;
    println!("wrote {}", dir.display());
    Ok(())
}
