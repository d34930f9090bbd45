//! Interactive browser demo over the core crate: three operations exposed
//! through wasm-bindgen, each returning a JSON payload the static page
//! renders with plain canvas calls.
//!
//! Build with `wasm-pack build --target web` (or `cargo build --target
//! wasm32-unknown-unknown` plus `wasm-bindgen`); everything also compiles
//! natively so the payload shapes are testable with `cargo test`.

use wasm_bindgen::prelude::*;

use sparsemvn::exposure::{gibbs_first_stage, predict_at, summarize, DpcPriors, Schedule};
use sparsemvn::health::{
    gibbs_linear, summarize_chain, ChainOptions, ExposurePrior, HealthPriors, OutcomeKind,
};
use sparsemvn::linalg::mat::{DenseSpd, Mat};
use sparsemvn::rng::RngStream;
use sparsemvn::sim::{generate_replicate, ScenarioSpec, ScenarioTag};
use sparsemvn::vecchia::{build_plan, build_surrogate, kl_divergence, OrderingPolicy};

fn scenario(tag: &str) -> Result<ScenarioTag, JsValue> {
    match tag {
        "A" | "a" => Ok(ScenarioTag::A),
        "B" | "b" => Ok(ScenarioTag::B),
        other => Err(JsValue::from_str(&format!("unknown scenario `{other}`"))),
    }
}

fn err_to_js(e: sparsemvn::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// True exposure surface, first-stage posterior predictive mean, and
/// predictive sd on a `resolution × resolution` raster, plus the monitor
/// layout. JSON: `{ resolution, truth: [...], mean: [...], sd: [...],
/// monitors: [[x, y], ...], w: [...] }`.
#[wasm_bindgen]
pub fn exposure_field(tag: &str, seed: u32, resolution: u32) -> Result<String, JsValue> {
    let resolution = resolution.clamp(8, 64) as usize;
    let spec = ScenarioSpec::benchmark(scenario(tag)?, OutcomeKind::Continuous, 1);
    let mut rng = RngStream::new(seed as u64, 0);
    let rep = generate_replicate(&spec, &mut rng).map_err(err_to_js)?;

    let mut raster = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let fx = (ix as f64 + 0.5) / resolution as f64 * 2.0;
            let fy = (iy as f64 + 0.5) / resolution as f64 * 2.0;
            raster.push([fx, fy]);
        }
    }
    let truth = spec.true_surface(&raster).map_err(err_to_js)?;

    let w_bar = rep.w.iter().sum::<f64>() / rep.w.len() as f64;
    let schedule = Schedule::new(600, 250, 2).map_err(err_to_js)?;
    let draws = gibbs_first_stage(
        &rep.monitor_sites,
        &rep.w,
        &spec.dpc_config(),
        &DpcPriors::diffuse(w_bar),
        schedule,
        &mut rng,
    )
    .map_err(err_to_js)?;
    let x = predict_at(&raster, &spec.dpc_config(), &draws).map_err(err_to_js)?;
    let summary = summarize(&x).map_err(err_to_js)?;
    let sd: Vec<f64> = summary.variances().iter().map(|v| v.sqrt()).collect();

    Ok(serde_json::json!({
        "resolution": resolution,
        "truth": truth,
        "mean": summary.mean,
        "sd": sd,
        "monitors": rep.monitor_sites,
        "w": rep.w,
    })
    .to_string())
}

/// Surrogate quality as the conditioning size grows: KL divergence against
/// the dense target and the precision nonzero count per k. JSON:
/// `{ n, ks: [...], kl: [...], nnz: [...] }`.
#[wasm_bindgen]
pub fn kl_curve(n: u32, k_max: u32, seed: u32) -> Result<String, JsValue> {
    let n = n.clamp(20, 400) as usize;
    let k_max = k_max.clamp(0, 12) as usize;
    let mut rng = RngStream::new(seed as u64, 1);
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            [
                rand::Rng::gen::<f64>(&mut rng) * 2.0,
                rand::Rng::gen::<f64>(&mut rng) * 2.0,
            ]
        })
        .collect();
    let cov = Mat::from_fn(n, n, |i, j| {
        let dx = pts[i][0] - pts[j][0];
        let dy = pts[i][1] - pts[j][1];
        (-(dx * dx + dy * dy).sqrt()).exp()
    });
    let s = DenseSpd::new(cov).map_err(err_to_js)?;
    let mean = vec![0.0; n];
    let mut ks = Vec::new();
    let mut kls = Vec::new();
    let mut nnzs = Vec::new();
    for k in 0..=k_max {
        let plan = build_plan(&pts, k, OrderingPolicy::Coordinate).map_err(err_to_js)?;
        let surr = build_surrogate(&mean, &s, &plan).map_err(err_to_js)?;
        let kl = kl_divergence(&mean, &s, &surr).map_err(err_to_js)?;
        let nnz = surr.precision().map_err(err_to_js)?.nnz();
        ks.push(k);
        kls.push(kl);
        nnzs.push(nnz);
    }
    Ok(serde_json::json!({ "n": n, "ks": ks, "kl": kls, "nnz": nnzs }).to_string())
}

/// One simulated replicate fitted under plug-in, independent-normal, and
/// sparse-MVN priors: health-effect posterior means with 95% intervals.
/// JSON: `{ truth, methods: [{ name, estimate, lo, hi, seconds }] }`.
#[wasm_bindgen]
pub fn two_stage_fit(tag: &str, n_y: u32, k: u32, seed: u32) -> Result<String, JsValue> {
    let n_y = n_y.clamp(50, 400) as usize;
    let k = k.clamp(1, 10) as usize;
    let spec = ScenarioSpec::benchmark(scenario(tag)?, OutcomeKind::Continuous, n_y);
    let mut rng = RngStream::new(seed as u64, 2);
    let rep = generate_replicate(&spec, &mut rng).map_err(err_to_js)?;
    let w_bar = rep.w.iter().sum::<f64>() / rep.w.len() as f64;
    let draws = gibbs_first_stage(
        &rep.monitor_sites,
        &rep.w,
        &spec.dpc_config(),
        &DpcPriors::diffuse(w_bar),
        Schedule::new(600, 250, 2).map_err(err_to_js)?,
        &mut rng,
    )
    .map_err(err_to_js)?;
    let x = predict_at(&rep.participant_sites, &spec.dpc_config(), &draws).map_err(err_to_js)?;
    let summary = summarize(&x).map_err(err_to_js)?;
    let jitter = 1e-3 * summary.cov.trace() / n_y as f64;
    let mut cov = summary.cov.clone();
    cov.add_diag(jitter);
    let s = DenseSpd::from_nearly_symmetric(cov, 1e-9).map_err(err_to_js)?;

    let plan =
        build_plan(&rep.participant_sites, k, OrderingPolicy::Coordinate).map_err(err_to_js)?;
    let priors: Vec<(String, ExposurePrior)> = vec![
        (
            "plug-in".into(),
            ExposurePrior::PlugIn {
                mean: summary.mean.clone(),
            },
        ),
        (
            "independent".into(),
            ExposurePrior::IndependentNormal {
                mean: summary.mean.clone(),
                variances: s.mat().diag(),
            },
        ),
        (
            format!("sparse {k}nn"),
            ExposurePrior::SparseMvn(
                build_surrogate(&summary.mean, &s, &plan).map_err(err_to_js)?,
            ),
        ),
    ];
    let schedule = Schedule::new(500, 300, 2).map_err(err_to_js)?;
    let opts = ChainOptions {
        jitter,
        ..ChainOptions::default()
    };
    let mut methods = Vec::new();
    for (name, prior) in &priors {
        let chain = gibbs_linear(
            prior,
            &rep.y,
            &rep.z,
            &HealthPriors::diffuse(),
            schedule,
            &opts,
            &mut rng,
        )
        .map_err(err_to_js)?;
        let summ = summarize_chain(&chain).map_err(err_to_js)?;
        let bx = summ.iter().find(|p| p.name == "beta_x").expect("beta_x");
        methods.push(serde_json::json!({
            "name": name,
            "estimate": bx.mean,
            "lo": bx.lo95,
            "hi": bx.hi95,
            "seconds": chain.seconds,
        }));
    }
    Ok(serde_json::json!({ "truth": spec.beta_x, "methods": methods }).to_string())
}
