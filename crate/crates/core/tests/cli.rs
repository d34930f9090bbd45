//! End-to-end checks of the command-line surface: output layout, exact
//! metrics columns, provenance determinism, and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsemvn"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sparsemvn-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_lists_subcommands() {
    let out = bin().arg("help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "simulate",
        "fit-exposure",
        "fit-health",
        "fit-joint",
        "bench-vecchia",
        "avg-window",
    ] {
        assert!(text.contains(sub), "help missing {sub}");
    }
}

#[test]
fn unknown_subcommand_and_bad_flags_exit_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["simulate", "--scenario", "Q"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["simulate", "--ny", "not-a-number"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_4() {
    let out = bin()
        .args([
            "fit-exposure",
            "--data",
            "/definitely/not/here.csv",
            "--out",
            "/tmp/nope",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_emits_exact_columns_and_is_seed_deterministic() {
    let dir = tmpdir("simulate");
    let run = |out: &Path| {
        let st = bin()
            .args([
                "simulate",
                "--scenario",
                "A",
                "--outcome",
                "continuous",
                "--ny",
                "60",
                "--replicates",
                "3",
                "--methods",
                "plugin,sparse:3",
                "--schedule",
                "150,80,1",
                "--first-stage-schedule",
                "150,80,1",
                "--seed",
                "99",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    };
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    run(&out1);
    run(&out2);
    let metrics1 = std::fs::read_to_string(out1.join("metrics.csv")).unwrap();
    let metrics2 = std::fs::read_to_string(out2.join("metrics.csv")).unwrap();
    // byte-identical statistical columns; time_s is wall clock and may move
    let strip_time = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip_time(&metrics1),
        strip_time(&metrics2),
        "same seed must give identical metrics"
    );
    assert!(metrics1.starts_with("method,bias,rmse,ci_len,coverage_pct,time_s\n"));
    assert_eq!(metrics1.lines().count(), 3);
    for name in ["details.csv", "summary.json", "config.echo.json"] {
        assert!(out1.join(name).exists(), "missing {name}");
    }
    // hash self-consistency
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("summary.json")).unwrap())
            .unwrap();
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("config.echo.json")).unwrap())
            .unwrap();
    assert_eq!(
        summary["config_hash"].as_str().unwrap(),
        sparsemvn::io::config_hash(&echo)
    );
}

#[test]
fn exposure_health_pipeline_round_trips() {
    let dir = tmpdir("pipeline");
    write(
        &dir.join("w.csv"),
        "site_id,x,y,w\nm1,0.2,0.3,3.1\nm2,1.5,0.4,3.4\nm3,0.8,1.2,3.9\nm4,1.9,1.7,3.0\nm5,0.4,1.8,3.6\nm6,1.1,0.9,4.1\n",
    );
    write(
        &dir.join("sites.csv"),
        "id,x,y\np1,0.5,0.5\np2,1.2,1.3\np3,1.7,0.6\np4,0.3,1.1\n",
    );
    write(
        &dir.join("health.csv"),
        "id,x,y,y_outcome,z1\np1,0.5,0.5,4.2,0.3\np2,1.2,1.3,5.0,0.8\np3,1.7,0.6,3.9,0.1\np4,0.3,1.1,4.4,0.6\n",
    );
    let exp_out = dir.join("exp");
    let st = bin()
        .args([
            "fit-exposure",
            "--data",
            dir.join("w.csv").to_str().unwrap(),
            "--predict-at",
            dir.join("sites.csv").to_str().unwrap(),
            "--schedule",
            "300,150,2",
            "--seed",
            "5",
            "--out",
            exp_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(exp_out.join("draws.csv").exists());
    assert!(exp_out.join("summary.csv").exists());

    let health_out = dir.join("health");
    let st = bin()
        .args([
            "fit-health",
            "--outcome",
            "continuous",
            "--prior",
            "sparse:2",
            "--exposure-summary",
            exp_out.join("draws.csv").to_str().unwrap(),
            "--data",
            dir.join("health.csv").to_str().unwrap(),
            "--schedule",
            "300,150,2",
            "--jitter",
            "1e-3",
            "--seed",
            "6",
            "--store-chain",
            "--out",
            health_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(health_out.join("summary.json")).unwrap())
            .unwrap();
    let estimates = summary["estimates"].as_array().unwrap();
    assert!(estimates.iter().any(|e| e["name"] == "beta_x"));
    assert!((summary["jitter"].as_f64().unwrap() - 0.0) > 0.0);
    assert!(health_out.join("chain.csv").exists());
}

#[test]
fn dense_without_jitter_reports_numeric_failure() {
    // the process-convolution predictive is rank-deficient, so the dense
    // prior without explicit regularization must fail with exit code 3
    let dir = tmpdir("dense-fail");
    write(
        &dir.join("w.csv"),
        "site_id,x,y,w\nm1,0.2,0.3,3.1\nm2,1.5,0.4,3.4\nm3,0.8,1.2,3.9\nm4,1.9,1.7,3.0\nm5,0.4,1.8,3.6\nm6,1.1,0.9,4.1\n",
    );
    // more participants than latent dimensions so the sample covariance is
    // singular even with many draws
    let mut sites = String::from("id,x,y\n");
    let mut health = String::from("id,x,y,y_outcome\n");
    for i in 0..40 {
        let x = 0.05 + 1.9 * ((i * 37 % 40) as f64) / 40.0;
        let y = 0.05 + 1.9 * ((i * 17 % 40) as f64) / 40.0;
        sites.push_str(&format!("p{i},{x},{y}\n"));
        health.push_str(&format!("p{i},{x},{y},{},0.5\n", 3.0 + 0.01 * i as f64));
    }
    write(&dir.join("sites.csv"), &sites);
    write(&dir.join("health.csv"), &health);
    let exp_out = dir.join("exp");
    let st = bin()
        .args([
            "fit-exposure",
            "--data",
            dir.join("w.csv").to_str().unwrap(),
            "--predict-at",
            dir.join("sites.csv").to_str().unwrap(),
            "--schedule",
            "200,120,1",
            "--seed",
            "5",
            "--out",
            exp_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success());
    let st = bin()
        .args([
            "fit-health",
            "--outcome",
            "continuous",
            "--prior",
            "dense",
            "--exposure-summary",
            exp_out.join("draws.csv").to_str().unwrap(),
            "--data",
            dir.join("health.csv").to_str().unwrap(),
            "--schedule",
            "50,20,1",
            "--out",
            dir.join("h").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        st.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&st.stderr)
    );
}

#[test]
fn bench_vecchia_small_run() {
    let dir = tmpdir("bench");
    let out_file = dir.join("bench.csv");
    let st = bin()
        .args([
            "bench-vecchia",
            "--n",
            "80",
            "--k",
            "0",
            "--k",
            "3",
            "--replicates",
            "2",
            "--timing-draws",
            "2",
            "--dense",
            "--seed",
            "11",
            "--out",
            out_file.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success());
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert!(text.starts_with("n,k,kl_mean,sample_time_mean_s,build_time_s\n"));
    assert_eq!(text.lines().count(), 4); // header + k=0, k=3, dense
}

#[test]
fn avg_window_pipeline() {
    let dir = tmpdir("avg");
    // three per-time draw files over three subjects
    for t in 1..=3 {
        let mut text = String::from("s1,s2,s3\n");
        let mut state = 1000u64 + t;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..200 {
            text.push_str(&format!("{},{},{}\n", 2.0 + next(), 2.1 + next(), 1.9 + next()));
        }
        write(&dir.join(format!("draws_t{t:03}.csv")), &text);
    }
    write(
        &dir.join("windows.csv"),
        "subject_id,t_start,t_end\ns1,1,2\ns2,2,3\ns3,1,3\n",
    );
    let out = dir.join("out");
    let st = bin()
        .args([
            "avg-window",
            "--windows",
            dir.join("windows.csv").to_str().unwrap(),
            "--draws-dir",
            dir.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let summary = std::fs::read_to_string(out.join("avg_summary.csv")).unwrap();
    assert!(summary.starts_with("subject_id,mean,sd\n"));
    assert_eq!(summary.lines().count(), 4);
    assert!(out.join("avg_cov.csv").exists());
    // a window outside the available times is rejected with a validation code
    write(
        &dir.join("bad_windows.csv"),
        "subject_id,t_start,t_end\ns1,1,9\ns2,2,3\ns3,1,3\n",
    );
    let st = bin()
        .args([
            "avg-window",
            "--windows",
            dir.join("bad_windows.csv").to_str().unwrap(),
            "--draws-dir",
            dir.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
}
