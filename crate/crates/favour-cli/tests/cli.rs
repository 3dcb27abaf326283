//! End-to-end tests of the `favour` binary: every subcommand, the wire
//! formats, and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::Command;

use favour_core::report;
use favour_core::GaussianBelief;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_favour")
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "favour-cli-{tag}-{}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.0).ok();
    }
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate_tiny(scratch: &Scratch) -> PathBuf {
    let spec = scratch.path("spec.json");
    std::fs::write(&spec, r#"{"n_users": 4, "base_scenarios": 3, "seed": 5}"#).unwrap();
    let data = scratch.path("data.json");
    let out = run(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

fn load_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_mpp_predict_pipeline() {
    let scratch = Scratch::new("pipeline");
    let data = simulate_tiny(&scratch);

    let mpp_path = scratch.path("mpp.json");
    let out = run(&[
        "mpp",
        "--data",
        data.to_str().unwrap(),
        "--out",
        mpp_path.to_str().unwrap(),
        "--max-iter",
        "10",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mpp = load_json(&mpp_path);
    assert_eq!(mpp["mean"].as_array().unwrap().len(), 59);
    assert_eq!(mpp["cov"].as_array().unwrap().len(), 59);
    assert!(mpp["kl_trace"].as_array().unwrap().len() <= 10);
    assert!(mpp["iterations"].as_u64().unwrap() >= 1);

    // The mpp output doubles as a belief file for predict.
    let dataset = load_json(&data);
    let scenario = &dataset["users"][0]["scenarios"][0];
    let pair_path = scratch.path("pair.json");
    std::fs::write(
        &pair_path,
        serde_json::json!({
            "r": scenario["alternatives"][0],
            "q": scenario["alternatives"][1],
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&[
        "predict",
        "--belief",
        mpp_path.to_str().unwrap(),
        "--pair",
        pair_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = verdict["probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let prefers = verdict["prefers"].as_str().unwrap();
    assert_eq!(prefers, if p > 0.5 { "r" } else { "q" });
}

#[test]
fn predict_is_half_for_identical_routes() {
    let scratch = Scratch::new("predict");
    let belief_path = scratch.path("belief.json");
    let belief = GaussianBelief::standard(3);
    std::fs::write(&belief_path, serde_json::to_string(&belief).unwrap()).unwrap();
    let pair_path = scratch.path("pair.json");
    std::fs::write(&pair_path, r#"{"r": [1.0, 2.0, 3.0], "q": [1.0, 2.0, 3.0]}"#).unwrap();
    let out = run(&[
        "predict",
        "--belief",
        belief_path.to_str().unwrap(),
        "--pair",
        pair_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["probability"].as_f64().unwrap(), 0.5);
    // Exactly one half is not strict preference for r.
    assert_eq!(verdict["prefers"].as_str().unwrap(), "q");
}

#[test]
fn fit_mixed_logit_writes_model_file() {
    let scratch = Scratch::new("mixedlogit");
    let data = simulate_tiny(&scratch);
    let model_path = scratch.path("model.json");
    let out = run(&[
        "fit-mixed-logit",
        "--data",
        data.to_str().unwrap(),
        "--out",
        model_path.to_str().unwrap(),
        "--draws",
        "100",
        "--selection-draws",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model = load_json(&model_path);
    assert_eq!(model["mu"].as_array().unwrap().len(), 59);
    assert_eq!(model["sigma"].as_array().unwrap().len(), 59);
    assert_eq!(model["selected"].as_array().unwrap().len(), 59);
    assert!(model["aic"].as_f64().unwrap().is_finite());
    // Reintroduction never leaves a zero sigma behind.
    assert!(model["sigma"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s.as_f64().unwrap() >= 0.0));
}

#[test]
fn baseline_ml_prior_is_a_valid_belief() {
    let scratch = Scratch::new("mlprior");
    let data = simulate_tiny(&scratch);
    let prior_path = scratch.path("prior.json");
    let out = run(&[
        "baseline-ml-prior",
        "--data",
        data.to_str().unwrap(),
        "--out",
        prior_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let belief: GaussianBelief =
        serde_json::from_str(&std::fs::read_to_string(&prior_path).unwrap()).unwrap();
    assert_eq!(belief.dim(), 59);
}

#[test]
fn eval_writes_parseable_results() {
    let scratch = Scratch::new("eval");
    let data = simulate_tiny(&scratch);
    let cv = scratch.path("cv.json");
    std::fs::write(
        &cv,
        r#"{"training_sizes": [2, 4], "repartitions": 2, "test_size": 4, "seed": 3,
            "mpp_max_iterations": 10}"#,
    )
    .unwrap();
    let results = scratch.path("results");
    let out = run(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--methods",
        "mpp,flat,mpp-only",
        "--cv",
        cv.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(results.join("curves.csv")).unwrap();
    let rows = report::parse_curves_csv(&csv).unwrap();
    assert_eq!(rows.len(), 6); // 3 methods x 2 sizes
    for row in &rows {
        assert_eq!(row.n_sessions, 4 * 2);
        assert!((0.0..=1.0).contains(&row.mean_accuracy));
    }

    let manifest = load_json(&results.join("manifest.json"));
    assert_eq!(manifest["seed"].as_u64().unwrap(), 3);
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 0);
    assert!(manifest["corrected_alpha"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["ks_mpp_vs_flat"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_input_fails_with_exit_code_one() {
    let out = run(&[
        "mpp",
        "--data",
        "/nonexistent/data.json",
        "--out",
        "/tmp/never-written.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn malformed_methods_fail_cleanly() {
    let scratch = Scratch::new("badmethods");
    let data = simulate_tiny(&scratch);
    let out = run(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--methods",
        "mpp,unknown-method",
        "--out",
        scratch.path("results").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method"));
}
