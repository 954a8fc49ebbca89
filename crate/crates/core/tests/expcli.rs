use std::path::PathBuf;
use std::process::Command;

use mgx::expcli::{emit_plots, read_results, run_sweep, ExpError, ExperimentConfig, CSV_HEADER};

const CONFIG: &str = r#"
name = "tiny"
k_grid = [200, 400]
epsilon_grid = [0.0, 0.1]
seeds = [0, 1]

[instance]
kind = "random-tabular"
states = 2
max_actions = 2
min_actions = 2
horizon = 2
seed = 3

[attack]
model = "observations-only"
adversary = { kind = "random-replace" }

[[algorithms]]
name = "ridge"
estimator = "ridge"

[[algorithms]]
name = "f-pmvi"
estimator = "filter"
c_bonus = 0.1
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mgx-expcli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn config_validation() {
    assert!(ExperimentConfig::from_toml(CONFIG).is_ok());
    let broken = [
        CONFIG.replace("seeds = [0, 1]", "seeds = [0, 0]"),
        CONFIG.replace("k_grid = [200, 400]", "k_grid = []"),
        CONFIG.replace("0.1]", "0.7]"),
        CONFIG.replace("name = \"f-pmvi\"", "name = \"ridge\""),
        CONFIG.replace("horizon = 2", "horizon = 2\ncolour = 1"),
        CONFIG.replace("estimator = \"ridge\"", "estimator = \"lasso\""),
    ];
    for text in broken {
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(ExpError::Config(_))), "{text}");
    }
}

#[test]
fn sweep_is_deterministic_and_resumable() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let dir = scratch("resume");
    let csv = dir.join("results.csv");
    let first = run_sweep(&cfg, Some(&csv)).unwrap();
    assert_eq!(first.rows.len(), 2 * 2 * 2 * 2);
    assert_eq!(first.failures, 0);
    assert_eq!(first.resumed, 0);

    let in_memory = run_sweep(&cfg, None).unwrap();
    let digests = |rows: &[mgx::expcli::ResultRow]| rows.iter().map(|r| r.digest.clone()).collect::<Vec<_>>();
    assert_eq!(digests(&first.rows), digests(&in_memory.rows));

    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    // Drop the last three rows and tear the one before them.
    let lines: Vec<&str> = text.lines().collect();
    let keep = lines.len() - 4;
    let mut torn = lines[..keep].join("\n");
    torn.push('\n');
    torn.push_str(&lines[keep][..lines[keep].len() / 2]);
    std::fs::write(&csv, torn).unwrap();

    let resumed = run_sweep(&cfg, Some(&csv)).unwrap();
    assert_eq!(resumed.resumed, keep - 1);
    assert_eq!(digests(&resumed.rows), digests(&first.rows));
    let rows = read_results(&csv).unwrap();
    assert_eq!(rows.len(), 16);

    let figs = emit_plots(&rows, &dir.join("figs")).unwrap();
    assert_eq!(figs.len(), 4);
    let svg = std::fs::read_to_string(&figs[0]).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("SubOpt"));
}

fn mgx() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mgx"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

#[test]
fn cli_exit_codes() {
    let dir = scratch("cli");
    let good = dir.join("good.toml");
    std::fs::write(&good, CONFIG).unwrap();
    let out = dir.join("out");
    let status = mgx().args(["sweep", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("results.csv").exists());
    assert!(out.join("figs").read_dir().unwrap().count() > 0);

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, CONFIG.replace("seeds = [0, 1]", "seeds = []")).unwrap();
    let status = mgx().args(["sweep", "--config"]).arg(&bad).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let failing = dir.join("failing.toml");
    let text = CONFIG.to_string() + "\n[[algorithms]]\nname = \"rls\"\nestimator = \"rls\"\nkappa = 10.0\n";
    std::fs::write(&failing, text).unwrap();
    let status =
        mgx().args(["sweep", "--config"]).arg(&failing).arg("--out").arg(dir.join("out2")).status().unwrap();
    assert_eq!(status.code(), Some(3));
    let rows = read_results(&dir.join("out2").join("results.csv")).unwrap();
    assert!(rows.iter().filter(|r| r.algorithm == "rls").all(|r| r.is_error()));

    let plots = dir.join("plots");
    let status =
        mgx().args(["plot", "--csv"]).arg(out.join("results.csv")).arg("--out").arg(&plots).status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn cli_pipeline() {
    let dir = scratch("pipeline");
    let run = |args: &[&str]| {
        let status = mgx().current_dir(&dir).args(args).status().unwrap();
        assert!(status.success(), "{args:?}");
    };
    run(&["instances", "make", "--kind", "tree", "--states", "3", "--horizon", "4", "--out", "g.json"]);
    assert!(dir.join("g_prime.json").exists() && dir.join("attack.json").exists());
    run(&["data", "sample", "--game", "g.json", "--k", "300", "--behavior", "attack.json", "--out", "d.csv"]);
    std::fs::write(
        dir.join("spec.json"),
        r#"{"epsilon": 0.05, "model": "reward-only", "adversary": {"kind": "random-replace"}, "seed": 1}"#,
    )
    .unwrap();
    run(&["data", "corrupt", "--data", "d.csv", "--spec", "spec.json", "--learner-view", "--out", "c.csv"]);
    run(&["pmvi", "run", "--game", "g.json", "--data", "c.csv", "--estimator", "filter", "--epsilon", "0.05", "--out", "r.json"]);
    run(&["coverage", "report", "--game", "g.json", "--data", "d.csv", "--out", "cov.json"]);
    run(&["bench", "--d", "3", "--n", "200", "--seeds", "2", "--epsilons", "0.1", "--out", "bench.csv"]);

    let result: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("r.json")).unwrap()).unwrap();
    assert!(result["subopt"].as_f64().unwrap() >= -1e-9);
    assert!(result["output"]["pair"].is_object());
    let cov: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("cov.json")).unwrap()).unwrap();
    assert!(cov["c1_hat"].is_number());
    let bench = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    assert_eq!(bench.lines().count(), 1 + 3 * 2);
}
