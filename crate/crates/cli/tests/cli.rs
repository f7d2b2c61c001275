use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netwit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netwit"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const ROOT_2_2: f64 = 2.0 * std::f64::consts::SQRT_2;

#[test]
fn reference_default_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = netwit(dir.path(), &["reference"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("reference.json"));
    assert!((r["witness"]["total"].as_f64().unwrap() - ROOT_2_2).abs() < 1e-9);
    assert_eq!(r["operational_independence"]["passed"], true);
    assert_eq!(r["table"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);

    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "reference");
    assert_eq!(m["passed"], true);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert!(m["duration_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reference_on_exported_bit_example() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&netwit(dir.path(), &["export", "bit-example"])), 0);
    let file = dir.path().join("bit_example_strategy.json");
    let out = dir.path().join("run");
    let o = netwit(&out, &["reference", "--strategy", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("reference.json"));
    assert!(r["witness"]["total"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["operational_independence"]["passed"], true);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"][0].as_str().unwrap(), file.to_str().unwrap());
}

#[test]
fn malformed_strategy_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dims\": [2, 2").unwrap();
    let o = netwit(dir.path(), &["reference", "--strategy", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema error"));

    std::fs::write(&bad, "{\"dims\": [2, 2, 2, 2]}").unwrap();
    assert_eq!(
        code(&netwit(dir.path(), &["reference", "--strategy", bad.to_str().unwrap()])),
        2
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&netwit(
            dir.path(),
            &["selftest", "--strategy", missing.to_str().unwrap()]
        )),
        2
    );
}

#[test]
fn uninformative_eve_gives_zero() {
    // Eve always answers 0: her POVM becomes (𝟙, 0, 0, 0) and ρ_AB = 𝟙/4.
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&netwit(dir.path(), &["export", "reference"])), 0);
    let path = dir.path().join("reference_strategy.json");
    let mut s = json(&path);
    let id: Value = serde_json::json!([
        [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    ]);
    let zero: Value = serde_json::json!(vec![vec![[0.0, 0.0]; 4]; 4]);
    s["eve_povm"] = serde_json::json!([id, zero.clone(), zero.clone(), zero]);
    std::fs::write(&path, s.to_string()).unwrap();
    let out = dir.path().join("run");
    let o = netwit(&out, &["reference", "--strategy", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("reference.json"));
    assert!(r["witness"]["total"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn classical_bound_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = netwit(dir.path(), &["classical-bound", "--exhaustive"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("classical_bound.json"));
    assert_eq!(r["reduced"]["value"].as_f64().unwrap(), 2.0);
    assert_eq!(r["exhaustive"]["value"].as_f64().unwrap(), 2.0);
    assert_eq!(r["exhaustive"]["evaluated"].as_u64().unwrap(), 262_144);
    let csv = std::fs::read_to_string(dir.path().join("vertices.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert!(csv.starts_with("vertex,eve_outcome,alice_x0,alice_x1,bob_y0,bob_y1,operationally_independent,value"));

    let o = netwit(dir.path(), &["classical-bound", "--filter-oi"]);
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("classical_bound.json"));
    assert!(r["reduced"]["value"].as_f64().unwrap() <= 2.0);
    assert!(r["exhaustive"].is_null());
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = netwit(dir.path(), &["sweep", "--vmin", "0", "--vmax", "1", "--steps", "101"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rdr.len(), 101);
    for row in rdr.drain(..) {
        let (v, w) = (row[0], row[1]);
        assert!((w - ROOT_2_2 * v * v).abs() < 1e-9, "v={v} w={w}");
    }
    let s = json(&dir.path().join("sweep.json"));
    let v_star = s["critical_visibility"].as_f64().unwrap();
    assert!((v_star - 2f64.powf(-0.25)).abs() < 1e-6);

    let o = netwit(dir.path(), &["sweep", "--vmin", "1", "--vmax", "1", "--steps", "1"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert!((rows[0][1] - ROOT_2_2).abs() < 1e-12);

    let o = netwit(dir.path(), &["sweep", "--vmin", "0", "--vmax", "0", "--steps", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&dir.path().join("sweep.csv"))[0][1], 0.0);

    assert_eq!(code(&netwit(dir.path(), &["sweep", "--steps", "0"])), 2);
    assert_eq!(
        code(&netwit(dir.path(), &["sweep", "--vmin", "0.8", "--vmax", "0.2"])),
        2
    );
    assert_eq!(code(&netwit(dir.path(), &["sweep", "--vmax", "1.5"])), 2);
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("v,witness,oi_deviation"));
    lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn seesaw_default_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = netwit(&a, &["seesaw", "--require-converged"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&netwit(&b, &["seesaw", "--require-converged"])), 0);

    let r = json(&a.join("seesaw.json"));
    let best = r["best_value"].as_f64().unwrap();
    assert!((ROOT_2_2 - 1e-6..=ROOT_2_2 + 1e-9).contains(&best));
    assert_eq!(r["restarts"].as_array().unwrap().len(), 20);
    for f in ["seesaw.json", "trace.csv", "best_strategy.json"] {
        assert_eq!(
            std::fs::read_to_string(a.join(f)).unwrap(),
            std::fs::read_to_string(b.join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
    let trace = std::fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,witness\n"));
    assert_eq!(json(&a.join("manifest.json"))["seed"], r["config"]["seed"]);

    // The best strategy is itself a valid strategy file.
    let st = dir.path().join("st");
    let best_file = a.join("best_strategy.json");
    let o = netwit(&st, &["reference", "--strategy", best_file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seesaw_config_file_and_frozen_eve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"restarts": 6, "seed": 11, "max_iterations": 500}"#).unwrap();
    let out = dir.path().join("frozen");
    let o = netwit(
        &out,
        &["seesaw", "--config", cfg.to_str().unwrap(), "--freeze-eve", "product"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("seesaw.json"));
    assert!(r["best_value"].as_f64().unwrap() <= 2.0 + 1e-9);
    assert_eq!(r["restarts"].as_array().unwrap().len(), 6);
    assert_eq!(r["config"]["seed"], 11);

    std::fs::write(&cfg, r#"{"restarts": 0}"#).unwrap();
    assert_eq!(code(&netwit(&out, &["seesaw", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{"unknown_field": 0}"#).unwrap();
    assert_eq!(code(&netwit(&out, &["seesaw", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn seesaw_require_converged_fails_on_short_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"restarts": 2, "max_iterations": 1}"#).unwrap();
    let o = netwit(
        dir.path(),
        &["seesaw", "--config", cfg.to_str().unwrap(), "--require-converged"],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(json(&dir.path().join("manifest.json"))["passed"], false);
    // Without the flag the same run succeeds.
    assert_eq!(
        code(&netwit(dir.path(), &["seesaw", "--config", cfg.to_str().unwrap()])),
        0
    );
}

#[test]
fn selftest_reference_and_werner() {
    let dir = tempfile::tempdir().unwrap();
    let o = netwit(dir.path(), &["selftest", "--require-certified"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("selftest.json"));
    assert_eq!(r["certified"], true);
    for f in r["bell_fidelities"].as_array().unwrap() {
        assert!(f.as_f64().unwrap() >= 1.0 - 1e-9);
    }

    let o = netwit(dir.path(), &["selftest", "--werner", "0.9"]);
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("selftest.json"));
    assert_eq!(r["certified"], false);
    assert!((r["witness_total"].as_f64().unwrap() - 2.291).abs() < 1e-3);
    assert_eq!(
        code(&netwit(
            dir.path(),
            &["selftest", "--werner", "0.9", "--require-certified"]
        )),
        1
    );
    assert_eq!(code(&netwit(dir.path(), &["selftest", "--werner", "1.5"])), 2);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_netwit"))
        .env("NETWIT_OUT_DIR", dir.path())
        .arg("reference")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn unknown_flag_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&netwit(dir.path(), &["reference", "--bogus"])), 2);
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn shipped_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("reference_strategy.json", ROOT_2_2),
        ("bit_example_strategy.json", 0.0),
        ("werner_0.9_strategy.json", ROOT_2_2 * 0.81),
    ];
    for (file, expected) in cases {
        let o = netwit(dir.path(), &["reference", "--strategy", &data(file)]);
        assert_eq!(code(&o), 0, "{file}: {}", String::from_utf8_lossy(&o.stderr));
        let r = json(&dir.path().join("reference.json"));
        assert!(
            (r["witness"]["total"].as_f64().unwrap() - expected).abs() < 1e-9,
            "{file}"
        );
    }
    for cfg in ["seesaw_default.json", "seesaw_product_eve.json"] {
        let o = netwit(dir.path(), &["seesaw", "--config", &data(cfg)]);
        assert_eq!(code(&o), 0, "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
