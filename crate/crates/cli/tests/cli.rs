use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gskor(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gskor"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("GSKOR_THREADS", n),
        None => cmd.env_remove("GSKOR_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn verify_reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (i, threads) in [None, None, Some("1"), Some("3")].into_iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let res = gskor(
            &["verify", "--suite", "stability", "--trials", "100", "--seed", "7", "--out", p(&out)],
            threads,
        );
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        bytes.push(fs::read(&out).unwrap());
    }
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
    let doc: Value = serde_json::from_slice(&bytes[0]).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["reports"][0]["property_id"], "stability");
    assert_eq!(doc["reports"][0]["trials"], 100);
    assert_eq!(doc["reports"][0]["verdict"], "pass");
}

#[test]
fn skorokhod_on_a_ramp_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let n = 8;
    let mut csv = String::from("t,value\n");
    for i in 0..=n {
        let t = i as f64 / n as f64;
        csv.push_str(&format!("{t},{}\n", 3.0 * t));
    }
    let input = dir.path().join("s.csv");
    let cons = dir.path().join("c.json");
    let out = dir.path().join("sol.csv");
    fs::write(&input, csv).unwrap();
    fs::write(&cons, r#"{"kind": "band", "alpha": -1, "beta": 1}"#).unwrap();
    let res = gskor(
        &["skorokhod", "--input", p(&input), "--constraints", p(&cons), "--out", p(&out)],
        None,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,s,x,k,k_r,k_l");
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let t = i as f64 / n as f64;
        let s = 3.0 * t;
        let x = s.min(1.0);
        assert!((v[0] - t).abs() < 1e-15);
        assert!((v[2] - x).abs() < 1e-12, "x at {t}: {}", v[2]);
        assert!((v[3] - (x - s)).abs() < 1e-12);
        assert_eq!(v[4], 0.0);
        assert!((v[5] - (s - 1.0).max(0.0)).abs() < 1e-12);
    }
}

#[test]
fn expect_second_moment_is_near_upper_variance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"sigma2_min": 0.25, "sigma2_max": 1, "steps": 16, "family": {"kind": "constant", "m": 5}, "paths": 20000, "seed": 11}"#,
    )
    .unwrap();
    let res = gskor(
        &["expect", "--functional", "bt-squared", "--config", p(&cfg), "--sensitivity", "2,3"],
        None,
    );
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let doc: Value = serde_json::from_slice(&res.stdout).unwrap();
    let value = doc["value"].as_f64().unwrap();
    let se = doc["stderr"].as_f64().unwrap();
    assert!((value - 1.0).abs() <= 4.0 * se, "{value} ± {se}");
    assert!((doc["lower_value"].as_f64().unwrap() - 0.25).abs() < 0.02);
    assert_eq!(doc["sensitivity"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_writes_one_csv_per_path_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sde.json");
    fs::write(
        &cfg,
        r#"{
            "steps": 256, "paths": 3, "seed": 5, "x0": 0.2,
            "family": {"kind": "bang-bang", "switches": 2},
            "constraints": {"kind": "band", "alpha": -0.5, "beta": 0.5},
            "coefficients": {"f": {"id": "affine", "a": -1, "b": 0}, "g": {"id": "constant", "value": 1}}
        }"#,
    )
    .unwrap();
    let out = dir.path().join("runs");
    let res = gskor(&["simulate", "--config", p(&cfg), "--out", p(&out)], None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 6);
    for run in runs {
        let text = fs::read_to_string(out.join(run["file"].as_str().unwrap())).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,B,QV,X,A,A_r,A_l");
        assert_eq!(text.lines().count(), 258);
        for line in text.lines().skip(1) {
            let x: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert!((-0.5 - 1e-9..=0.5 + 1e-9).contains(&x));
        }
    }
    assert!(summary["summary"]["moment_x"].as_f64().unwrap() <= 0.25 + 1e-9);
}

#[test]
fn unknown_config_key_is_a_parse_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"paths": 10, "sigma": 1}"#).unwrap();
    let res = gskor(&["expect", "--functional", "bt", "--config", p(&cfg)], None);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "parse-error");
    assert!(err["message"].as_str().unwrap().contains("sigma"));
}

#[test]
fn invalid_config_lists_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sigma2_min": 2, "sigma2_max": 1, "paths": 1}"#).unwrap();
    let res = gskor(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("o"))], None);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "validation-error");
    let pointers: Vec<&str> = err["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["pointer"].as_str().unwrap())
        .collect();
    assert_eq!(pointers, ["/sigma2_max", "/paths"]);
}

#[test]
fn unknown_suite_and_bad_thread_count_are_errors() {
    let res = gskor(&["verify", "--suite", "nonsense"], None);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "invalid-argument");
    let res = gskor(&["verify", "--suite", "stability", "--trials", "2"], Some("zero"));
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "input-error");
}

#[test]
fn missing_input_file_is_reported_as_json() {
    let res = gskor(
        &["skorokhod", "--input", "/nonexistent/s.csv", "--constraints", "/nonexistent/c.json"],
        None,
    );
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert!(err["message"].as_str().is_some());
}
