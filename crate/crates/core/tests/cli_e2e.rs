//! Runs the `kymh` binary end to end: exit codes, files, schema and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_kymh");

struct Run {
    out: Output,
    dir: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }

    fn report(&self) -> Value {
        let text = fs::read_to_string(self.dir.join("report.json")).expect("report.json written");
        serde_json::from_str(&text).unwrap()
    }
}

fn run_in(tmp: &Path, name: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = tmp.join(format!("{name}.json"));
    fs::write(&cfg, config).unwrap();
    let dir = tmp.join(name);
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .args(extra)
        .env_remove("KYMH_OUT_DIR")
        .output()
        .unwrap();
    Run { out, dir }
}

fn run(config: &str, extra: &[&str]) -> (TempDir, Run) {
    let tmp = TempDir::new().unwrap();
    let r = run_in(tmp.path(), "run", config, extra);
    (tmp, r)
}

fn validate_schema(report: &Value) {
    let schema: Value = serde_json::from_str(kymh::cli::REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errors) = compiled.validate(report) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("report violates schema: {msgs:?}");
    };
}

fn no_temp_files(dir: &Path) {
    for entry in fs::read_dir(dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        assert!(!name.ends_with(".tmp"), "leftover temp file {name}");
    }
}

#[test]
fn solve_vortex_writes_profile() {
    let (_t, r) = run(r#"{"command":"solve-vortex","degrees":[1],"exponents":[0],"tau":3,"n":129}"#, &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    assert_eq!(rep["status"], "converged");
    assert_eq!(rep["conventions_sha256"], kymh::cli::conventions_sha256());
    let csv = fs::read_to_string(r.dir.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,v,higgs_norm"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 129);
    // 17 significant digits survive a text round trip bit for bit
    for field in rows[7].split(',') {
        let x: f64 = field.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), field);
    }
    no_temp_files(&r.dir);
}

#[test]
fn solve_vortex_infeasible_exits_2() {
    let (_t, r) = run(r#"{"command":"solve-vortex","degrees":[2],"exponents":[0],"tau":3}"#, &[]);
    assert_eq!(r.code(), 2);
    let rep = r.report();
    validate_schema(&rep);
    assert_eq!(rep["status"], "infeasible");
    assert!(r.stderr().contains("N < tau/2"));
}

#[test]
fn solve_vortex_not_converged_exits_3() {
    let (_t, r) = run(
        r#"{"command":"solve-vortex","degrees":[1],"exponents":[0],"tau":3,"max_iter":1}"#,
        &[],
    );
    assert_eq!(r.code(), 3);
    assert_eq!(r.report()["status"], "not_converged");
}

#[test]
fn solve_gravitating_converges() {
    let (_t, r) = run(
        r#"{"command":"solve-gravitating","degrees":[2],"exponents":[1],"tau":5,"schedule":[0,0.02,0.05,0.1]}"#,
        &["--resolution", "65"],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    assert_eq!(rep["config"]["n"], 65);
    assert_eq!(rep["result"]["history"].as_array().unwrap().len(), 4);
    let c = rep["result"]["history"][3]["c_est"].as_f64().unwrap();
    assert!((c - (4.0 - 2.0 * 0.1 * 5.0 * 2.0)).abs() < 1e-8);
    assert!(r.dir.join("profile.csv").exists());
}

#[test]
fn solve_gravitating_single_zero_is_gated() {
    let cfg = r#"{"command":"solve-gravitating","degrees":[1],"exponents":[0],"tau":3,"schedule":[0,0.05]}"#;
    let (_t, r) = run(cfg, &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("If φ has only one zero"));
    let rep = r.report();
    validate_schema(&rep);
    assert!(rep["result"].is_null());
    assert!(!r.dir.join("profile.csv").exists());

    let (_t, forced) = run(cfg, &["--override-obstruction"]);
    assert_ne!(forced.code(), 2);
    assert_ne!(forced.code(), 1);
    assert_eq!(forced.report()["result"]["override_obstruction"], true);
}

#[test]
fn eb_solve_reports_both_predictions() {
    let (_t, r) = run(r#"{"command":"eb-solve","degrees":[2],"exponents":[1],"tau":5,"n":65}"#, &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    let res = &rep["result"];
    assert!(res["c_at_alpha_star"].as_f64().unwrap().abs() <= 1e-8);
    assert_eq!(res["predicted_conventions"], 2.0);
    assert_eq!(res["predicted_alternative"], 1.0);
    assert!(res.get("state").is_none());
}

#[test]
fn futaki_balanced_pair() {
    let (_t, r) = run(r#"{"command":"futaki","degrees":[1,1],"exponents":[0,1],"tau":3,"alpha":1}"#, &[]);
    assert_eq!(r.code(), 0);
    let rep = r.report();
    validate_schema(&rep);
    assert_eq!(rep["result"]["closed_form"], 0.0);
    assert!(rep["result"]["quadrature"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn futaki_abelian_uses_richardson() {
    let (_t, r) = run(r#"{"command":"futaki","degrees":[1],"exponents":[0],"tau":3,"alpha":1}"#, &[]);
    assert_eq!(r.code(), 0);
    let res = &r.report()["result"];
    assert_eq!(res["richardson"]["resolutions"].as_array().unwrap().len(), 3);
    let (q, c) = (res["quadrature"].as_f64().unwrap(), res["closed_form"].as_f64().unwrap());
    assert!((q - c).abs() < 1e-8 * c.abs());
}

#[test]
fn stability_obstructed_cites_balancing() {
    let (_t, r) = run(r#"{"command":"stability","degrees":[2,2],"exponents":[1,0],"tau":5}"#, &[]);
    assert_eq!(r.code(), 2);
    let rep = r.report();
    validate_schema(&rep);
    let reasons = rep["reasons"].as_array().unwrap();
    assert!(reasons.iter().any(|s| s.as_str().unwrap().contains("balancing condition")));
    assert_eq!(rep["stability"]["balanced"], false);
}

#[test]
fn stability_general_forms() {
    let (_t, r) = run(
        r#"{"command":"stability","degrees":[2,2],"exponents":[1,1],"tau":5,
            "coefficients":[["1","0","-1"],["0","1","1/2"]]}"#,
        &[],
    );
    assert!(r.code() == 0 || r.code() == 2, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    assert!(rep["reasons"].as_array().unwrap().iter().any(|s| s.as_str().unwrap().contains("not proven")));
}

#[test]
fn quiver_check_a2() {
    let (_t, r) = run(
        r#"{"command":"quiver-check","n":65,
            "quiver":{"vertices":["1","2"],
                      "arrows":[{"id":"a","tail":"1","head":"2","exponent":1,"scale":0.7071067811865476}],
                      "ranks":{"1":1,"2":1},"degrees":{"1":0,"2":2},
                      "sigma":{"1":1,"2":1},"tau":{"1":0,"2":2.5},"rho":0.1},
            "reduction":{"multiplicities":[1,2],"homogeneous_slopes":[0,0.5],"global_slope":1}}"#,
        &[],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    let res = &rep["result"];
    assert_eq!(res["reduction"]["tau"], serde_json::json!([1.0, 1.0]));
    let t = &res["fubini_study"]["trace_identity_first_equation_imposed"];
    assert!(t["defect"].as_f64().unwrap().abs() < 1e-12);
    assert!(r.dir.join("quiver_profile.csv").exists());
}

#[test]
fn quiver_check_higher_rank_skips_analytic_part() {
    let (_t, r) = run(
        r#"{"command":"quiver-check",
            "quiver":{"vertices":["a","b"],"arrows":[{"id":"x","tail":"a","head":"b"}],
                      "ranks":{"a":2,"b":1},"degrees":{"a":0,"b":1},
                      "sigma":{"a":1,"b":1},"tau":{"a":1,"b":1},"rho":0}}"#,
        &[],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    assert!(rep["result"].get("fubini_study").is_none());
    assert!(rep["reasons"][0].as_str().unwrap().contains("rank > 1"));
}

#[test]
fn sweep_preserves_order() {
    let (_t, r) = run(
        r#"{"command":"sweep","sweep":{"command":"stability","degrees":[[1,2],[2,2]],"tau":[5,"7/2"]}}"#,
        &[],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let rep = r.report();
    validate_schema(&rep);
    let rows = rep["result"]["rows"].as_array().unwrap();
    // (1,2): 2·3 exponent pairs, (2,2): 3·3, each with two τ
    assert_eq!(rows.len(), 30);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row["index"], k);
    }
    let csv = fs::read_to_string(r.dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn usage_errors_exit_1_and_list_everything() {
    let (_t, r) = run(
        r#"{"command":"solve-vortex","degrees":[1],"exponents":[0],"tau":"-1","n":128}"#,
        &[],
    );
    assert_eq!(r.code(), 1);
    let err = r.stderr();
    assert!(err.contains("n must be odd") && err.contains("tau must be positive"), "{err}");
    assert!(!r.dir.exists());

    let (_t, r) = run(r#"{"command":"futaki","degree":[1]}"#, &[]);
    assert_eq!(r.code(), 1);
    assert!(r.stderr().contains("unknown key `degree`"));

    let out = Command::new(BIN).arg("--bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_file_is_io_error() {
    let out = Command::new(BIN).args(["--config", "/nonexistent/kymh.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"command":"futaki","degrees":[1,1],"exponents":[0,1],"tau":3,"alpha":1}"#).unwrap();
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn env_default_output_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"command":"futaki","degrees":[1,1],"exponents":[0,1],"tau":3,"alpha":1}"#).unwrap();
    let target = tmp.path().join("from_env");
    let out = Command::new(BIN).arg("--config").arg(&cfg).env("KYMH_OUT_DIR", &target).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("report.json").exists());
}

#[test]
fn json_only_output() {
    let (_t, r) = run(
        r#"{"command":"solve-vortex","degrees":[1],"exponents":[0],"tau":3,"n":65,"output":{"formats":["json"]}}"#,
        &[],
    );
    assert_eq!(r.code(), 0);
    assert!(r.dir.join("report.json").exists());
    assert!(!r.dir.join("profile.csv").exists());
}

#[test]
fn identical_configs_give_identical_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"command":"sweep","n":65,"sweep":{"command":"futaki","degrees":[[1,2],[2,3]],"tau":[5,7],"alpha":[1]}}"#;
    let a = run_in(tmp.path(), "a", cfg, &[]);
    let b = run_in(tmp.path(), "b", cfg, &[]);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_seconds");
        v
    };
    assert_eq!(strip(a.report()), strip(b.report()));
    assert_eq!(
        fs::read(a.dir.join("summary.csv")).unwrap(),
        fs::read(b.dir.join("summary.csv")).unwrap()
    );
}
