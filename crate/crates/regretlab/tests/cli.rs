use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regretlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("regretlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Writes `json` to a temp file and returns its path.
fn write_config(name: &str, json: &serde_json::Value) -> String {
    let p = tmp(name);
    std::fs::write(&p, json.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn pennies_value() {
    let o = run(&["value", "--config", &cfg("pennies.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.500000000000"), "{}", stdout(&o));
}

#[test]
fn pennies_certificate_holds() {
    let o = run(&["certificate", "--config", &cfg("pennies.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
    assert!(v["val"].as_f64().unwrap() <= 2.0 * v["rad"].as_f64().unwrap() + 1e-9);
}

#[test]
fn missing_horizon_names_path() {
    let mut g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cfg("pennies.json")).unwrap()).unwrap();
    g.as_object_mut().unwrap().remove("T");
    let o = run(&["value", "--config", &write_config("no_t.json", &g)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(".T"), "{}", stderr(&o));
}

#[test]
fn schema_and_kind_are_checked() {
    let mut g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cfg("pennies.json")).unwrap()).unwrap();
    g["schema"] = 2.into();
    let o = run(&["value", "--config", &write_config("schema2.json", &g)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(".schema"));

    let o = run(&["value", "--config", &cfg("pennies_t3_theta.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(".kind"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn randomized_subcommands_require_seed() {
    for args in [
        vec!["blackwell", "--config", &cfg("blackwell_sign.json")],
        vec!["calibrate", "--config", &cfg("calibrate.json")],
        vec!["game", "simulate", "--config", &cfg("rps_internal_simulate.json")],
        vec!["fuzz", "--config", &cfg("fuzz_certificate.json")],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("--seed"), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn failed_check_exits_two() {
    // A negative tolerance demands slack ≥ 10, which no instance has.
    let c = write_config("strict.json", &serde_json::json!({"schema": 1, "kind": "fuzz", "suite": "finite_class", "n": 5, "tol": -10.0}));
    let o = run(&["fuzz", "--config", &c, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let cases: [(&str, &[&str]); 4] = [
        ("bw", &["blackwell", "--config", &cfg("blackwell_sign.json"), "--seed", "5"]),
        ("cal", &["calibrate", "--config", &cfg("calibrate.json"), "--seed", "5", "--format", "csv"]),
        ("sim", &["game", "simulate", "--config", &cfg("rps_internal_simulate.json"), "--seed", "5"]),
        ("mc", &["concentration", "--config", &cfg("concentration_mc.json"), "--seed", "5"]),
    ];
    for (name, args) in cases {
        let mut files = Vec::new();
        for (i, threads) in ["1", "3", "1"].iter().enumerate() {
            let out = tmp(&format!("{name}{i}.out"));
            let mut a = args.to_vec();
            let out_s = out.to_string_lossy().into_owned();
            a.extend(["--threads", threads, "--out", &out_s]);
            let o = run(&a);
            assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
            files.push(std::fs::read(&out).unwrap());
        }
        assert!(!files[0].is_empty());
        assert_eq!(files[0], files[1], "{name}: thread count changed the output");
        assert_eq!(files[0], files[2], "{name}: rerun changed the output");
    }
}

#[test]
fn different_seeds_differ() {
    let a = run(&["calibrate", "--config", &cfg("calibrate.json"), "--seed", "1", "--format", "csv"]);
    let b = run(&["calibrate", "--config", &cfg("calibrate.json"), "--seed", "2", "--format", "csv"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn p_smooth_constant_flag_scales_bound() {
    let c = write_config(
        "psmooth.json",
        &serde_json::json!({"kind": "bounds", "family": "smoothness", "bound": "p_smooth",
            "params": {"T": 100, "phi_card": 4, "payoff_bound": 1, "gamma": 1, "p": 1.5}}),
    );
    let value = |extra: &[&str]| -> f64 {
        let mut a = vec!["bounds", "--config", &c, "--format", "json"];
        a.extend(extra);
        let o = run(&a);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["value"].as_f64().unwrap()
    };
    let one = value(&[]);
    let three = value(&["--c-abs", "3"]);
    assert!((three - 3.0 * one).abs() < 1e-12 * three, "{one} {three}");
}

#[test]
fn bounds_and_lower_configs_run() {
    let o = run(&["bounds", "--config", &cfg("bounds_sauer.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // 1 + 10 + 45
    assert_eq!(v["value"], "56");

    let o = run(&["bounds", "--config", &cfg("bounds_dudley.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = run(&["lower", "--config", &cfg("lower_blackwell.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() >= 0.5 * v["walsh_paley"].as_f64().unwrap() - 1e-9);
}

#[test]
fn theta_value_respects_markov() {
    let t = run(&["theta-value", "--config", &cfg("pennies_t3_theta.json"), "--format", "json"]);
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));
    let tv: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    let mut g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cfg("pennies_t3_theta.json")).unwrap()).unwrap();
    g["kind"] = "value".into();
    let v = run(&["value", "--config", &write_config("t3.json", &g), "--format", "json"]);
    let vv: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert!(tv["value"].as_f64().unwrap() <= vv["value"].as_f64().unwrap() / 0.25 + 1e-9);
}

#[test]
fn report_subset() {
    let c = write_config("report.json", &serde_json::json!({"schema": 1, "kind": "report", "criteria": [3, 11]}));
    let o = run(&["report", "--config", &c, "--seed", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["criteria"], 2);
    assert_eq!(v["all_pass"], true);
}
