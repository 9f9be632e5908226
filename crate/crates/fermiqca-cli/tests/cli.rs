use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermiqca")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermiqca")).args(args).env(key, val).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with `#` comment lines and one header line.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn verify_theorem1_passes() {
    let o = run(&["verify", "--suite", "theorem1", "--modes", "6", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    for c in v["checks"].as_array().unwrap() {
        if c["name"].as_str().unwrap().contains("product_residual") {
            assert!(c["value"].as_f64().unwrap() < 1e-10);
        }
    }
}

#[test]
fn verify_single_mode_car() {
    assert_eq!(run(&["verify", "--suite", "car", "--modes", "1"]).status.code(), Some(0));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(run(&["verify", "--suite", "bogus"]).status.code(), Some(2));
}

#[test]
fn verify_writes_report_file() {
    let dir = std::env::temp_dir().join(format!("fermiqca-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("jw.json");
    let o = run(&["verify", "--suite", "jw", "--modes", "4", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["suite"], "jw");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dispersion_rows_satisfy_relation() {
    let o = run(&["dirac", "dispersion1d", "--sites", "63", "--mass-coupling", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rs = rows(&stdout(&o));
    assert_eq!(rs.len(), 63);
    for r in rs {
        let (p, m, w): (f64, f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((w.cos() - m.cos() * p.cos()).abs() < 1e-12);
    }
}

#[test]
fn massless_dispersion_is_linear() {
    let o = run(&["dirac", "dispersion1d", "--sites", "9", "--mass-coupling", "0"]);
    for r in rows(&stdout(&o)) {
        let (p, w): (f64, f64) = (r[1].parse().unwrap(), r[3].parse().unwrap());
        assert!((w - p.abs()).abs() < 1e-12);
    }
}

#[test]
fn even_ring_and_bad_spacing_are_usage_errors() {
    assert_eq!(run(&["dirac", "dispersion1d", "--sites", "8"]).status.code(), Some(2));
    assert_eq!(run(&["dirac", "converge1d", "--eps", "-0.1"]).status.code(), Some(2));
}

#[test]
fn converge1d_ratios() {
    let o = run(&["dirac", "converge1d", "--m", "1", "--p", "1", "--t", "1", "--eps", "0.1,0.05,0.025"]);
    assert_eq!(o.status.code(), Some(0));
    let errs: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    for w in errs.windows(2) {
        let r = w[1] / w[0];
        assert!((0.4..=0.6).contains(&r), "{r}");
    }
}

#[test]
fn three_d_sweeps_emit_csv() {
    for variant in ["converge3d-weyl", "converge3d-dirac"] {
        let o = run(&["dirac", variant, "--p", "1,1,1"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(rows(&stdout(&o)).len(), 4);
    }
    let o = run(&["dirac", "dispersion3d", "--sites", "3"]);
    assert_eq!(rows(&stdout(&o)).len(), 27);
}

#[test]
fn csv_floats_round_trip() {
    let text = stdout(&run(&["dirac", "dispersion1d", "--sites", "7", "--mass-coupling", "0.3"]));
    for r in rows(&text) {
        let w: f64 = r[3].parse().unwrap();
        assert_eq!(format!("{w:?}"), r[3]);
    }
}

fn compile_json(args: &[&str]) -> serde_json::Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn compiled_ring_of_three_is_verified() {
    let v = compile_json(&["compile", "dirac1d", "--sites", "3", "--steps", "5"]);
    assert_eq!(v["verification"]["status"], "checked");
    assert!(v["verification"]["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    assert_eq!(v["ancilla_pairs"].as_array().unwrap().len(), 1);
}

#[test]
fn layer_count_does_not_grow_with_ring() {
    let a = compile_json(&["compile", "dirac1d", "--sites", "9"]);
    let b = compile_json(&["compile", "dirac1d", "--sites", "15"]);
    assert_eq!(a["layer_count"], b["layer_count"]);
    assert_eq!(a["circuit"]["layers"].as_array().unwrap().len(), a["layer_count"].as_u64().unwrap() as usize);
}

#[test]
fn identity_model_compiles_to_empty_circuit() {
    let v = compile_json(&["compile", "dirac1d", "--sites", "5", "--mass-coupling", "0", "--steps", "0"]);
    assert_eq!(v["gate_count"], 0);
    assert!(v["circuit"]["layers"].as_array().unwrap().is_empty());
}

#[test]
fn oversized_compile_skips_verification_with_warning() {
    let o = run_env(&["compile", "dirac1d", "--sites", "5"], "FERMIQCA_MAX_MODES", "8");
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verification"]["status"], "skipped");
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn noncausal_demo_csv() {
    let o = run(&["demo-noncausal", "--sites", "9", "--site", "2,4", "--time", "0,0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "t,site,amplitude"));
    let rs = rows(&text);
    assert_eq!(rs.len(), 4);
    assert_eq!(rs[0][2], "0.0");
    let a: f64 = rs[3][2].parse().unwrap();
    assert!(a > 0.0 && (a / (1e-12 / 24.0) - 1.0).abs() < 0.5);
}

#[test]
fn sweeps_are_byte_identical() {
    let args = ["dirac", "dispersion3d", "--sites", "5"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
