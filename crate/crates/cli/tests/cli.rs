use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slspectra"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn table(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn eig_sqrt_poles() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["eig", "--tau", "sqrt", "--range", "0..100"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&d.path().join("eig.csv"));
    assert_eq!(rows.len(), 3);
    for (k, r) in rows.iter().enumerate() {
        let want = PI * PI * (k as f64 + 0.75).powi(2);
        assert!((r[1] - want).abs() <= 1e-8 * want, "{r:?}");
    }
    let m = manifest(d.path());
    assert_eq!(m["command"], "eig");
    assert_eq!(m["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["outputs"][0].as_str().unwrap().ends_with("eig.csv"));
}

#[test]
fn eig_neumann_and_empty_range() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["eig", "--tau", "constant:0", "--range", "-1..50"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let rows = table(&d.path().join("eig.csv"));
    let got: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(got.len(), 3);
    assert!(got[0].abs() < 1e-8);
    assert!((got[1] - PI * PI).abs() < 1e-8);
    assert!((got[2] - 4.0 * PI * PI).abs() < 1e-7);

    let o = run(&["eig", "--tau", "sqrt", "--range", "100..0"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn identical_inputs_give_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["spectral", "--tau", "sqrt", "--window", "-20,40", "--nodes", "24"];
    assert_eq!(run(&args, a.path()).status.code(), Some(0));
    assert_eq!(run(&args, b.path()).status.code(), Some(0));
    for f in ["spectral_ac.csv", "spectral_masses.csv", "spectral.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest(a.path())["config_hash"], manifest(b.path())["config_hash"]);
}

#[test]
fn mfun_at_minus_one_with_trace() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["mfun", "--tau", "sqrt", "--lambda", "-1", "--trace"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let parts: Vec<&str> = line.trim().trim_end_matches('i').split(" + ").collect();
    let (re, im): (f64, f64) = (parts[0].parse().unwrap(), parts[1].parse().unwrap());
    // tanh 2 and sech 2.
    assert!((re - 0.964_027_580_075_816_9).abs() < 1e-10);
    assert!((im - 0.265_802_228_834_079_7).abs() < 1e-10);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("mfun.json")).unwrap()).unwrap();
    assert!(doc["m"]["re"].is_string());
    let trace = table(&d.path().join("trace_phi.csv"));
    assert_eq!(trace[0], vec![0.0, 1.0, 0.0, trace[0][3], 0.0]);
    assert!((trace.last().unwrap()[0] - 1.0).abs() < 1e-15);
    assert!(d.path().join("trace_psi.csv").exists());
}

#[test]
fn mfun_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["mfun", "--tau", "bogus", "--lambda", "1"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["mfun", "--tau", "sqrt", "--lambda", "1+"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["mfun", "--lambda", "1"], d.path()).status.code(), Some(2));
    // A pole of m: a numerical failure.
    assert_eq!(run(&["mfun", "--tau", "constant:0", "--lambda", "0"], d.path()).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["eig", "--tau", "sqrt", "--range", "0..1", "--threads", "0"], d.path()).status.code(), Some(2));
}

#[test]
fn classify_json() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["classify", "--tau", "sqrt"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["class"], "bc3");
    assert_eq!(v["B"].as_f64(), Some(0.0));
    assert_eq!(v["moment_finite"], false);
    let o = run(&["classify", "--tau", "constant:2.5"], d.path());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["class"], "bc2");
    assert_eq!(v["D"].as_f64(), Some(2.5));
    assert!(d.path().join("classify.json").exists());
}

#[test]
fn spectral_gap_is_empty() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["spectral", "--tau", "sqrt", "--window", "0.1,5.4", "--nodes", "16"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("spectral.json")).unwrap()).unwrap();
    assert_eq!(v["masses"].as_array().unwrap().len(), 0);
    assert_eq!(v["total_masses"].as_str().unwrap().parse::<f64>().unwrap(), 0.0);
    assert!(v["total_ac"].as_str().unwrap().parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn expand_single_mode() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &["expand", "--tau", "constant:0", "--y", "cos:pi", "--schedule", "1:0..0,2:0..0,3:0..0", "--nodes", "16", "--t-points", "21"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("expand.json")).unwrap()).unwrap();
    let errs: Vec<f64> = v["truncations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["sup_error"].as_str().unwrap().parse().unwrap())
        .collect();
    assert!((errs[0] - 1.0).abs() < 1e-8, "{errs:?}");
    assert!(errs[1] < 1e-8 && errs[2] < 1e-8, "{errs:?}");
    let rows = table(&d.path().join("expand_2.csv"));
    assert_eq!(rows.len(), 21);
    assert_eq!(manifest(d.path())["outputs"].as_array().unwrap().len(), 4);

    let o = run(&["expand", "--tau", "sqrt", "--y", "quartic", "--schedule", "5:-10..0,2:-10..0"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn expand_from_table_file() {
    let d = tempfile::tempdir().unwrap();
    let tab = d.path().join("y.csv");
    let rows: String = (0..=200)
        .map(|i| {
            let t = i as f64 / 200.0;
            format!("{t},{}\n", (PI * t).cos())
        })
        .collect();
    fs::write(&tab, format!("t,y\n{rows}")).unwrap();
    let spec = format!("table:{}", tab.display());
    let o = run(
        &["expand", "--tau", "constant:0", "--y", &spec, "--schedule", "3:0..0", "--nodes", "16", "--t-points", "11"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = table(&d.path().join("expand_0.csv"));
    // Linear interpolation of the table limits the accuracy.
    assert!(rows.iter().all(|r| r[3] < 1e-3), "{rows:?}");
}

#[test]
fn config_file_supplies_problem_and_tau() {
    let d = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/middle_third.toml");
    let o = run(&["--config", cfg.to_str().unwrap(), "eig", "--range", "-1..100"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let got: Vec<f64> = table(&d.path().join("eig.csv")).iter().map(|r| r[1]).collect();
    assert_eq!(got.len(), 3);
    assert!((got[1] - 10.436_918_241_555_672).abs() < 1e-8);
    assert!((got[2] - 88.826_439_609_804_23).abs() < 1e-7);

    let bad = d.path().join("bad.toml");
    fs::write(&bad, "[interval]\na = 1\nb = 0\nalpha = 0\n").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap(), "eig", "--tau", "sqrt", "--range", "0..1"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["--config", "/nonexistent.toml", "classify", "--tau", "sqrt"], d.path()).status.code(), Some(2));
}

#[test]
fn verify_example_default_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify-example"], d.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
    assert!(d.path().join("verify.json").exists());
    assert_eq!(manifest(d.path())["command"], "verify-example");
}

#[test]
fn verify_example_k_max_one_fails_truncation() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify-example", "--k-max", "1"], d.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL [5]")), "{text}");
}

#[test]
fn verify_example_coarse_ode_tol_fails_expansion() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify-example", "--ode-tol", "1e-2"], d.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL [5]") || l.starts_with("FAIL [6]")), "{text}");
}
