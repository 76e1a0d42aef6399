//! End-to-end tests of the `normobs` binary against the bundled fixtures.

use std::path::PathBuf;
use std::process::Command;

use normobs::cli::{load_scenario, load_state};
use serde_json::Value;

const SQRT_8: f64 = 2.828_427_124_746_190_1;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn normobs(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_normobs"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let run = normobs(&full);
    let v = serde_json::from_str(&run.stdout).unwrap_or(Value::Null);
    (run.code, v)
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn check_normal_verdicts() {
    let (code, v) = json(&["check-normal", &fixture("sigma_z.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["normal"], Value::Bool(true));
    assert_eq!(v["residual"].as_f64().unwrap(), 0.0);

    let (code, v) = json(&["check-normal", &fixture("f_sigma_z_plus_i.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["normal"], Value::Bool(true));

    let (code, v) = json(&["check-normal", &fixture("jordan.json")]);
    assert_eq!(code, 3);
    assert_eq!(v["normal"], Value::Bool(false));
    // [[0,1],[0,0]]: M^dag M - M M^dag = diag(-1, 1).
    assert!(close(v["residual"].as_f64().unwrap(), 2f64.sqrt(), 1e-15));
}

#[test]
fn malformed_input_exits_2() {
    let run = normobs(&["check-normal", &fixture("malformed.json")]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("entries"), "stderr: {}", run.stderr);

    let run = normobs(&["check-normal", &fixture("does_not_exist.json")]);
    assert_eq!(run.code, 2);

    let run = normobs(&["no-such-command"]);
    assert_eq!(run.code, 2);
}

#[test]
fn decompose_diag_i() {
    let (code, v) = json(&["decompose", &fixture("diag_i.json")]);
    assert_eq!(code, 0);
    let eigs: Vec<(f64, f64)> = v["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(pair)
        .collect();
    assert_eq!(eigs.len(), 2);
    assert!(close(eigs[0].0, 0.0, 1e-15) && close(eigs[0].1, -1.0, 1e-15));
    assert!(close(eigs[1].0, 0.0, 1e-15) && close(eigs[1].1, 1.0, 1e-15));
    assert_eq!(v["hermitian"], Value::Bool(false));
    assert!(v["reconstruction_residual"].as_f64().unwrap() <= 1e-12);

    let (code, _) = json(&["decompose", &fixture("jordan.json")]);
    assert_eq!(code, 3);
}

#[test]
fn measure_sigma_z_on_plus() {
    let (code, v) = json(&["measure", &fixture("sigma_z.json"), &fixture("plus.json")]);
    assert_eq!(code, 0);
    let outcomes = v["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 2);
    for o in outcomes {
        assert!(close(o["probability"].as_f64().unwrap(), 0.5, 1e-15));
        assert!(o.get("count").is_none());
    }

    let args = [
        "measure",
        &fixture("sigma_z.json"),
        &fixture("plus.json"),
        "--shots",
        "1000",
        "--seed",
        "42",
    ];
    let (code, first) = json(&args);
    assert_eq!(code, 0);
    let counts: Vec<u64> = first["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts.iter().sum::<u64>(), 1000);
    // 5 sigma for p = 1/2 at 1000 shots is about 79.
    assert!(counts.iter().all(|&k| k.abs_diff(500) < 80), "{counts:?}");
    let (_, second) = json(&args);
    assert_eq!(first, second);
}

#[test]
fn measure_complex_spectrum() {
    let (code, v) = json(&[
        "measure",
        &fixture("f_sigma_z_plus_i.json"),
        &fixture("up.json"),
    ]);
    assert_eq!(code, 0);
    let outcomes = v["outcomes"].as_array().unwrap();
    let certain: Vec<_> = outcomes
        .iter()
        .filter(|o| o["probability"].as_f64().unwrap() > 0.5)
        .collect();
    assert_eq!(certain.len(), 1);
    assert_eq!(pair(&certain[0]["eigenvalue"]), (1.0, 1.0));
}

#[test]
fn expectation_of_f_on_plus() {
    // <+|diag(1+i, -1+i)|+> = i.
    let (code, v) = json(&[
        "expect",
        &fixture("f_sigma_z_plus_i.json"),
        &fixture("plus.json"),
    ]);
    assert_eq!(code, 0);
    let (re, im) = pair(&v["expectation"]);
    assert!(close(re, 0.0, 1e-15) && close(im, 1.0, 1e-15));
    let (sre, sim) = pair(&v["spectral_mean"]);
    assert!(close(sre, 0.0, 1e-15) && close(sim, 1.0, 1e-15));

    let run = normobs(&["expect", &fixture("sigma_z.json"), &fixture("singlet.json")]);
    assert_eq!(run.code, 2);
}

#[test]
fn evolve_and_ehrenfest() {
    let (code, v) = json(&[
        "evolve",
        &fixture("plus.json"),
        &fixture("sigma_z.json"),
        "--t",
        "0",
    ]);
    assert_eq!(code, 0);
    let amps: Vec<(f64, f64)> = v["state"]["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(pair)
        .collect();
    let r = 0.5f64.sqrt();
    assert!(close(amps[0].0, r, 1e-15) && close(amps[1].0, r, 1e-15));

    // Precession of <sigma_x> under H = sigma_z: d/dt <X> = -2 sin(2t) from |+>.
    let t: f64 = 0.3;
    let (code, v) = json(&[
        "evolve",
        &fixture("plus.json"),
        &fixture("sigma_z.json"),
        "--t",
        "0.3",
        "--ehrenfest",
        &fixture("sigma_x.json"),
    ]);
    assert_eq!(code, 0);
    let e = &v["ehrenfest"];
    let (re, im) = pair(&e["heisenberg_rhs"]);
    assert!(close(re, -2.0 * (2.0 * t).sin(), 1e-12) && close(im, 0.0, 1e-12));
    assert!(e["deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn evolve_writes_loadable_state() {
    let dir = std::env::temp_dir().join(format!("normobs-evolve-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("evolved.json");
    let out_str = out.to_string_lossy().into_owned();
    let (code, v) = json(&[
        "evolve",
        &fixture("plus.json"),
        &fixture("sigma_y.json"),
        "--t",
        "1.25",
        "--out",
        &out_str,
    ]);
    assert_eq!(code, 0);
    let loaded = load_state(&out).unwrap();
    assert!(loaded.warning.is_none());
    let printed: Vec<(f64, f64)> = v["state"]["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(pair)
        .collect();
    for (z, p) in loaded.state.amplitudes().iter().zip(&printed) {
        assert_eq!(z.re.to_bits(), p.0.to_bits());
        assert_eq!(z.im.to_bits(), p.1.to_bits());
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn chsh_lhv_alphabets() {
    let (code, v) = json(&["chsh", "lhv"]);
    assert_eq!(code, 0);
    assert_eq!(v["max_abs_s"].as_f64().unwrap(), 2.0);

    let (code, v) = json(&[
        "chsh",
        "lhv",
        "--alphabet-a",
        "1,-1",
        "--alphabet-b",
        "1,-1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["max_abs_s"].as_f64().unwrap(), 2.0);
    for row in v["strategies"].as_array().unwrap() {
        let (re, im) = pair(&row["s"]);
        assert_eq!(im, 0.0);
        assert!(re == 2.0 || re == -2.0);
    }

    let run = normobs(&["chsh", "lhv", "--alphabet-a", "1,2"]);
    assert_eq!(run.code, 2);
    assert!(
        run.stderr.contains("--alphabet-a"),
        "stderr: {}",
        run.stderr
    );

    let text = normobs(&["chsh", "lhv"]);
    assert_eq!(text.code, 0);
    assert!(text.stdout.contains("max |S| = 2.000000000000"));
}

#[test]
fn chsh_quantum_fixtures() {
    for name in ["chsh_optimal.json", "chsh_optimal_bob_i.json"] {
        let (code, v) = json(&["chsh", "quantum", &fixture(name)]);
        assert_eq!(code, 0, "{name}");
        assert!(
            close(v["abs_chsh_value"].as_f64().unwrap(), SQRT_8, 1e-9),
            "{name}"
        );
        assert!(v["z_operator_norm"].as_f64().unwrap() <= SQRT_8 + 1e-9);
        assert_eq!(v["satisfied"], Value::Bool(true));
    }
    let (_, hermitian) = json(&["chsh", "quantum", &fixture("chsh_optimal.json")]);
    assert!(hermitian["hermitian_z_squared_residual"].as_f64().unwrap() <= 1e-12);
    let (_, bob_i) = json(&["chsh", "quantum", &fixture("chsh_optimal_bob_i.json")]);
    assert!(bob_i["hermitian_z_squared_residual"].is_null());

    // Product state: correlations factorize, so |S| <= 2.
    let (code, v) = json(&["chsh", "quantum", &fixture("chsh_product.json")]);
    assert_eq!(code, 0);
    assert!(v["abs_chsh_value"].as_f64().unwrap() <= 2.0 + 1e-12);
}

#[test]
fn chsh_optimize_states() {
    let (code, v) = json(&[
        "chsh",
        "optimize",
        &fixture("singlet.json"),
        "--restarts",
        "4",
    ]);
    assert_eq!(code, 0);
    let s = v["abs_chsh_value"].as_f64().unwrap();
    assert!(
        (SQRT_8 - 1e-6..=SQRT_8 + 1e-9).contains(&s),
        "singlet |S| = {s}"
    );
    assert_eq!(v["settings"].as_array().unwrap().len(), 4);

    let (code, v) = json(&[
        "chsh",
        "optimize",
        &fixture("product_up_up.json"),
        "--restarts",
        "4",
    ]);
    assert_eq!(code, 0);
    let s = v["abs_chsh_value"].as_f64().unwrap();
    assert!((2.0 - 1e-6..=2.0 + 1e-9).contains(&s), "product |S| = {s}");

    assert_eq!(
        normobs(&[
            "chsh",
            "optimize",
            &fixture("singlet.json"),
            "--restarts",
            "0"
        ])
        .code,
        2
    );
    assert_eq!(normobs(&["chsh", "optimize", &fixture("up.json")]).code, 2);
}

#[test]
fn chsh_optimize_out_round_trip() {
    let dir = std::env::temp_dir().join(format!("normobs-optimize-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("best.json");
    let out_str = out.to_string_lossy().into_owned();
    let (code, v) = json(&[
        "chsh",
        "optimize",
        &fixture("phi_plus.json"),
        "--restarts",
        "2",
        "--out",
        &out_str,
    ]);
    assert_eq!(code, 0);
    let (sc, warning) = load_scenario(&out).unwrap();
    assert!(warning.is_none());
    let s = normobs::chsh::chsh_value(&sc).norm();
    assert!(close(s, v["abs_chsh_value"].as_f64().unwrap(), 1e-9));

    let (code, q) = json(&["chsh", "quantum", &out_str]);
    assert_eq!(code, 0);
    assert!(close(q["abs_chsh_value"].as_f64().unwrap(), s, 1e-12));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn chsh_audit_is_deterministic() {
    let args = ["--json", "--seed", "11", "chsh", "audit", "--trials", "300"];
    let first = normobs(&args);
    let second = normobs(&args);
    assert_eq!(first.code, 0);
    assert_eq!(first.stdout, second.stdout);
    let v: Value = serde_json::from_str(&first.stdout).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["trials"].as_u64().unwrap(), 300);
    assert!(v["max_z_norm"].as_f64().unwrap() <= SQRT_8 + 1e-9);

    let (code, v) = json(&["chsh", "audit", "--trials", "200", "--hermitian"]);
    assert_eq!(code, 0);
    assert_eq!(v["hermitian"], Value::Bool(true));

    assert_eq!(normobs(&["chsh", "audit", "--trials", "0"]).code, 2);
}

#[test]
fn help_and_version_exit_zero() {
    let run = normobs(&["--help"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("check-normal"));
    assert_eq!(normobs(&["--version"]).code, 0);
}
