use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radonreg")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PIECEWISE: &str = "x1,y\n0,0\n1,1\n2,0\n3,1\n4,0\n";
const PLANE: &str = "x1,x2,y\n0,0,1\n0.5,0.1,2\n-0.4,0.6,0\n0.2,-0.7,1\n0.8,0.8,3\n0.1,0.3,1\n";

fn mse_from(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("mse ")).expect("mse line");
    line[4..].trim().parse().unwrap()
}

#[test]
fn catalog_lists_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["catalog", "list"]);
    assert_eq!(code(&o), 0);
    for name in ["exponential", "tanh_sigmoid", "arctan_sigmoid", "ridge_spline_m", "fractional_spline_alpha", "fractional_laplacian_alpha"] {
        assert!(stdout(&o).contains(name), "{name} missing");
    }
    let j = run(dir.path(), &["catalog", "list", "--json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6);
}

#[test]
fn synth_activation_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["synth", "activation", "--profile", "tanh", "--antisymmetric", "--points", "5", "--range", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let mut it = l.split(',').map(|c| c.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for (t, v) in rows {
        assert!((v - 0.5 * (0.5 * t).tanh()).abs() < 1e-12);
    }
}

#[test]
fn synth_kernel_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["synth", "kernel", "--profile", "fractional_laplacian", "--param", "2", "--dim", "3", "--mode", "classical", "--out", "k.csv"];
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("k.csv")).unwrap();
    assert!(text.starts_with("r,value\n"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PIECEWISE);
    assert_eq!(code(&run(dir.path(), &["bogus"])), 2);
    assert_eq!(code(&run(dir.path(), &["synth", "kernel", "--profile", "tanh"])), 2);
    assert_eq!(code(&run(dir.path(), &["fit", "--mode", "rbf", "--data", "d.csv", "--out", "m.json"])), 2);
    assert_eq!(code(&run(dir.path(), &["fit", "--mode", "rbf", "--data", "d.csv", "--out", "m.json", "--profile", "nosuch"])), 2);
    assert_eq!(code(&run(dir.path(), &["verify", "everything"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "x1,y\n0,1\ninf,2\n");
    let o = run(dir.path(), &["fit", "--mode", "rbf", "--data", "bad.csv", "--out", "m.json", "--profile", "ridge_spline"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("inf"), "{}", stderr(&o));
    let o = run(dir.path(), &["fit", "--mode", "rbf", "--data", "missing.csv", "--out", "m.json", "--profile", "ridge_spline"]);
    assert_eq!(code(&o), 3);
    write(dir.path(), "m.json", r#"{"schema_version": 7, "mode": "rbf"}"#);
    write(dir.path(), "d.csv", PIECEWISE);
    let o = run(dir.path(), &["predict", "--model", "m.json", "--data", "d.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("schema_version"));
}

#[test]
fn rbf_fit_then_predict_interpolates() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PLANE);
    let fit = ["fit", "--mode", "rbf", "--data", "d.csv", "--out", "m.json", "--profile", "fractional_laplacian", "--param", "2", "--lambda", "0"];
    let o = run(dir.path(), &fit);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(model["schema_version"], 1);
    assert_eq!(model["mode"], "rbf");
    let o = run(dir.path(), &["predict", "--model", "m.json", "--data", "d.csv", "--truth", "--out", "p.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(mse_from(&stdout(&o)) < 1e-12);
    let pred = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(pred.starts_with("x1,x2,yhat\n"));
}

#[test]
fn predict_rejects_wrong_dimension() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PLANE);
    write(dir.path(), "one.csv", "x1\n0.5\n");
    let fit = ["fit", "--mode", "rbf", "--data", "d.csv", "--out", "m.json", "--profile", "fractional_laplacian", "--param", "2"];
    assert_eq!(code(&run(dir.path(), &fit)), 0);
    let o = run(dir.path(), &["predict", "--model", "m.json", "--data", "one.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));
}

#[test]
fn mnorm_fit_is_sparse_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PIECEWISE);
    let fit = |out: &str| {
        let args = ["fit", "--mode", "mnorm", "--data", "d.csv", "--out", out, "--profile", "ridge_spline", "--param", "2", "--lambda", "1e-6", "--seed", "9"];
        let o = run(dir.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = fit("a.json");
    let b = fit("b.json");
    assert_eq!(a, b);
    let model: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(model["atoms"].as_array().unwrap().len() <= 3);
    write(dir.path(), "off.csv", "x1,y\n0.5,0.5\n1.5,0.5\n2.25,0.25\n3.75,0.25\n5,-1\n");
    let o = run(dir.path(), &["predict", "--model", "a.json", "--data", "off.csv", "--truth"]);
    assert_eq!(code(&o), 0);
    assert!(mse_from(&stderr(&o)) < 1e-6);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PIECEWISE);
    write(dir.path(), "c.toml", "lambda = 0.5\nprofile = \"ridge_spline\"\nparams = [2.0]\nseed = 1\n");
    let base = ["--config", "c.toml", "fit", "--mode", "mnorm", "--data", "d.csv"];
    assert_eq!(code(&run(dir.path(), &[&base[..], &["--out", "f.json"]].concat())), 0);
    assert_eq!(code(&run(dir.path(), &[&base[..], &["--out", "g.json", "--lambda", "0.01"]].concat())), 0);
    let lam = |f: &str| {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
        v["lambda"].as_f64().unwrap()
    };
    assert_eq!(lam("f.json"), 0.5);
    assert_eq!(lam("g.json"), 0.01);
    write(dir.path(), "bad.toml", "lamda = 1\n");
    assert_eq!(code(&run(dir.path(), &["--config", "bad.toml", "catalog", "list"])), 2);
}

#[test]
fn lp_fit_round_trips_through_model_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.csv", PLANE);
    let fit = ["fit", "--mode", "lp", "--data", "d.csv", "--out", "m.json", "--profile", "fractional_laplacian", "--param", "2", "--p", "1.5", "--lambda", "1e-2", "--grid-size", "32"];
    let o = run(dir.path(), &fit);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(dir.path(), &["predict", "--model", "m.json", "--data", "d.csv", "--truth"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(mse_from(&stderr(&o)) < 1e-2);
}

#[test]
fn verify_duality_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "duality"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("result: PASS"));
    let j = run(dir.path(), &["verify", "bounds", "--json"]);
    assert_eq!(code(&j), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(v["suite"], "bounds");
}
