use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nugget-gp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fit_linear_exponential_matches_expansion() {
    let o = run(&["fit", "--model", "linear", "--n", "20", "--family", "exponential"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["psi_hat"].as_f64().unwrap() - 8.813).abs() < 1e-3);
    assert_eq!(v["status"], "interior");
    let s2 = v["sigma2_hat"].as_f64().unwrap();
    assert!((v["sigma_hat"].as_f64().unwrap() - s2.sqrt()).abs() < 1e-15);
    assert_eq!(v["manifest"]["command"], "fit");
    assert_eq!(v["manifest"]["parameters"]["family"], "exponential");
}

#[test]
fn fit_gaussian_linear_is_unbounded() {
    let o = run(&["fit", "--model", "linear", "--family", "gaussian"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "unbounded_upper");
}

#[test]
fn fit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["fit", &write(dir.path(), "empty.csv", "")]).status.code(), Some(2));
    let bad = run(&["fit", &write(dir.path(), "bad.csv", "x,y\n0,1\n0.5,1\n0.7,oops\n")]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 4"));
    assert_eq!(run(&["fit", &write(dir.path(), "uns.csv", "x,y\n0,1\n1,2\n0.5,0\n")]).status.code(), Some(3));
    assert_eq!(run(&["fit", &write(dir.path(), "dup.csv", "x,y\n0,1\n0,2\n")]).status.code(), Some(3));
    assert_eq!(run(&["fit", &write(dir.path(), "const.csv", "x,y\n0,1\n0.5,1\n1,1\n")]).status.code(), Some(3));
    assert_eq!(run(&["fit", "/nonexistent/file.csv"]).status.code(), Some(2));
}

#[test]
fn all_infeasible_grid_exits_4() {
    // at huge ψ the Gaussian correlation matrix is numerically all ones
    let o = run(&["fit", "--model", "sin", "--n", "20", "--psi-min", "1e6", "--psi-max", "1e7", "--grid", "16"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn fit_reads_user_file() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = (0..8).map(|i| i as f64 / 7.0).map(|x| format!("{x},{}\n", (6.0 * x).sin())).collect();
    let input = write(dir.path(), "d.csv", &format!("x,y\n{body}"));
    let out = dir.path().join("fit.json");
    let o = run(&["fit", &input, "--nu", "0.01", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["nugget"], 0.01);
    assert!(!v["modes"].as_array().unwrap().is_empty());
}

#[test]
fn profile_grid_and_modes() {
    let o = run(&["profile", "--model", "sin", "--n", "7", "--family", "gaussian", "--nu", "0.0001"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 400);
    let l: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let maxima = (1..l.len() - 1).filter(|&i| l[i] > l[i - 1] && l[i] > l[i + 1]).count();
    assert!(maxima >= 2);
    // manifest goes to stderr when writing to stdout
    let m: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["command"], "profile");

    assert!(run(&["profile", "--model", "sin", "--grid", "16"]).status.success());
    assert_eq!(run(&["profile", "--model", "sin", "--grid", "8"]).status.code(), Some(2));
}

#[test]
fn profile_flags_unusable_tail() {
    let o = run(&["profile", "--model", "sin", "--n", "14", "--family", "gaussian", "--nu", "0"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.last().unwrap()[2], "not_pd");
    assert_eq!(rows[0][2], "ok");
}

#[test]
fn profile_writes_sidecar_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    assert!(run(&["profile", "--model", "linear", "--grid", "20", "--out", out.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("psi,L,flag\n"));
    // 17 significant digits
    let first = &csv_rows(&text)[0][0];
    assert_eq!(first, "1.0000000000000000e-3");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["parameters"]["grid"], "20");
}

#[test]
fn figure_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("f1");
    assert!(run(&["figure", "1", "--out", f1.to_str().unwrap()]).status.success());
    let rows = csv_rows(&fs::read_to_string(f1.join("psi_hat.csv")).unwrap());
    assert_eq!(rows.len(), 30);
    for r in rows.iter().filter(|r| r[0] == "linear") {
        let n: f64 = r[1].parse().unwrap();
        let psi: f64 = r[2].parse().unwrap();
        if n >= 12.0 {
            let expansion = n / 2.0 - 7.0 / 6.0 - 7.0 / (18.0 * n) - 17.0 / (54.0 * n * n);
            assert!((psi - expansion).abs() <= 1e-2);
        }
    }
    assert!(f1.join("manifest.json").exists());

    let f4 = dir.path().join("f4");
    assert!(run(&["figure", "4", "--out", f4.to_str().unwrap()]).status.success());
    let modes = csv_rows(&fs::read_to_string(f4.join("modes.csv")).unwrap());
    let count = |nu: &str| modes.iter().filter(|r| r[0] == nu).count();
    assert_eq!(count("0.0000000000000000e0"), 1);
    for nu in [0.01_f64, 0.001, 0.0001] {
        assert!(count(&format!("{nu:.16e}")) >= 2, "nu={nu}");
    }
    let profiles = csv_rows(&fs::read_to_string(f4.join("profiles.csv")).unwrap());
    assert_eq!(profiles.len(), 4 * 400);

    for id in ["2", "3"] {
        let d = dir.path().join(format!("f{id}"));
        assert!(run(&["figure", id, "--out", d.to_str().unwrap(), "--grid", "50"]).status.success());
        assert_eq!(csv_rows(&fs::read_to_string(d.join("profiles.csv")).unwrap()).len(), 3 * 50);
    }

    assert_eq!(run(&["figure", "9"]).status.code(), Some(2));
}

#[test]
fn table1_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(run(&["table1", "--replicates", "1", "--seed", "7", "--out", p.to_str().unwrap()]).status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let header = text.lines().next().unwrap();
    assert_eq!(header, "row,tau_0_nu_0,tau_0_nu_0.01,tau_0_nu_0.02,tau_0.01_nu_0,tau_0.01_nu_0.01,tau_0.01_nu_0.02");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 10);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(run(&["table1", "--replicates", "0"]).status.code(), Some(2));
}

#[test]
fn table1_variance_convention_accepted() {
    let o = run(&["table1", "--replicates", "2", "--amplitude-convention", "variance"]);
    assert!(o.status.success());
    assert_eq!(run(&["table1", "--amplitude-convention", "bogus"]).status.code(), Some(2));
}

#[test]
fn predict_interpolates_at_design_points() {
    let pts: Vec<String> = (0..10).map(|i| (i as f64 / 9.0).to_string()).collect();
    let q = pts.join(",");
    for nu in ["0.05", "0"] {
        let o = run(&["predict", "--model", "sin", "--n", "10", "--nu", nu, "--query", &q]);
        assert!(o.status.success());
        for r in csv_rows(&stdout(&o)) {
            let x: f64 = r[0].parse().unwrap();
            let y = (2.0 * std::f64::consts::PI * x).sin();
            let col = if nu == "0" { 1 } else { 2 };
            assert!((r[col].parse::<f64>().unwrap() - y).abs() <= 1e-8, "nu={nu} x={x}");
        }
    }
}

#[test]
fn predict_far_field_and_fixed_psi() {
    let o = run(&["predict", "--model", "sin", "--n", "8", "--family", "exponential", "--psi", "0.1", "--query", "11"]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    let beta: f64 = m["parameters"]["beta"].as_str().unwrap().parse().unwrap();
    let r = &csv_rows(&stdout(&o))[0];
    assert!((r[1].parse::<f64>().unwrap() - beta).abs() < 1e-12);
    assert_eq!(run(&["predict", "--model", "sin", "--psi", "fast", "--query", "0.1"]).status.code(), Some(2));
}
