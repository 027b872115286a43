use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ngflex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngflex")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = ngflex(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn sidecar(csv: &Path) -> serde_json::Value {
    let mut name = csv.file_name().unwrap().to_os_string();
    name.push(".json");
    serde_json::from_str(&std::fs::read_to_string(csv.with_file_name(name)).unwrap()).unwrap()
}

const SIM: &str = r#"
variant = "NIG"
sigma = 1.0
eta = 1e-6
mu = 0.0
seed = 11

[[models]]
name = "white"
kind = "ar1"
rho = 0.0
nodes = 4000

[[models]]
name = "plane"
kind = "matern2d"
kappa = 3.0
nx = 12
ny = 9
bounds = [0.0, 2.0, 0.0, 1.5]
"#;

#[test]
fn simulate_writes_white_noise_and_mesh_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SIM);
    let out = dir.path().join("out");
    ok(&["simulate", "--config", p(&cfg), "--out", p(&out)]);

    let x = column(&out.join("white_path.csv"), "x");
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let c1: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    assert!((c1 / c0).abs() < 4.0 / (x.len() as f64).sqrt(), "lag-1 autocorrelation {}", c1 / c0);

    let h = column(&out.join("plane_path.csv"), "h");
    assert!((h.iter().sum::<f64>() - 3.0).abs() < 1e-10);
    assert_eq!(h.len(), 12 * 9);
    let meta = sidecar(&out.join("plane_path.csv"));
    assert_eq!(meta["schema"], "ngflex-output-1");
    assert_eq!(meta["config"]["seed"], 11);
}

#[test]
fn simulate_is_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SIM);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        ok(&["--seed", seed, "simulate", "--config", p(&cfg), "--out", p(&out)]);
        std::fs::read(out.join("plane_noise.csv")).unwrap()
    };
    assert_eq!(run("a", "5"), run("b", "5"));
    assert_ne!(run("a", "5"), run("c", "6"));
}

#[test]
fn simulate_reports_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SIM.replace("kappa = 3.0", "kappa = -3.0");
    let cfg = write(dir.path(), "sim.toml", &bad);
    let out = ngflex(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("models[1].kappa"), "{err}");

    let cfg = write(dir.path(), "typo.toml", &SIM.replace("seed = 11", "sed = 11"));
    let out = ngflex(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sed"));
}

fn calibration(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn calibrate_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let r = calibration(&[
        "calibrate", "--model", "Matern2_d1", "--kappa", "0.2", "--alpha-eta", "0.06", "--alpha-mu", "0.01", "--out",
        p(&out),
    ]);
    let want = -(0.06_f64.ln()) / (0.2676 / 0.2);
    assert!((r["theta_eta"].as_f64().unwrap() - want).abs() < 1e-3);
    assert!((r["theta_mu"].as_f64().unwrap() - 13.03).abs() < 0.01);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(doc["method"]["method"], "marginal");

    let e = (-1.0_f64).exp().to_string();
    let r = calibration(&["calibrate", "--variant", "GAL", "--alpha-mu", &e, "--out", p(&out)]);
    assert!((r["theta_mu"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    let bad = ngflex(&["calibrate", "--model", "OU_d1", "--alpha-eta", "1.5", "--out", p(&out)]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha_eta"));
}

#[test]
fn kld_check_is_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    ok(&["kld-check", "--points", "6", "--mu", "0,1", "--out", p(&out)]);
    let csv = out.join("kld.csv");
    let meta = sidecar(&csv);
    for v in ["NIG", "GAL"] {
        let s = meta["details"]["log_log_slope_mu0"][v].as_f64().unwrap();
        assert!((s - 2.0).abs() < 0.02, "{v} slope {s}");
    }
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<(String, f64, f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[1].parse().unwrap(), rec[2].parse().unwrap(), rec[3].parse().unwrap())
        })
        .collect();
    let at = |v: &str, mu: f64| -> Vec<f64> { rows.iter().filter(|r| r.0 == v && r.2 == mu).map(|r| r.3).collect() };
    let (nig, gal) = (at("NIG", 0.0), at("GAL", 0.0));
    assert!((nig[0] / gal[0] - 1.0).abs() < 0.01);
    let excess: Vec<f64> = at("NIG", 1.0).iter().zip(&nig).map(|(a, b)| a - b).collect();
    assert!(excess.windows(2).all(|w| w[1] > w[0]), "{excess:?}");
}

const FIT: &str = r#"
schema = "ngflex-fit-1"
variant = "NIG"

[model]
kind = "matern1d"
kappa = 0.3

[prior]
sigma = { kind = "inv_gamma", shape = 1.0, scale = 1.0 }
eta_star = { kind = "exponential", rate = 30.0 }
mu_star = { kind = "laplace", rate = 13.0 }
sigma_eps = { kind = "fixed", value = 0.5 }

[mcmc]
chains = 2
warmup = 300
samples = 300
seed = 4
"#;

fn data(dir: &Path) -> PathBuf {
    let rows: String = (0..30).map(|i| format!("{i},{}\n", (i as f64 / 4.0).sin() + 0.3 * ((i * 7 % 5) as f64 - 2.0))).collect();
    write(dir, "data.csv", &format!("s,y\n{rows}"))
}

#[test]
fn fit_and_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fit.toml", FIT);
    let d = data(dir.path());
    let out = dir.path().join("f");
    let t = std::time::Instant::now();
    ok(&["fit", "--data", p(&d), "--config", p(&cfg), "--out", p(&out)]);
    assert!(t.elapsed().as_secs() < 60);
    for f in ["chains.csv", "chains.csv.json", "gaussianity.csv", "gaussianity.csv.json", "summary.json", "posterior.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert_eq!(column(&out.join("gaussianity.csv"), "mean").len(), 30);
    let again = dir.path().join("g");
    ok(&["fit", "--data", p(&d), "--config", p(&cfg), "--out", p(&again)]);
    assert_eq!(std::fs::read(out.join("chains.csv")).unwrap(), std::fs::read(again.join("chains.csv")).unwrap());

    let diag = dir.path().join("d");
    let text = ok(&["diagnose", "--input", p(&out.join("posterior.json")), "--out", p(&diag)]);
    assert!(text.contains("eta_star"));
    assert!(column(&diag.join("parameters.csv"), "mean").len() >= 3);
}

#[test]
fn unconverged_fit_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let stuck = FIT.replace("warmup = 300\nsamples = 300", "warmup = 5\nsamples = 40\nadapt = false\ninitial_scale = 1e-9");
    let cfg = write(dir.path(), "fit.toml", &stuck);
    let out = ngflex(&["fit", "--data", p(&data(dir.path())), "--config", p(&cfg), "--out", p(&dir.path().join("f"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not converged"));
}

#[test]
fn fit_rejects_bad_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fit.toml", FIT);
    let d = write(dir.path(), "bad.csv", "s,obs\n0,1\n1,2\n");
    let out = ngflex(&["fit", "--data", p(&d), "--config", p(&cfg), "--out", p(&dir.path().join("f"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'y'"));
}

#[test]
fn study_writes_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let text = ok(&[
        "--jobs", "1", "study", "--set", "2", "--n", "40", "--replications", "2", "--priors", "PC1,Uniform", "--scenarios",
        "no_jump", "--out", p(&out),
    ]);
    assert!(text.contains("Uniform"));
    assert_eq!(column(&out.join("study_rows.csv"), "eta_star_mean").len(), 4);
    assert_eq!(column(&out.join("study_aggregate.csv"), "median_eta_star_mean").len(), 2);
    assert_eq!(sidecar(&out.join("study_rows.csv"))["config"]["n"], 40);
}
