use std::path::Path;
use std::process::{Command, Output};

fn pointreg(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointreg"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn closed_form_at_zero_coupling_is_free_fermi_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointreg(dir.path(), &["closed-form", "--q", "3.141592653589793", "--betas", "0,0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&dir.path().join("closed_form.csv"));
    let e: f64 = rows[0][1].parse().unwrap();
    let pi = std::f64::consts::PI;
    assert!((e - pi * pi / 3.0).abs() < 1e-14);
    // 1 - 2 beta D + 3 beta^2 D^2 with D = 1
    let e1: f64 = rows[1][1].parse().unwrap();
    assert!((e1 / e - (1.0 - 0.2 + 0.03)).abs() < 1e-14);
}

#[test]
fn every_file_has_a_sidecar_with_config_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointreg(dir.path(), &["bethe-fit", "--n", "8", "--l", "8"]);
    assert!(matches!(code(&o), 0 | 4));
    for name in ["bethe.csv", "bethe_fit.json"] {
        let meta = dir.path().join(format!("{name}.meta.json"));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
        assert_eq!(v["command"], "bethe-fit");
        assert_eq!(v["file"], name);
        assert_eq!(v["config"]["n"], 8);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bethe.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["columns"][1], "E_over_L");
}

#[test]
fn bethe_fit_prints_pass_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointreg(dir.path(), &["bethe-fit"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS [11]")), "{stdout}");
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[closed-form]\nbetas = [0.5, 0.25]\n").unwrap();
    let c = cfg.to_str().unwrap();

    let o = pointreg(dir.path(), &["--config", c, "closed-form"]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&dir.path().join("closed_form.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "0.5");

    let o = pointreg(dir.path(), &["--config", c, "closed-form", "--betas", "0.125"]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&dir.path().join("closed_form.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0.125");
}

#[test]
fn json_config_works_too() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"closed-form": {"density": {"kind": "fermi-sea", "q": 1.0}, "betas": [0.0]}}"#).unwrap();
    let o = pointreg(dir.path(), &["--config", cfg.to_str().unwrap(), "closed-form"]);
    assert_eq!(code(&o), 0);
    let e: f64 = read_csv(&dir.path().join("closed_form.csv"))[0][1].parse().unwrap();
    // int_{-1}^{1} l^2 / (2 pi)
    assert!((e - 1.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn invalid_values_exit_with_config_code_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointreg(dir.path(), &["phi0-limit", "--beta", "-1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`beta`"));

    let o = pointreg(dir.path(), &["theorem1-sweep", "--a-list", "0.01,0.1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("a_list"));

    let o = pointreg(dir.path(), &["phi0-limit", "--profile", "gaussian"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[bethe-fit]\ncoupling = 3\n").unwrap();
    let o = pointreg(dir.path(), &["--config", cfg.to_str().unwrap(), "bethe-fit"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coupling"));
}

#[test]
fn unwritable_output_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not_a_dir");
    std::fs::write(&file, "").unwrap();
    let o = pointreg(&file, &["closed-form"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn failed_check_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "[thresholds]\nbethe_p_tol = 1e-12\n").unwrap();
    let o = pointreg(dir.path(), &["--config", cfg.to_str().unwrap(), "bethe-fit"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL [11]"));
    // outputs are still written
    assert!(dir.path().join("bethe.csv").exists());
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["phi0-limit", "--a-list", "0.1,0.01"];
    assert_eq!(code(&pointreg(a.path(), &args)), 0);
    let mut with_threads = vec!["--threads", "2"];
    with_threads.extend(args);
    assert_eq!(code(&pointreg(b.path(), &with_threads)), 0);
    for f in ["phi0_limit.csv", "k0_solution.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn lorentzian_toy_accepts_negative_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = pointreg(dir.path(), &["lorentzian-toy", "--a-list", "0.001", "--x-list", "-0.5,0.5"]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&dir.path().join("lorentzian_toy.csv"));
    assert_eq!(rows.len(), 2);
    let val = |i: usize, j: usize| -> f64 { rows[i][j].parse().unwrap() };
    // before the core both agree; past it the exact integral has no jump
    // while first order carries 2 beta
    assert!((val(0, 2) - val(0, 3)).abs() < 1e-3);
    assert!((val(1, 2) - 1.5).abs() < 2e-3);
    assert!((val(1, 3) - val(1, 2) - 1.0).abs() < 2e-3);
}

#[test]
fn help_documents_csv_columns() {
    let o = Command::new(env!("CARGO_BIN_EXE_pointreg"))
        .args(["thermo-pt", "--help"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("E2_four_rho"), "{text}");
}
