use std::path::Path;
use std::process::{Command, Output};

use workreal_core::two_level::{default_theta_grid, tls_theta_sweep, TlsSpectra};

fn workreal(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workreal"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WORKREAL_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Manifest lines and the parsed data rows of a CSV file.
fn read_csv(path: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut manifest = Vec::new();
    let mut lines = text.lines();
    let header = loop {
        let line = lines.next().expect("header line");
        match line.strip_prefix("# ") {
            Some(m) => manifest.push(m.to_string()),
            None => break line.split(',').map(String::from).collect(),
        }
    };
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (manifest, header, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn tls_theta_defaults_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = workreal(&["tls-theta"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (manifest, header, rows) = read_csv(&dir.path().join("tls-theta.csv"));
    assert_eq!(header, ["theta", "k_cor", "k_cor_flipped", "k_en_fine", "k_en_grouped"]);
    assert_eq!(rows.len(), 721);
    assert!(manifest[0].starts_with("workreal "));
    assert!(manifest.contains(&"leak_budget = 1e-10".to_string()));
    assert!(!manifest.iter().any(|m| m.contains("wall")));

    let exact = tls_theta_sweep(1.0, &TlsSpectra::Equal.build(), &default_theta_grid()).unwrap();
    for (row, e) in rows.iter().zip(&exact) {
        let parsed: Vec<f64> = row.iter().map(|s| f(s)).collect();
        assert_eq!(parsed, [e.theta, e.k_cor, e.k_cor_flipped, e.k_en_fine, e.k_en_grouped]);
    }

    let summary = std::fs::read_to_string(dir.path().join("summary.jsonl")).unwrap();
    let record: serde_json::Value = serde_json::from_str(summary.lines().next().unwrap()).unwrap();
    assert_eq!(record["status"], "ok");
    assert!(record["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(record["results"]["rows"], 721);
}

#[test]
fn entropy_base_two_rescales_entropic_columns_only() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("e");
    let b = dir.path().join("two");
    assert!(workreal(&["tls-theta", "--grid-spec", "0.3,1.2"], &a).status.success());
    assert!(
        workreal(&["tls-theta", "--grid-spec", "0.3,1.2", "--entropy-base", "2"], &b)
            .status
            .success()
    );
    let (_, _, ra) = read_csv(&a.join("tls-theta.csv"));
    let (_, _, rb) = read_csv(&b.join("tls-theta.csv"));
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x[1], y[1]);
        assert!((f(&x[3]) / std::f64::consts::LN_2 - f(&y[3])).abs() < 1e-15);
    }
}

#[test]
fn mc_crosscheck_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = workreal(&["mc-crosscheck", "--seed", seed], &out);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("mc-crosscheck.csv")).unwrap()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# two angles\nexperiment = tls-theta\nbeta = 0.5\ngrid_spec = 0,1.0471975511965976\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = workreal(&["tls-theta", "--config", cfg.to_str().unwrap(), "--beta", "2"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let (manifest, _, rows) = read_csv(&out.join("tls-theta.csv"));
    assert!(manifest.contains(&"beta = 2".to_string()));
    assert_eq!(rows.len(), 2);
    assert!((f(&rows[1][1]) + 0.125).abs() < 1e-12);
}

#[test]
fn invalid_config_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "beta = 1\ndegeneracy = coarse\n").unwrap();
    let o = workreal(&["tls-theta", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("bad.cfg:2:") && e.contains("field `degeneracy`"), "{e}");

    let o = workreal(&["jarzynski-check"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field `seed`"));

    let o = Command::new(env!("CARGO_BIN_EXE_workreal"))
        .args(["tls-theta", "--out"])
        .arg(dir.path())
        .env("WORKREAL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field `threads`"));
}

#[test]
fn truncation_failure_names_beta_and_r() {
    let dir = tempfile::tempdir().unwrap();
    let o = workreal(
        &["squeeze-grid", "--beta", "1", "--grid-spec", "0,0.5", "--n-max", "40"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("beta = 1") && e.contains("r = 0.5"), "{e}");
    let summary = std::fs::read_to_string(dir.path().join("summary.jsonl")).unwrap();
    assert!(summary.contains("\"status\":\"error\""));
}

#[test]
fn squeeze_grid_writes_table_and_contours() {
    let dir = tempfile::tempdir().unwrap();
    let o = workreal(
        &["squeeze-grid", "--beta", "0.1", "--grid-spec", "0:0.04:5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (manifest, header, rows) = read_csv(&dir.path().join("squeeze-grid.csv"));
    assert_eq!(header, ["r1", "r2", "k_en"]);
    assert_eq!(rows.len(), 25);
    assert!(manifest.iter().any(|m| m.starts_with("n_max_used = ")));
    let diag = rows.iter().find(|r| f(&r[0]) == 0.02 && f(&r[1]) == 0.02).unwrap();
    assert!(f(&diag[2]) < 0.0);

    let (_, h0, zero) = read_csv(&dir.path().join("squeeze-grid.contour_0.csv"));
    assert_eq!(h0, ["r1", "r2"]);
    assert!(!zero.is_empty());
    let (m5, _, _) = read_csv(&dir.path().join("squeeze-grid.contour_-0.05.csv"));
    assert!(m5.contains(&"contour_level = -0.05".to_string()));
}

#[test]
fn jarzynski_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = workreal(&["jarzynski-check", "--seed", "4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, _, rows) = read_csv(&dir.path().join("jarzynski-check.csv"));
    assert_eq!(rows.len(), 102);
    for r in rows {
        assert!(f(&r[5]) < f(&r[8]), "{r:?}");
    }
}
