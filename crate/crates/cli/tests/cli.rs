//! End-to-end checks of the `tdg` binary: CSV contracts, exit codes, and
//! the reference convergence rates of the bundled experiment configs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn tdg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdg"))
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// last data row of a CSV (skipping comments and the header)
fn last_row(csv: &str) -> Vec<String> {
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect();
    rows.last()
        .expect("data row")
        .split(',')
        .map(str::to_string)
        .collect()
}

#[test]
fn convergence_reproduces_reference_rates() {
    // p = 1 on levels 2..4: final-row rate_v near 2.30, rate_dg near 1.49
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "conv.conf",
        "case = hom2d_hat\nmethod = method1\np = 1\nlevels = 2,3,4\nboundary = neumann\nlambda1 = 0.5615528128088303\n",
    );
    let out = run(tdg().arg("convergence").arg("--config").arg(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = stdout(&out);
    assert!(csv.starts_with("level,h,dofs,err_v,rate_v,err_sigma,rate_sigma,err_dg,rate_dg"));
    let row = last_row(&csv);
    let rate_v: f64 = row[4].parse().unwrap();
    let rate_dg: f64 = row[8].parse().unwrap();
    assert!((rate_v - 2.30).abs() <= 0.3, "rate_v = {rate_v}");
    assert!((rate_dg - 1.49).abs() <= 0.3, "rate_dg = {rate_dg}");
}

#[test]
fn run_emits_single_row_with_blank_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "run.conf",
        "case = hom2d_hat\nmethod = method2\np = 1\nlevels = 2\nboundary = neumann\n",
    );
    let out_path = dir.path().join("out.csv");
    let out = run(tdg()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_path));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    let row = last_row(&csv);
    assert_eq!(row[0], "2");
    assert!(row[4].is_empty() && row[6].is_empty() && row[8].is_empty());
}

#[test]
fn rho_sweep_identity_tensor_gives_zero_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "rho.conf",
        "case = hom2d_hat\nmethod = method1\np = 1\nlevels = 2\nboundary = neumann\nlambda1 = 1.0, 1.0\n",
    );
    let out = run(tdg().arg("rho-sweep").arg("--config").arg(&cfg));
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with("rho,err_v,rho_rate_v,err_sigma,rho_rate_sigma,err_dg,rho_rate_dg"));
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // identical tensors: identical errors, zero rho-rate
    assert_eq!(rows[0][1], rows[1][1]);
    let rate: f64 = rows[1][2].parse().unwrap();
    assert_eq!(rate, 0.0);
}

#[test]
fn zero_data_case_reports_flagged_absolute_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "zero.conf",
        "case = zero2d\nmethod = method1\np = 1\nlevels = 1\nboundary = dirichlet\n",
    );
    let out = run(tdg().arg("run").arg("--config").arg(&cfg));
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.contains("# err_v reported as absolute error"));
    assert!(csv.contains("# err_sigma reported as absolute error"));
    let row = last_row(&csv);
    assert_eq!(row[3], "0.00000e0");
    assert_eq!(row[5], "0.00000e0");
}

#[test]
fn properties_pass_and_fault_injection_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "props.conf", "case = hom2d_hat\nseed = 42\n");
    let out = run(tdg().arg("properties").arg("--config").arg(&cfg));
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");

    let bad = write_config(
        &dir,
        "props_bad.conf",
        "case = hom2d_hat\nseed = 42\nhooks.flip_flux_sign = true\n",
    );
    let out = run(tdg().arg("properties").arg("--config").arg(&bad));
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL coercivity-identity"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("coercivity-identity"));
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "bad.conf", "case = hom2d_hat\nlevels = 3,2\n");
    let out = run(tdg().arg("convergence").arg("--config").arg(&cfg));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("levels"), "{err}");

    let missing = dir.path().join("nope.conf");
    let out = run(tdg().arg("run").arg("--config").arg(&missing));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_system_exits_with_code_three_naming_the_slab() {
    // a one-point rule cannot resolve the p = 3 pairing and the first
    // slab block comes out rank-deficient
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "singular.conf",
        "case = hom2d_hat\nmethod = method1\np = 3\nlevels = 2\nboundary = neumann\nquad.order = 1\n",
    );
    let out = run(tdg().arg("run").arg("--config").arg(&cfg));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("slab 0"), "{err}");
}

#[test]
fn bundled_configs_parse() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("conf") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = trefftz_wave_cli::config::RunConfig::parse(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let _ = cfg.to_spec();
        count += 1;
    }
    assert!(count >= 20, "expected the full config set, found {count}");
}
