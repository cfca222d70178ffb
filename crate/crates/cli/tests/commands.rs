use std::f64::consts::PI;
use std::fs;
use std::process::{Command, Output};

fn pasdfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasdfs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data lines: not comments, header skipped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn antibunching_sweep_has_one_row_per_alpha() {
    let out = pasdfs(&[
        "sweep",
        "--k",
        "2",
        "--alpha-start",
        "0",
        "--alpha-stop",
        "2",
        "--alpha-steps",
        "201",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("# pasdfs-sweep v1\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r[5] == "antibunching" && r[6] == "1"));
    // Fock |2>: d(1) = <a^dag^2 a^2> - <N>^2 = 2 - 4
    assert_eq!(f(&rows[0][7]), -2.0);
}

#[test]
fn unknown_criterion_is_a_usage_error() {
    let out = pasdfs(&["sweep", "--criterion", "wigner"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wigner"));
}

#[test]
fn invalid_sweep_ranges_are_usage_errors() {
    for args in [
        &["sweep", "--alpha-steps", "1"][..],
        &["sweep", "--alpha-start", "2", "--alpha-stop", "1"],
        &["sweep", "--criterion", "hong_mandel", "--order", "3"],
        &["sweep", "--k", "13"],
        &["sweep", "--jobs", "0"],
    ] {
        assert_eq!(pasdfs(args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(pasdfs(&["--help"]).status.code(), Some(0));
    assert_eq!(pasdfs(&[]).status.code(), Some(1));
}

#[test]
fn annihilated_points_leave_a_marker_and_the_sweep_continues() {
    let out = pasdfs(&["sweep", "--q", "1", "--alpha-steps", "3"]);
    assert!(out.status.success());
    let rows = rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][11], "annihilated");
    assert_eq!(rows[0][7], "nan");
    assert_eq!(rows[1][11], "");
}

#[test]
fn per_criterion_orders_and_row_order() {
    let out = pasdfs(&[
        "sweep",
        "--k",
        "0,1",
        "--alpha-steps",
        "2",
        "--alpha-start",
        "0.5",
        "--criterion",
        "hong_mandel:2:4,vogel",
    ]);
    assert!(out.status.success());
    let keys: Vec<String> = rows(&stdout(&out))
        .iter()
        .map(|r| format!("{}/{}/{}/{}", r[0], r[3], r[5], r[6]))
        .collect();
    let expected = [
        "0/5.00000000000e-1/hong_mandel/2",
        "0/5.00000000000e-1/hong_mandel/4",
        "0/5.00000000000e-1/vogel/0",
        "0/2.00000000000e0/hong_mandel/2",
        "0/2.00000000000e0/hong_mandel/4",
        "0/2.00000000000e0/vogel/0",
        "1/5.00000000000e-1/hong_mandel/2",
        "1/5.00000000000e-1/hong_mandel/4",
        "1/5.00000000000e-1/vogel/0",
        "1/2.00000000000e0/hong_mandel/2",
        "1/2.00000000000e0/hong_mandel/4",
        "1/2.00000000000e0/vogel/0",
    ];
    assert_eq!(keys, expected);
}

#[test]
fn oracle_check_column_is_small() {
    let out = pasdfs(&[
        "sweep",
        "--k",
        "1",
        "--q",
        "1",
        "--n",
        "1",
        "--alpha-steps",
        "5",
        "--criterion",
        "antibunching,hong_mandel,klyshko,vogel",
        "--oracle-check",
    ]);
    assert!(out.status.success());
    for r in rows(&stdout(&out)) {
        assert!(f(&r[10]) <= 1e-9, "{r:?}");
    }
}

#[test]
fn json_sweep_rounds_to_twelve_digits() {
    let out = pasdfs(&[
        "sweep",
        "--k",
        "1",
        "--alpha-steps",
        "4",
        "--format",
        "json",
        "--criterion",
        "phase_fluctuation",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "pasdfs-sweep");
    assert_eq!(v["version"], 1);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let alpha = rows[1]["alpha_abs"].as_f64().unwrap();
    assert_eq!(alpha, 0.666666666667);
    // |1> has no phase information: U is undefined
    assert!(rows[0]["value"].is_null());
    assert_eq!(rows[0]["health"], "denominator_small");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "# demo\nk = 1,2\nalpha_steps = 3\ncriterion = hong_mandel\noracle-check = true\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = rows(&stdout(&pasdfs(&["sweep", "--config", cfg])));
    assert_eq!(from_file.len(), 6);
    assert!(from_file.iter().all(|r| r[5] == "hong_mandel" && !r[10].is_empty()));
    let overridden = rows(&stdout(&pasdfs(&[
        "sweep",
        "--config",
        cfg,
        "--k",
        "0",
        "--alpha-steps",
        "2",
    ])));
    assert_eq!(overridden.len(), 2);
    assert!(overridden.iter().all(|r| r[0] == "0"));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "alpha_steps = 3\nwigner = 1\n").unwrap();
    let out = pasdfs(&["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'wigner'"));
}

#[test]
fn state_listings() {
    let vac = stdout(&pasdfs(&["state"]));
    assert_eq!(
        rows(&vac),
        vec![vec!["0", "1.00000000000e0", "0.00000000000e0", "1.00000000000e0"]]
    );
    assert!(vac.contains("normalization_residual=0.00000000000e0"));

    let one = rows(&stdout(&pasdfs(&["state", "--k", "1"])));
    assert_eq!(one.len(), 1);
    assert_eq!(one[0][0], "1");

    let mixed = rows(&stdout(&pasdfs(&[
        "state", "--k", "1", "--q", "1", "--n", "1", "--alpha", "0.5",
    ])));
    let total: f64 = mixed.iter().map(|r| f(&r[3])).sum();
    assert!((total - 1.0).abs() < 1e-10);

    let out = pasdfs(&["state", "--q", "2", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("annihilated"));
}

#[test]
fn phase_listings() {
    let fock = rows(&stdout(&pasdfs(&["phase", "--n", "2"])));
    assert_eq!(fock.len(), 1024);
    assert!(fock.iter().all(|r| (f(&r[1]) - 1.0 / (2.0 * PI)).abs() < 1e-12));

    let text = stdout(&pasdfs(&[
        "phase",
        "--k",
        "1",
        "--q",
        "2",
        "--n",
        "1",
        "--alpha",
        "0.5",
        "--grid-points",
        "512",
    ]));
    let rows = rows(&text);
    let h = f(&rows[1][0]) - f(&rows[0][0]);
    let integral: f64 = rows.iter().map(|r| f(&r[1]) * h).sum();
    assert!((integral - 1.0).abs() < 1e-10);
    assert_eq!(pasdfs(&["phase", "--grid-points", "100"]).status.code(), Some(1));
}

#[test]
fn qfunc_listings() {
    let text = stdout(&pasdfs(&["qfunc", "--window=-2,2,-2,2", "--nx", "65", "--ny", "65"]));
    assert!(text.starts_with("# pasdfs-qfunc v1\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 65 * 65);
    let origin = rows
        .iter()
        .find(|r| f(&r[0]) == 0.0 && f(&r[1]) == 0.0)
        .expect("origin is a node");
    assert!((f(&origin[2]) - 1.0 / PI).abs() < 1e-12);

    let zero = stdout(&pasdfs(&[
        "qfunc",
        "--k",
        "2",
        "--q",
        "1",
        "--n",
        "1",
        "--alpha",
        "0.1",
        "--theta",
        "0.7853981633974483",
    ]));
    assert!(!zero.contains("zeros=0"));
    assert_eq!(pasdfs(&["qfunc", "--nx", "10"]).status.code(), Some(1));
    assert_eq!(pasdfs(&["qfunc", "--window", "1,2"]).status.code(), Some(1));
}

#[test]
fn selfcheck_passes_on_default_grid() {
    let out = pasdfs(&["selfcheck", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failures"], 0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 27 * 5);
}

#[test]
fn selfcheck_reports_mismatch_with_exit_three() {
    // a tolerance no floating-point result can meet
    let out = pasdfs(&[
        "selfcheck",
        "--k",
        "1",
        "--q",
        "0",
        "--n",
        "1",
        "--alpha-steps",
        "2",
        "--alpha-start",
        "1",
        "--tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.csv");
    let args = ["state", "--k", "2", "--alpha", "1.2", "--theta", "-0.4"];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(pasdfs(&with_out).status.success());
    assert_eq!(fs::read_to_string(&path).unwrap(), stdout(&pasdfs(&args)));
}
