use std::process::Command;

const HEADER: &str = "figure,method,d,r,n,N,trial,seed,wce_sq,runtime_ms";

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nystrom-quad"))
}

#[test]
fn writes_csv_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let status = cli()
        .args(["--figure", "fig1a", "--out", out.to_str().unwrap(), "--seed", "7", "--n-list", "4,8", "--trials", "2"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6 * 2 * 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[0], "fig1a");
        assert_eq!(fields[7], "7");
        let wce_sq: f64 = fields[8].parse().unwrap();
        assert!(wce_sq >= 0.0);
        let mantissa = fields[8].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || {
        let output = cli()
            .args(["--figure", "fig1b", "--n-list", "4,8", "--trials", "3", "--seed", "11", "--no-timing"])
            .output()
            .unwrap();
        assert!(output.status.success());
        output.stdout
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn no_inequality_flag_runs_requested_trials() {
    let output = cli()
        .args(["--figure", "fig2b", "--trials", "5", "--no-inequality", "--n-list", "4", "--methods", "kq-ksZ,kq-ksYZ"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 5);
    assert!(rows.iter().all(|r| r.contains(",64,")));
}

#[test]
fn config_file_rtol_is_logged() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"figure": "custom", "d": 1, "r": 2, "n_list": [4, 6], "n_rule": "n2", "trials": 2,
            "methods": ["kq-ksmuZ", "monte-carlo"], "seed": 3, "enforce_inequality": true, "rtol": 1e-8}"#,
    )
    .unwrap();
    let output = cli().args(["--config", config.to_str().unwrap()]).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# rtol=1.0000000000000000e-8"));
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 2 * 2 * 2);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();
    assert_eq!(code(&["--bogus"]), Some(2));
    assert_eq!(code(&[]), Some(2));
    assert_eq!(code(&["--figure", "fig7"]), Some(2));
    assert_eq!(code(&["--figure", "fig1a", "--methods", "kq-nothing"]), Some(2));
    assert_eq!(code(&["--figure", "fig1a", "--trials", "0"]), Some(2));
    assert_eq!(code(&["--figure", "fig1a", "--rtol", "-1"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gauss.json");
    std::fs::write(&config, r#"{"figure": "custom", "d": 2, "r": 1, "n_list": [4], "n_rule": "n2", "kernel": "gaussian", "methods": ["kq-ksmuZ"]}"#)
        .unwrap();
    let output = cli().args(["--config", config.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(output.stdout.is_empty());
}
