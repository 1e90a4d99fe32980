//! End-to-end checks of the `fdcrn` binary: argument handling, file
//! outputs, and the CSV contract seen by plotting tools.

use std::path::Path;
use std::process::{Command, Output};

use fdcrn_cli::CSV_HEADER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdcrn"))
}

fn run_ok(args: &[&str]) -> (String, String) {
    let out = bin().args(args).output().expect("spawn fdcrn");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(out.status.success(), "fdcrn {args:?} failed\nstderr:\n{stderr}");
    (stdout, stderr)
}

fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn fdcrn");
    assert!(!out.status.success(), "fdcrn {args:?} unexpectedly succeeded");
    out
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER), "header mismatch");
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn power_sweep_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let (stdout, stderr) = run_ok(&[
        "run",
        "--experiment",
        "fig2",
        "--engine",
        "analytic",
        "--levels",
        "100",
        "--out",
        csv_path.to_str().unwrap(),
        "--plot-script",
    ]);
    assert!(stdout.is_empty(), "CSV went to a file, stdout should be quiet");
    assert!(stderr.contains("evaluating 11 point(s)"), "stderr: {stderr}");

    let rows = data_rows(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 11);
    for row in &rows {
        assert_eq!(row.len(), CSV_HEADER.split(',').count());
        assert!(row[1].parse::<f64>().unwrap() > 0.0, "R_d_analytic populated");
        assert!(row[2].is_empty() && row[3].is_empty(), "no simulator columns");
    }
    let powers: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(powers.first(), Some(&10.0));
    assert_eq!(powers.last(), Some(&30.0));

    let gp = std::fs::read_to_string(csv_path.with_extension("gp")).unwrap();
    assert!(gp.contains("sweep.csv"), "plot script should reference the CSV");
}

#[test]
fn single_point_run_prints_one_row() {
    let (stdout, _) = run_ok(&[
        "run",
        "--power-dbm",
        "18",
        "--engine",
        "both",
        "--blocks",
        "20000",
        "--replicas",
        "2",
        "--levels",
        "50",
        "--seed",
        "7",
    ]);
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0], "18");
    let r_d_analytic: f64 = row[1].parse().unwrap();
    let r_d_sim: f64 = row[2].parse().unwrap();
    assert!(r_d_analytic > 0.0 && r_d_sim > 0.0);
    assert!(row[3].parse::<f64>().unwrap() > 0.0, "stderr column populated");
    assert!(row[11].parse::<u32>().unwrap() > 0, "level threshold present");
    assert_eq!(row[12], "7", "seed recorded for reproduction");
}

#[test]
fn custom_scenario_round_trips_through_toml() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(
        &cfg,
        r#"
            p_d = "100 mW"
            k = 1.0
            eta = 0.5
            n0 = "1e-5 W"
            alpha = 3.0
            d_ac = 3.0
            d_cd = 3.0
            d_db = 14.0
            m = [3, 3, 3, 1, 1, 1]
            capacity = 5e-3
            levels = 120
            e_t = 2e-3
        "#,
    )
    .unwrap();
    let (stdout, _) = run_ok(&[
        "run",
        "--experiment",
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--engine",
        "analytic",
    ]);
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 1, "custom experiments evaluate the file as one point");
    let dbm: f64 = rows[0][0].parse().unwrap();
    assert!((dbm - 20.0).abs() < 1e-9, "100 mW is 20 dBm, got {dbm}");
}

#[test]
fn custom_without_config_is_an_error() {
    let out = run_err(&["run", "--experiment", "custom"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--config"), "stderr: {stderr}");
}

#[test]
fn invalid_scenario_file_is_reported_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    // transmit energy above the battery capacity is impossible
    std::fs::write(
        &cfg,
        r#"
            p_d = 0.1
            k = 1.0
            eta = 0.5
            n0 = 1e-5
            alpha = 3.0
            d_ac = 3.0
            d_cd = 3.0
            d_db = 14.0
            m = [3, 3, 3, 1, 1, 1]
            capacity = 5e-3
            levels = 100
            e_t = 6e-3
        "#,
    )
    .unwrap();
    let out = run_err(&["run", "--experiment", "custom", "--config", cfg.to_str().unwrap()]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("loading scenario"), "stderr: {stderr}");
    assert!(stderr.contains("broken.toml"), "stderr: {stderr}");
}

#[test]
fn chain_dump_writes_stationary_law_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("chain");
    run_ok(&["chain", "--levels", "40", "--out", prefix.to_str().unwrap()]);

    let pi_text =
        std::fs::read_to_string(Path::new(&format!("{}_pi.csv", prefix.display()))).unwrap();
    let mut lines = pi_text.lines();
    assert_eq!(lines.next(), Some("level,pi"));
    let mass: f64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-9, "stationary mass {mass}");
    assert_eq!(pi_text.lines().count(), 42, "41 levels plus a header");

    let v_text =
        std::fs::read_to_string(Path::new(&format!("{}_v.csv", prefix.display()))).unwrap();
    assert!(!v_text.is_empty());
    assert_eq!(v_text.lines().count(), 41, "one row per battery level");
}

#[test]
fn trace_prints_a_block_table() {
    let (stdout, _) = run_ok(&[
        "run",
        "--power-dbm",
        "20",
        "--engine",
        "sim",
        "--blocks",
        "12",
        "--replicas",
        "1",
        "--levels",
        "50",
        "--trace",
    ]);
    assert!(
        stdout.contains("block,start_level,mode,secondary_ok,primary_ok"),
        "stdout: {stdout}"
    );
    assert!(
        stdout.contains(",transmit,") || stdout.contains(",harvest,"),
        "at least one traced block: {stdout}"
    );
}
