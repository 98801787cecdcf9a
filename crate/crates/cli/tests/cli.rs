use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qfall_cli::error::{CliError, EXIT_CONVERGENCE, EXIT_IO, EXIT_USAGE};
use serde_json::Value;

fn qfall(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfall"));
    cmd.args(args).env_remove("QFALL_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("QFALL_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TABLE1: [f64; 9] = [0.0012, 0.0024, 0.0085, 0.0111, 0.0148, 0.1305, 0.5428, 0.6826, 0.6826];

#[test]
fn table1_csv_to_stdout() {
    let o = qfall(&["table1", "--format", "csv"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "p_exact").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for (row, want) in rows.iter().zip(TABLE1) {
        let p: f64 = row[col].parse().unwrap();
        assert!((p - want).abs() <= 1e-4, "{}: {p} vs {want}", &row[0]);
    }
}

#[test]
fn csv_is_byte_identical_across_runs() {
    for args in [
        &["table1", "--format", "csv"][..],
        &["table2", "--format", "csv", "--variant", "both"],
        &["evolve", "--t", "0,0.5", "--nz", "50", "--format", "csv"],
        &[
            "oracle",
            "table1",
            "--n-samples",
            "50000",
            "--seed",
            "11",
            "--format",
            "csv",
        ],
    ] {
        let a = qfall(args, None);
        let b = qfall(args, None);
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn json_round_trips_exactly() {
    let csv_out = stdout(&qfall(&["table2", "--variant", "both", "--format", "csv"], None));
    let json_out = stdout(&qfall(&["table2", "--variant", "both", "--format", "json"], None));
    let v: Value = serde_json::from_str(&json_out).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let mut rdr = csv::Reader::from_reader(csv_out.as_bytes());
    for (rec, row) in rdr.records().zip(rows) {
        let rec = rec.unwrap();
        let from_csv: f64 = rec[6].parse().unwrap();
        assert_eq!(row["p_midpoint"].as_f64().unwrap().to_bits(), from_csv.to_bits());
    }
    assert_eq!(v["params"]["u"], 1000.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["table1", "--sigma0", "-1"][..],
        &["arrival-sweep", "--points", "0"],
        &["table1", "--variant", "fast"],
        &["oracle"],
        &["arrival-sweep", "--mass-min", "10", "--mass-max", "1"],
        &["evolve", "--format", "text"],
        &["no-such-command"],
    ] {
        let o = qfall(args, None);
        assert_eq!(o.status.code(), Some(EXIT_USAGE), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let o = qfall(&["table1", "--sigma0", "-1"], None);
    assert!(stderr(&o).contains("sigma0"));
}

#[test]
fn missing_files_exit_four() {
    let o = qfall(&["table1", "--config", "/nonexistent/qfall.conf"], None);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    assert!(stderr(&o).contains("/nonexistent/qfall.conf"));
    let o = qfall(&["table1", "--masses", "/nonexistent/masses.txt"], None);
    assert_eq!(o.status.code(), Some(EXIT_IO));

    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = qfall(&["table1", "--out-dir", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn convergence_maps_to_exit_three() {
    let e: CliError = qfall_core::Error::Convergence {
        what: "test",
        iterations: 1,
        estimate: 0.0,
        error_estimate: 1.0,
    }
    .into();
    assert_eq!(e.exit_code(), EXIT_CONVERGENCE);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "scenario = table1\ng = 981\nformat = json\n").unwrap();
    let o = qfall(&["table1", "--config", conf.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["g_accel"], 981.0);

    let o = qfall(&["table1", "--config", conf.to_str().unwrap(), "--g", "975"], None);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["g_accel"], 975.0);

    let o = qfall(&["table2", "--config", conf.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(stderr(&o).contains("scenario"));

    fs::write(&conf, "colour = blue\n").unwrap();
    let o = qfall(&["table1", "--config", conf.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfall(&["table2", "--format", "csv"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(dir.path().join("table2.csv").is_file());
}

#[test]
fn arrival_sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfall(
        &[
            "arrival-sweep",
            "--mass-min",
            "1",
            "--mass-max",
            "1e9",
            "--points",
            "10",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let data = fs::read_to_string(dir.path().join("arrival_sweep.csv")).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some("mass_amu,tau_s"));
    let taus: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(taus.len(), 10);
    let classical = (2.0 * 1e-2f64 / 980.0).sqrt();
    assert!((taus[9] - classical).abs() / classical < 1e-3);
    assert!(taus[0] > classical * 1.001);

    let svg = fs::read_to_string(dir.path().join("arrival_sweep.svg")).unwrap();
    assert!(svg.contains("class=\"asymptote\""));
    assert_eq!(svg.matches("class=\"marker\"").count(), 10);
    assert!(svg.contains("4.5175e-3"));
    assert!(dir.path().join("arrival_sweep_asymptote.csv").is_file());
}

#[test]
fn evolve_json() {
    let o = qfall(
        &["evolve", "--mass", "720", "--t", "1", "--nz", "5", "--format", "json"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    // Symmetric grid about the centre: the middle sample is the peak.
    let mid = rows[2]["rho_per_cm"].as_f64().unwrap();
    assert!(rows.iter().all(|r| r["rho_per_cm"].as_f64().unwrap() <= mid));
}

#[test]
fn help_exits_zero() {
    let o = qfall(&["--help"], None);
    assert!(o.status.success());
    assert!(stdout(&o).contains("arrival-sweep"));
}
