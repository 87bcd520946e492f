use std::process::{Command, Output};

fn smallcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallcell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn single_point_sweep_favours_on_off() {
    let o = smallcell(&["efficiency-sweep", "--lambda-b-min", "333", "--lambda-b-max", "333", "--points", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], "all-on");
    assert_eq!(rows[1][2], "on-off");
    let eta: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(eta[1] / eta[0] > 1.0);
}

#[test]
fn floats_round_trip() {
    let o = smallcell(&["efficiency-sweep", "--points", "3", "--mode", "on-off"]);
    for row in csv_rows(&stdout(&o)) {
        let v: f64 = row[3].parse().unwrap();
        assert_eq!(format!("{v:.16e}"), row[3]);
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = smallcell(&[
            "user-rate-sweep",
            "--mu",
            "1,2",
            "--realizations",
            "4",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let one = smallcell(&["dump-pattern", "--seed", "5", "--realization", "3"]);
    let two = smallcell(&["dump-pattern", "--seed", "5", "--realization", "3"]);
    assert_eq!(one.stdout, two.stdout);
    let other = smallcell(&["dump-pattern", "--seed", "6", "--realization", "3"]);
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn config_errors_exit_two_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "alpha = 3.67\n\nwavelength = 3 m\n").unwrap();
    let o = smallcell(&["--config", path.to_str().unwrap(), "optimize"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:3") && err.contains("wavelength") && err.contains("unknown key"), "{err}");

    std::fs::write(&path, "p0_circuit = 4 W\n").unwrap();
    let o = smallcell(&["--config", path.to_str().unwrap(), "optimize"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:1") && err.contains("p0_circuit > p_off"), "{err}");

    let o = smallcell(&["--set", "delta=1.2", "optimize"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < delta < 1"));

    let o = smallcell(&["optimize", "--mode", "sometimes"]);
    assert_eq!(o.status.code(), Some(2));
    let o = smallcell(&["dump-pattern", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    std::fs::write(&path, "lambda_u = 500 per_km2\nmode = all-on\n").unwrap();
    let o = smallcell(&["--config", path.to_str().unwrap(), "optimize", "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "5.0000000000000000e2");
    assert_eq!(rows[0][1], "all-on");

    let o = smallcell(&[
        "--config",
        path.to_str().unwrap(),
        "--mode",
        "on-off",
        "optimize",
        "--lambda-u",
        "370",
        "--format",
        "csv",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][0], "3.7000000000000000e2");
    assert_eq!(rows[0][1], "on-off");
}

#[test]
fn one_point_grid_equals_single_optimize() {
    let single = smallcell(&["optimize", "--mode", "on-off", "--lambda-u", "370"]);
    let grid = smallcell(&["optimize", "--mode", "on-off", "--set", "lambda_u_grid=370 per_km2"]);
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(single.stdout, grid.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&single.stdout).unwrap();
    let r = &doc["results"][0];
    assert!(r["lambda_b_star"].as_f64().unwrap() <= 370.0);
    assert!(r["unimodal"].as_bool().unwrap());
    assert!(r["search_trace"].as_array().unwrap().len() >= 64);
}

#[test]
fn user_rate_sweep_without_simulation() {
    let o = smallcell(&["user-rate-sweep", "--no-sim", "--mu", "0.5,1,2,4,8"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    for mode in ["all-on", "on-off"] {
        let rates: Vec<f64> = rows.iter().filter(|r| r[1] == mode).map(|r| r[2].parse().unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[1] <= w[0]));
    }
    assert!(rows.iter().all(|r| r[3].is_empty() && r[4].is_empty()));
}

#[test]
fn degenerate_validation_passes_and_injection_fails() {
    let base = ["validate", "--lambda-u", "0", "--lambda-b", "370", "--realizations", "5"];
    let o = smallcell(&base);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["records"][0]["name"], "void_fraction");
    assert_eq!(doc["records"][0]["empirical"].as_f64(), Some(1.0));
    assert_eq!(doc["passed"], true);

    let mut args = base.to_vec();
    args.extend(["--perturb-analytic", "cell_rate/on-off=0.5"]);
    let o = smallcell(&args);
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["passed"], false);
}

#[test]
fn validation_report_covers_every_estimator() {
    let o = smallcell(&["validate", "--realizations", "10", "--format", "csv"]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    let rows = csv_rows(&stdout(&o));
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    for n in [
        "void_fraction",
        "cell_count_total_variation",
        "received_power_shortfall",
        "link_rate",
        "outage",
        "cell_rate",
        "user_rate",
    ] {
        assert!(names.contains(&n), "{n}");
    }
    assert_eq!(rows.len(), 3 + 4 * 2);
}
