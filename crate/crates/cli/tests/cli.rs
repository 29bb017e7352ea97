use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fi_traffic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fi-traffic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = fi_traffic(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a CSV with `#` comment lines and one header line.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{name}-{}", std::process::id()))
}

#[test]
fn simulate_is_byte_identical_for_identical_config() {
    let args = [
        "simulate",
        "--L",
        "5000",
        "--rho",
        "0.3",
        "--steps",
        "20",
        "--replicas",
        "4",
        "--seed",
        "9",
    ];
    let first = fi_traffic(&args);
    let second = fi_traffic(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.starts_with("# fi-traffic "));
    assert!(text.contains("\"seed\":9"));
    assert_eq!(rows(&text).len(), 21);

    let other_seed = fi_traffic(&[
        "simulate",
        "--L",
        "5000",
        "--rho",
        "0.3",
        "--steps",
        "20",
        "--replicas",
        "4",
        "--seed",
        "10",
    ]);
    assert_ne!(text.as_bytes(), other_seed.stdout.as_slice());
}

#[test]
fn empty_ring_has_zero_flow() {
    let out = stdout(&["simulate", "--L", "8", "--rho", "0", "--steps", "5"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[2] == "0"));
}

#[test]
fn free_flow_and_jammed_runs_approach_the_steady_state() {
    for (rho, target) in [("0.3", 0.6), ("0.35", 0.65)] {
        let out = stdout(&[
            "simulate", "--m", "2", "--L", "100000", "--rho", rho, "--steps", "100", "--init",
            "fixed",
        ]);
        let last = rows(&out).pop().unwrap();
        let flow: f64 = last[2].parse().unwrap();
        assert!((flow - target).abs() < 0.03, "rho={rho}: flow {flow}");
    }
}

#[test]
fn exact_grid_gives_three_ordered_curves() {
    let out = stdout(&[
        "exact", "--m", "2", "--grid", "0:1:0.01", "--times", "1,5,100",
    ]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 303);
    let p = |t: usize, i: usize| -> f64 { rows[t * 101 + i][2].parse().unwrap() };
    for i in 0..101 {
        assert!(
            p(0, i) + 1e-12 >= p(1, i) && p(1, i) + 1e-12 >= p(2, i),
            "grid index {i}"
        );
    }
}

#[test]
fn exact_time_series_matches_rational_values() {
    let out = stdout(&[
        "exact", "--m", "2", "--rho", "1/3", "--steps", "100", "--mode", "exact",
    ]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][5], "8/27");
    assert_eq!(rows[1][5], "160/729");
    let flow: f64 = rows[100][3].parse().unwrap();
    assert!(flow > 0.6 && flow < 2.0 / 3.0);
}

#[test]
fn empty_grid_gives_no_rows() {
    let out = stdout(&["exact", "--grid", ""]);
    assert!(rows(&out).is_empty());
}

#[test]
fn preimages_with_oracle_agree() {
    let out = stdout(&["preimages", "--m", "1", "--steps", "1", "--oracle"]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["formula"]["total"], "3");
    assert_eq!(doc["verdict"], "equal");

    let doc: serde_json::Value = serde_json::from_str(&stdout(&[
        "preimages",
        "--m",
        "2",
        "--steps",
        "2",
        "--oracle",
    ]))
    .unwrap();
    assert_eq!(doc["formula"], doc["oracle"]);

    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&["preimages", "--m", "2", "--steps", "0"])).unwrap();
    assert_eq!(doc["formula"]["total"], "1");
    assert!(doc.get("oracle").is_none());
}

#[test]
fn infeasible_oracle_is_reported() {
    let out = fi_traffic(&["preimages", "--m", "3", "--steps", "6", "--oracle"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource limit"));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_parameters_exit_non_zero() {
    for args in [
        &["simulate", "--L", "10", "--rho", "1.5"][..],
        &["simulate", "--L", "10"],
        &["simulate", "--rho", "0.2"],
        &["simulate", "--L", "10", "--cars", "11", "--init", "fixed"],
        &["simulate", "--L", "10", "--rho", "0.2", "--m", "0"],
        &["exact", "--grid", "0:1:0"],
        &["exact", "--rho", "x"],
        &["exact", "--m", "2"],
    ] {
        let out = fi_traffic(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("error"),
            "{args:?}"
        );
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = scratch("config.json");
    fs::write(
        &path,
        r#"{"m": 2, "rho": "1/3", "steps": 3, "mode": "exact"}"#,
    )
    .unwrap();
    let config = path.to_str().unwrap();
    let from_file = stdout(&["exact", "--config", config]);
    assert_eq!(rows(&from_file).len(), 4);
    assert!(from_file.contains("8/27"));

    let overridden = stdout(&[
        "exact", "--config", config, "--steps", "1", "--mode", "float",
    ]);
    assert_eq!(rows(&overridden).len(), 2);
    assert!(!overridden.contains("8/27"));
    assert!(overridden.contains("\"steps\":1"));

    fs::write(&path, r#"{"speed": 2}"#).unwrap();
    assert!(!fi_traffic(&["exact", "--config", config]).status.success());
    fs::remove_file(&path).unwrap();
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let path = scratch("series.csv");
    let args = ["exact", "--m", "3", "--rho", "0.2", "--steps", "10"];
    let printed = fi_traffic(&args).stdout;
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = fi_traffic(&with_out);
    assert!(out.status.success() && out.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), printed);
    fs::remove_file(&path).unwrap();
}

#[test]
fn quick_verification_passes() {
    let out = stdout(&["verify", "--quick"]);
    assert!(out.contains("13/13 checks passed"), "{out}");
}
